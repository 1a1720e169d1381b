#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pinnfm/landscape.hpp"
#include "pinnfm/lbfgs.hpp"
#include "pinnfm/losses.hpp"

using namespace pinnfm;

namespace {

Vector decaying_diagonal(int d) {
  Vector diag(d);
  diag(0) = 3.0;
  for (int i = 1; i < d; ++i) diag(i) = 1.0 / i;
  return diag;
}

// f(x) = 1/2 x'Ax + b'x with a dense symmetric A.
FunctionObjective dense_quadratic(const Matrix& a, const Vector& b) {
  return FunctionObjective(static_cast<std::size_t>(b.size()), [a, b](const Vector& x, Vector& g) {
    const Vector ax = a * x;
    g = ax + b;
    return 0.5 * x.dot(ax) + b.dot(x);
  });
}

double residual_ratio(const Objective& f, const Vector& x, const EigenPair& p) {
  const Vector hv = f.hessian_vector_product(x, p.vector);
  return (hv - p.value * p.vector).norm() / std::abs(p.value);
}

}  // namespace

TEST(Eigen, DiagonalQuadraticDominantPair) {
  const DiagonalQuadratic f(decaying_diagonal(10));
  const EigenResult r = top_eigenpairs(f, Vector::Zero(10));
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.pairs[0].value, 3.0, 1e-6);
  EXPECT_NEAR(std::abs(r.pairs[0].vector(0)), 1.0, 1e-4);
  EXPECT_NEAR(r.pairs[1].value, 1.0, 1e-4);
  EXPECT_NEAR(std::abs(r.pairs[1].vector(1)), 1.0, 1e-3);
}

TEST(Eigen, ResidualOrthogonalityAndOrdering) {
  const DiagonalQuadratic f(decaying_diagonal(30));
  const Vector x = Vector::Zero(30);
  const EigenResult r = top_eigenpairs(f, x);
  for (const EigenPair& p : r.pairs) {
    EXPECT_NEAR(p.vector.norm(), 1.0, 1e-12);
    EXPECT_LT(residual_ratio(f, x, p), 1e-3);
  }
  EXPECT_LT(std::abs(r.pairs[0].vector.dot(r.pairs[1].vector)), 1e-6);
  EXPECT_GE(r.pairs[0].value, r.pairs[1].value);
}

TEST(Eigen, SeededStartIsReproducible) {
  const DiagonalQuadratic f(decaying_diagonal(15));
  const EigenResult a = top_eigenpairs(f, Vector::Zero(15));
  const EigenResult b = top_eigenpairs(f, Vector::Zero(15));
  EXPECT_EQ(a.pairs[0].vector, b.pairs[0].vector);
  EXPECT_EQ(a.pairs[1].value, b.pairs[1].value);
}

TEST(Eigen, CapReturnsBestEstimateUnconverged) {
  Vector diag = Vector::Ones(20);
  diag(0) = 1.001;
  const DiagonalQuadratic f(diag);
  EigenConfig cfg;
  cfg.max_iters = 3;
  cfg.residual_tol = 1e-12;
  const EigenResult r = top_eigenpairs(f, Vector::Zero(20), cfg);
  EXPECT_FALSE(r.converged);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.pairs[0].value));
}

TEST(Eigen, ConfigValidation) {
  EigenConfig c;
  c.k = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Eigen, TrainedSmallPinnHessianPairs) {
  const PdeProblem problem = PdeProblem::convection(5.0);
  const Architecture arch{2, 8, 8, 1};
  const PinnObjective f(problem, sample_collocation(problem, 20, 60, 20, 3), 1.0, arch);
  LbfgsConfig lc;
  lc.max_iters = 300;
  const Vector x = minimize(f, NetworkParams::glorot(3, arch).flat(), lc).x;
  const EigenResult r = top_eigenpairs(f, x);
  ASSERT_TRUE(r.converged);
  for (const EigenPair& p : r.pairs) {
    EXPECT_LT(residual_ratio(f, x, p), 1e-3);
  }
  EXPECT_LT(std::abs(r.pairs[0].vector.dot(r.pairs[1].vector)), 1e-6);
  EXPECT_GE(std::abs(r.pairs[0].value), std::abs(r.pairs[1].value));
}

TEST(Surface, ZeroHalfRangeIsTrainedLoss) {
  const DiagonalQuadratic f(decaying_diagonal(4));
  const Vector x = Vector::LinSpaced(4, 0.5, 2.0);
  SurfaceConfig cfg;
  cfg.half_range = 0.0;
  const LandscapeSurface s = loss_surface(f, x, Vector::Unit(4, 0), Vector::Unit(4, 1), cfg);
  ASSERT_EQ(s.losses.rows(), 1);
  ASSERT_EQ(s.losses.cols(), 1);
  EXPECT_EQ(s.losses(0, 0), f.value(x));
  EXPECT_EQ(s.loss_range(), 0.0);
}

TEST(Surface, CenterCellIsExactlyTheTrainedLoss) {
  const PdeProblem problem = PdeProblem::reaction(3.0);
  const Architecture arch{2, 6, 1};
  const PinnObjective f(problem, sample_collocation(problem, 10, 30, 10, 1), 1.0, arch);
  const Vector x = NetworkParams::glorot(1, arch).flat();
  const Vector v1 = Vector::Unit(x.size(), 2);
  const Vector v2 = Vector::Unit(x.size(), 5);
  for (int res : {5, 41}) {
    SurfaceConfig cfg;
    cfg.resolution = res;
    cfg.half_range = 0.7;
    const LandscapeSurface s = loss_surface(f, x, v1, v2, cfg);
    const int c = res / 2;
    EXPECT_EQ(s.alphas[c], 0.0);
    EXPECT_EQ(s.betas[c], 0.0);
    EXPECT_NEAR(s.losses(c, c), f.value(x), 1e-10);
    EXPECT_EQ(s.center_loss, s.losses(c, c));
    EXPECT_DOUBLE_EQ(s.alphas.front(), -0.7);
    EXPECT_DOUBLE_EQ(s.alphas.back(), 0.7);
  }
}

TEST(Surface, QuadraticLossIsAnExactParaboloid) {
  const int d = 6;
  Matrix m = Matrix::Random(d, d);
  const Matrix a = m * m.transpose() + Matrix::Identity(d, d);
  const Vector b = Vector::LinSpaced(d, -1.0, 1.0);
  const FunctionObjective f = dense_quadratic(a, b);
  const Vector x = Vector::LinSpaced(d, 0.3, -0.4);
  Vector v1 = Vector::Random(d).normalized();
  Vector v2 = Vector::Random(d);
  v2 = (v2 - v2.dot(v1) * v1).normalized();

  SurfaceConfig cfg;
  cfg.resolution = 11;
  cfg.half_range = 1.5;
  const LandscapeSurface s = loss_surface(f, x, v1, v2, cfg);

  const int n = cfg.resolution * cfg.resolution;
  Matrix design(n, 6);
  Vector z(n);
  for (int i = 0; i < cfg.resolution; ++i) {
    for (int j = 0; j < cfg.resolution; ++j) {
      const double p = s.alphas[i];
      const double q = s.betas[j];
      design.row(i * cfg.resolution + j) << 1.0, p, q, p * p, p * q, q * q;
      z(i * cfg.resolution + j) = s.losses(i, j);
    }
  }
  const Vector coef = design.colPivHouseholderQr().solve(z);
  const double fit = (design * coef - z).cwiseAbs().maxCoeff();
  EXPECT_LT(fit, 1e-8);
  EXPECT_NEAR(coef(3), 0.5 * v1.dot(a * v1), 1e-9);
}

TEST(Surface, NonFiniteCellsAreInfinity) {
  const FunctionObjective f(1, [](const Vector& x, Vector& g) {
    g = Vector::Zero(1);
    return x(0) > 0.5 ? std::nan("") : x(0) * x(0);
  });
  SurfaceConfig cfg;
  cfg.resolution = 3;
  const LandscapeSurface s = loss_surface(f, Vector::Zero(1), Vector::Ones(1), Vector::Zero(1), cfg);
  EXPECT_TRUE(std::isinf(s.losses(2, 0)));
  EXPECT_EQ(s.losses(0, 1), 1.0);
  EXPECT_EQ(s.loss_range(), 1.0);
}

TEST(Surface, ParallelMatchesSerial) {
  const DiagonalQuadratic f(decaying_diagonal(5));
  const Vector x = Vector::Ones(5);
  SurfaceConfig serial;
  serial.resolution = 9;
  SurfaceConfig threaded = serial;
  threaded.jobs = 3;
  const auto a = loss_surface(f, x, Vector::Unit(5, 0), Vector::Unit(5, 3), serial);
  const auto b = loss_surface(f, x, Vector::Unit(5, 0), Vector::Unit(5, 3), threaded);
  EXPECT_EQ(a.losses, b.losses);
}

TEST(Surface, WritesMatrixAndMetadata) {
  const DiagonalQuadratic f(decaying_diagonal(3));
  SurfaceConfig cfg;
  cfg.resolution = 3;
  const auto s = loss_surface(f, Vector::Zero(3), Vector::Unit(3, 0), Vector::Unit(3, 1), cfg, 3.0,
                              1.0);
  const auto dir = std::filesystem::temp_directory_path() / "pinnfm_surface_test";
  std::filesystem::remove_all(dir);
  write_surface(s, dir, "s");
  std::ifstream csv(dir / "s.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2);
  }
  EXPECT_EQ(rows, 3);
  const auto meta = nlohmann::json::parse(std::ifstream(dir / "s.json"));
  EXPECT_EQ(meta["resolution"], 3);
  EXPECT_EQ(meta["eigenvalues"][0], 3.0);
  EXPECT_EQ(meta["trained_loss"], 0.0);
  std::filesystem::remove_all(dir);
}

TEST(Condition, ReferenceValues) {
  const auto conv = condition_estimate(PdeProblem::convection(30.0), 256, 0.01);
  EXPECT_NEAR(conv.value, 5.898e7, 1e4);
  EXPECT_DOUBLE_EQ(conv.value, 7680.0 * 7680.0);
  const auto rd = condition_estimate(PdeProblem::reaction_diffusion(5.0, 5.0), 256, 0.01);
  EXPECT_NEAR(rd.value / 1.074e11, 1.0, 1e-3);
  EXPECT_GT(rd.value, condition_estimate(PdeProblem::convection(5.0), 256, 0.01).value);
  EXPECT_EQ(condition_estimate(PdeProblem::convection(0.0), 64, 0.1).value, 0.0);
  const auto re = condition_estimate(PdeProblem::reaction(4.0), 128, 0.1);
  EXPECT_FALSE(re.spatial_scaling);
  EXPECT_EQ(re.value, 16.0);
}

TEST(Condition, Monotone) {
  for (int n : {2, 16, 256}) {
    double prev_b = 0.0, prev_nu = 0.0;
    for (double c : {0.5, 1.0, 5.0, 30.0}) {
      const double b = condition_estimate(PdeProblem::convection(c), n, 0.01).value;
      const double nu = condition_estimate(PdeProblem::reaction_diffusion(c, 1.0), n, 0.01).value;
      EXPECT_GT(b, prev_b);
      EXPECT_GT(nu, prev_nu);
      EXPECT_GT(nu, b);
      EXPECT_GT(condition_estimate(PdeProblem::convection(c), 2 * n, 0.01).value, b);
      EXPECT_GT(condition_estimate(PdeProblem::reaction_diffusion(c, 1.0), 2 * n, 0.01).value, nu);
      prev_b = b;
      prev_nu = nu;
    }
  }
}

TEST(Condition, RejectsBadGrid) {
  EXPECT_THROW(condition_estimate(PdeProblem::convection(1.0), 0, 0.1), DomainError);
  EXPECT_THROW(condition_estimate(PdeProblem::convection(1.0), 4, 0.0), DomainError);
}

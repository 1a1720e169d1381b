#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <random>

#include "pinnfm/oracles.hpp"

using namespace pinnfm;

namespace {

ComplexVector naive_dft(const std::vector<double>& s) {
  const std::size_t n = s.size();
  ComplexVector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = -kTwoPi * static_cast<double>(j * k % n) / static_cast<double>(n);
      acc += s[j] * Complex(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

// Classical RK4 on du/dt = rho u (1 - u).
double rk4_logistic(double u, double rho, double t, double h) {
  const auto f = [rho](double v) { return rho * v * (1.0 - v); };
  const int n = static_cast<int>(std::round(t / h));
  for (int i = 0; i < n; ++i) {
    const double k1 = f(u);
    const double k2 = f(u + 0.5 * h * k1);
    const double k3 = f(u + 0.5 * h * k2);
    const double k4 = f(u + h * k3);
    u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return u;
}

std::vector<double> sampled(std::size_t n, double (*fn)(double)) {
  const SpectralGrid g(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fn(g.xs[i]);
  return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sine(double x) { return std::sin(x); }

}  // namespace

TEST(SpectralGrid, PointsAndWavenumbers) {
  const SpectralGrid g(8);
  EXPECT_DOUBLE_EQ(g.xs[0], 0.0);
  EXPECT_DOUBLE_EQ(g.xs[3], kTwoPi * 3 / 8);
  EXPECT_DOUBLE_EQ(g.spacing(), kTwoPi / 8);
  EXPECT_EQ(g.ks, (std::vector<int>{0, 1, 2, 3, -4, -3, -2, -1}));
}

TEST(Dft, ConstantSignal) {
  const std::vector<double> c(8, 2.5);
  const ComplexVector s = dft(c);
  EXPECT_NEAR(s[0].real(), 20.0, 1e-14);
  for (std::size_t k = 1; k < 8; ++k) EXPECT_NEAR(std::abs(s[k]), 0.0, 1e-14);
}

TEST(Dft, SineMatchesNaiveSummation) {
  const auto s = sampled(256, sine);
  const ComplexVector fast = dft(s);
  const ComplexVector slow = naive_dft(s);
  for (std::size_t k = 0; k < 256; ++k) EXPECT_NEAR(std::abs(fast[k] - slow[k]), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(fast[1]), 128.0, 1e-10);
  EXPECT_NEAR(std::abs(fast[255]), 128.0, 1e-10);
  for (std::size_t k = 2; k < 255; ++k) EXPECT_LT(std::abs(fast[k]), 1e-10);
}

TEST(Dft, NonPowerOfTwoMatchesNaive) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> s(12);
  for (auto& v : s) v = u(gen);
  const ComplexVector fast = dft(s);
  const ComplexVector slow = naive_dft(s);
  for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(std::abs(fast[k] - slow[k]), 0.0, 1e-12);
}

TEST(Dft, RoundTrip) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t n : {8u, 64u, 256u, 12u}) {
    ComplexVector s(n);
    for (auto& v : s) v = Complex(u(gen), u(gen));
    const ComplexVector back = idft(dft(s));
    for (std::size_t i = 0; i < n; ++i) EXPECT_LT(std::abs(back[i] - s[i]), 1e-12) << n;
  }
  EXPECT_TRUE(is_power_of_two(256));
  EXPECT_FALSE(is_power_of_two(12));
  EXPECT_FALSE(is_power_of_two(0));
}

TEST(Convection, TimeZeroIsIdentity) {
  const auto h = sampled(256, sine);
  EXPECT_LT(max_abs_diff(convection_solution(h, 30.0, 0.0), h), 1e-14);
}

TEST(Convection, MatchesCharacteristics) {
  const SpectralGrid g(256);
  const auto h = sampled(256, sine);
  for (double beta : {1.0, 30.0, 50.0}) {
    for (double t : {0.1, 0.37, 1.0}) {
      const auto u = convection_solution(h, beta, t);
      std::vector<double> exact(256);
      for (std::size_t i = 0; i < 256; ++i) exact[i] = std::sin(g.xs[i] - beta * t);
      EXPECT_LT(max_abs_diff(u, exact), 1e-10) << beta << " " << t;
    }
  }
  // x = pi is grid index 128.
  EXPECT_NEAR(convection_solution(h, 1.0, 1.0)[128], std::sin(std::numbers::pi - 1.0), 1e-12);
  EXPECT_NEAR(std::sin(std::numbers::pi - 1.0), 0.841471, 1e-6);
}

TEST(Reaction, FixedPointsAndValues) {
  for (double t : {0.0, 0.5, 3.0}) {
    EXPECT_EQ(reaction_solution(0.0, 5.0, t), 0.0);
    EXPECT_EQ(reaction_solution(1.0, 5.0, t), 1.0);
  }
  const double e = std::exp(1.0);
  EXPECT_NEAR(reaction_solution(0.5, 5.0, 0.2), e / (e + 1.0), 1e-15);
  EXPECT_NEAR(reaction_solution(0.5, 5.0, 0.2), 0.731059, 1e-6);
  EXPECT_NEAR(reaction_solution(0.5, 10.0, 10.0), 1.0, 1e-12);
  EXPECT_EQ(reaction_solution(1e-300, 1e3, 1e3), reaction_solution(1e-300, 1e3, 1e3));
  EXPECT_TRUE(std::isfinite(reaction_solution(0.3, 1e4, 1e4)));
  EXPECT_THROW(reaction_solution(1.5, 5.0, 0.1), DomainError);
  EXPECT_THROW(reaction_solution(-0.1, 5.0, 0.1), DomainError);
}

TEST(Reaction, MatchesRk4) {
  double worst = 0.0;
  for (double h0 : {0.01, 0.2, 0.5, 0.9}) {
    for (double rho : {1.0, 5.0, 10.0}) {
      worst = std::max(worst, std::abs(reaction_solution(h0, rho, 1.0) -
                                       rk4_logistic(h0, rho, 1.0, 1e-4)));
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Reaction, MonotoneInTime) {
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double u = reaction_solution(0.1, 5.0, 0.01 * i);
    EXPECT_GE(u, prev);
    prev = u;
  }
}

TEST(Diffusion, SingleModeDecay) {
  const auto h = sampled(256, sine);
  const auto u = diffusion_step(h, 5.0, 0.01);
  std::vector<double> exact(h);
  for (auto& v : exact) v *= std::exp(-0.05);
  EXPECT_LT(max_abs_diff(u, exact), 1e-12);
}

TEST(Diffusion, TrivialCasesAndErrors) {
  const std::vector<double> c(64, 0.7);
  EXPECT_LT(max_abs_diff(diffusion_step(c, 3.0, 0.4), c), 1e-14);
  const auto h = sampled(64, sine);
  EXPECT_EQ(diffusion_step(h, 1.0, 0.0), h);
  EXPECT_THROW(diffusion_step(h, 0.0, 0.1), DomainError);
  EXPECT_THROW(diffusion_step(h, -1.0, 0.1), DomainError);
  EXPECT_THROW(diffusion_step(h, 1.0, -0.1), DomainError);
}

TEST(Diffusion, ZeroMeanNormNeverGrows) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> s(128);
  for (auto& v : s) v = u(gen);
  double mean = 0.0;
  for (double v : s) mean += v / 128.0;
  for (auto& v : s) v -= mean;
  double before = 0.0;
  for (double v : s) before += v * v;
  for (int i = 0; i < 5; ++i) {
    s = diffusion_step(s, 0.5, 0.01);
    double after = 0.0;
    for (double v : s) after += v * v;
    EXPECT_LE(after, before * (1 + 1e-14));
    before = after;
  }
}

TEST(ReactionDiffusion, NoDiffusionMatchesReaction) {
  PdeProblem p = PdeProblem::reaction_diffusion(1.0, 5.0);
  std::get<ReactionDiffusion>(p.equation).nu = 0.0;
  const SolutionGrid g = reaction_diffusion_solution(p, 50, 64);
  ASSERT_EQ(g.values.cols(), 51);
  std::vector<double> h(64);
  for (std::size_t i = 0; i < 64; ++i) h[i] = p.h(g.xs[i]);
  for (int j : {10, 50}) {
    const auto exact = reaction_solution(h, 5.0, g.ts[static_cast<std::size_t>(j)]);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(g.values(static_cast<Eigen::Index>(i), j), exact[i], 1e-12);
  }
}

TEST(ReactionDiffusion, LargeDiffusionTendsToMean) {
  const PdeProblem p = PdeProblem::reaction_diffusion(1e3, 0.0);
  const SolutionGrid g = reaction_diffusion_solution(p, 10, 64);
  double mean = 0.0;
  for (std::size_t i = 0; i < 64; ++i) mean += p.h(g.xs[i]) / 64.0;
  EXPECT_LT((g.values.col(10).array() - mean).abs().maxCoeff(), 1e-10);
}

TEST(ReactionDiffusion, SelfConvergesUnderStepHalving) {
  const PdeProblem p = PdeProblem::reaction_diffusion(5.0, 5.0);
  const SolutionGrid a = reaction_diffusion_solution(p, 100);
  const SolutionGrid b = reaction_diffusion_solution(p, 200);
  const SolutionGrid c = reaction_diffusion_solution(p, 400);
  const double d_ab = (a.values.col(100) - b.values.col(200)).cwiseAbs().maxCoeff();
  const double d_bc = (b.values.col(200) - c.values.col(400)).cwiseAbs().maxCoeff();
  EXPECT_LT(d_bc, 1e-3);
  EXPECT_LT(2.0 * d_bc, d_ab * 1.05);
}

TEST(ReferenceGrid, ShapesAndLattice) {
  const SolutionGrid g = reference_grid(PdeProblem::convection(1.0));
  EXPECT_EQ(g.nx(), 256u);
  EXPECT_EQ(g.nt(), 100u);
  EXPECT_EQ(g.ts.front(), 0.0);
  EXPECT_EQ(g.ts.back(), 1.0);
  EXPECT_TRUE(g.values.allFinite());
}

TEST(ReferenceGrid, ConvectionBetaZeroIsStatic) {
  const SolutionGrid g = reference_grid(PdeProblem::convection(0.0), 64, 10);
  for (Eigen::Index j = 1; j < 10; ++j) EXPECT_LT((g.values.col(j) - g.values.col(0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ReferenceGrid, ConvectionFiniteDifferenceResidual) {
  const double beta = 30.0;
  const SolutionGrid g = reference_grid(PdeProblem::convection(beta), 256, 1000);
  const double dt = g.ts[1] - g.ts[0];
  const double dx = g.xs[1] - g.xs[0];
  double worst = 0.0;
  double scale = 0.0;
  for (Eigen::Index j = 1; j + 1 < g.values.cols(); ++j) {
    for (Eigen::Index i = 1; i + 1 < g.values.rows(); ++i) {
      const double ut = (g.values(i, j + 1) - g.values(i, j - 1)) / (2 * dt);
      const double ux = (g.values(i + 1, j) - g.values(i - 1, j)) / (2 * dx);
      worst = std::max(worst, std::abs(ut + beta * ux));
      scale = std::max(scale, std::abs(ut));
    }
  }
  EXPECT_LT(worst, 0.1 * scale);
}

TEST(ReferenceGrid, ReactionMatchesFormula) {
  const PdeProblem p = PdeProblem::reaction(5.0);
  const SolutionGrid g = reference_grid(p);
  for (Eigen::Index j = 0; j < 100; j += 9) {
    for (Eigen::Index i = 0; i < 256; i += 13) {
      const double h = p.h(g.xs[static_cast<std::size_t>(i)]);
      EXPECT_NEAR(g.values(i, j), reaction_solution(h, 5.0, g.ts[static_cast<std::size_t>(j)]), 1e-12);
    }
  }
}

TEST(ReferenceGrid, ReactionDiffusionAgreesWithDenseSolver) {
  const PdeProblem p = PdeProblem::reaction_diffusion(5.0, 5.0);
  const SolutionGrid lattice = reference_grid(p, 256, 101, 200);
  const SolutionGrid dense = reaction_diffusion_solution(p, 200);
  // Lattice times are every other solver step.
  for (Eigen::Index j = 0; j < 101; j += 10) {
    EXPECT_LT((lattice.values.col(j) - dense.values.col(2 * j)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GridIo, CsvAndMatrixFormats) {
  const auto dir = std::filesystem::temp_directory_path() / "pinnfm_grid_io";
  std::filesystem::create_directories(dir);
  const SolutionGrid g = reference_grid(PdeProblem::convection(1.0), 4, 3);
  write_grid_csv(g, dir / "g.csv");
  write_grid_matrix(g, dir / "g.mat");
  std::ifstream csv(dir / "g.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "x,t,u");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 12);
  std::ifstream mat(dir / "g.mat");
  int lines = 0;
  while (std::getline(mat, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
    ++lines;
  }
  EXPECT_EQ(lines, 3);
  std::filesystem::remove_all(dir);
}

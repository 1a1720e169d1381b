#include "pinnfm/landscape.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "pinnfm/csv.hpp"
#include "pinnfm/rng.hpp"

namespace pinnfm {

void EigenConfig::validate() const {
  if (k < 1) throw DomainError("k must be >= 1");
  if (max_iters < 1) throw DomainError("max_iters must be >= 1");
  if (!(rayleigh_tol > 0.0)) throw DomainError("rayleigh_tol must be positive");
  if (!(residual_tol > 0.0)) throw DomainError("residual_tol must be positive");
}

namespace {

void project_out(Vector& v, const std::vector<EigenPair>& found) {
  // Twice for stability.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& p : found) v -= p.vector.dot(v) * p.vector;
  }
}

}  // namespace

EigenResult top_eigenpairs(const Objective& objective, const Vector& x, const EigenConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(objective.dimension());
  if (x.size() != n) throw DomainError("parameter vector has the wrong dimension");
  if (cfg.k > n) throw DomainError("k exceeds the parameter count");

  EigenResult result;
  result.converged = true;
  for (int i = 0; i < cfg.k; ++i) {
    Rng rng(cfg.seed, RngStream::kEigen, static_cast<std::uint64_t>(i));
    Vector v(n);
    for (Eigen::Index j = 0; j < n; ++j) v(j) = rng.uniform(-1.0, 1.0);
    project_out(v, result.pairs);
    v.normalize();

    EigenPair best;
    best.residual = std::numeric_limits<double>::infinity();
    double prev_lambda = std::numeric_limits<double>::quiet_NaN();
    for (int it = 1; it <= cfg.max_iters; ++it) {
      Vector w = hessian_vector_product(x, objective, v);
      project_out(w, result.pairs);
      const double lambda = v.dot(w);
      const double residual = (w - lambda * v).norm();
      if (!std::isfinite(lambda) || !std::isfinite(residual)) break;
      if (residual / std::max(std::abs(lambda), 1e-300) <
          best.residual / std::max(std::abs(best.value), 1e-300)) {
        best = {lambda, v, residual, it, false};
      }
      const bool stable = std::abs(lambda - prev_lambda) <= cfg.rayleigh_tol * std::abs(lambda);
      const bool small = residual <= cfg.residual_tol * std::abs(lambda);
      if ((stable && small) || residual == 0.0) {
        best = {lambda, v, residual, it, true};
        break;
      }
      prev_lambda = lambda;
      const double wn = w.norm();
      if (wn == 0.0) break;
      v = w / wn;
    }
    if (best.vector.size() == 0) {
      best.vector = v;
      best.residual = std::numeric_limits<double>::quiet_NaN();
    }
    result.converged = result.converged && best.converged;
    result.pairs.push_back(std::move(best));
  }
  return result;
}

void SurfaceConfig::validate() const {
  if (!(half_range >= 0.0) || !std::isfinite(half_range)) {
    throw DomainError("half_range must be >= 0");
  }
  if (resolution < 1) throw DomainError("resolution must be >= 1");
  if (jobs < 1) throw DomainError("jobs must be >= 1");
}

double LandscapeSurface::loss_range() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < losses.size(); ++i) {
    const double v = losses.data()[i];
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi >= lo ? hi - lo : 0.0;
}

LandscapeSurface loss_surface(const Objective& objective, const Vector& x, const Vector& v1,
                              const Vector& v2, const SurfaceConfig& cfg, double eig1,
                              double eig2) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(objective.dimension());
  if (x.size() != n || v1.size() != n || v2.size() != n) {
    throw DomainError("surface directions must match the parameter count");
  }
  const int res = cfg.half_range == 0.0 ? 1 : cfg.resolution;
  LandscapeSurface s;
  s.eig1 = eig1;
  s.eig2 = eig2;
  s.half_range = cfg.half_range;
  for (int i = 0; i < res; ++i) {
    // Symmetric integer numerator keeps the middle coordinate exactly zero.
    const double a = res == 1 ? 0.0 : cfg.half_range * (2 * i - (res - 1)) / (res - 1);
    s.alphas.push_back(a);
  }
  s.betas = s.alphas;
  s.losses.resize(res, res);

  const auto cell = [&](Eigen::Index idx) {
    const Eigen::Index i = idx / res;
    const Eigen::Index j = idx % res;
    Vector p = x;
    if (s.alphas[i] != 0.0) p += s.alphas[i] * v1;
    if (s.betas[j] != 0.0) p += s.betas[j] * v2;
    const double f = objective.value(p);
    s.losses(i, j) = std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };
  const Eigen::Index cells = static_cast<Eigen::Index>(res) * res;
  const auto workers = std::min<Eigen::Index>(cfg.jobs, cells);
  if (workers <= 1) {
    for (Eigen::Index c = 0; c < cells; ++c) cell(c);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    for (Eigen::Index w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (Eigen::Index c = next++; c < cells; c = next++) cell(c);
      });
    }
    for (auto& t : pool) t.join();
  }
  s.center_loss = s.losses(res / 2, res / 2);
  return s;
}

void write_surface(const LandscapeSurface& surface, const std::filesystem::path& dir,
                   const std::string& stem) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / (stem + ".csv"), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write surface to " + dir.string());
    for (Eigen::Index i = 0; i < surface.losses.rows(); ++i) {
      std::vector<std::string> row;
      for (Eigen::Index j = 0; j < surface.losses.cols(); ++j) {
        row.push_back(format_double(surface.losses(i, j)));
      }
      os << csv_row(row) << '\n';
    }
  }
  nlohmann::ordered_json meta;
  meta["eigenvalues"] = {surface.eig1, surface.eig2};
  meta["half_range"] = surface.half_range;
  meta["resolution"] = surface.losses.rows();
  meta["trained_loss"] = surface.center_loss;
  meta["loss_range"] = surface.loss_range();
  meta["rows"] = "alpha along v1";
  meta["cols"] = "beta along v2";
  std::ofstream os(dir / (stem + ".json"), std::ios::binary);
  os << meta.dump(2) << '\n';
}

ConditionEstimate condition_estimate(const PdeProblem& problem, int n, double delta_t) {
  if (n < 1) throw DomainError("N must be >= 1");
  if (!(delta_t > 0.0)) throw DomainError("delta_t must be positive");
  ConditionEstimate c;
  c.variant = problem.kind();
  c.n = n;
  c.delta_t = delta_t;
  const double nn = n;
  if (const auto* conv = std::get_if<Convection>(&problem.equation)) {
    c.value = (conv->beta * nn) * (conv->beta * nn);
  } else if (const auto* rd = std::get_if<ReactionDiffusion>(&problem.equation)) {
    c.value = (rd->nu * nn * nn) * (rd->nu * nn * nn);
  } else {
    const double rho = std::get<Reaction>(problem.equation).rho;
    c.value = rho * rho;
    c.spatial_scaling = false;
  }
  return c;
}

}  // namespace pinnfm

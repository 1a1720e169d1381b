#pragma once

#include <cstdint>
#include <string>

#include "pinnfm/network.hpp"
#include "pinnfm/objective.hpp"
#include "pinnfm/oracles.hpp"
#include "pinnfm/problem.hpp"

namespace pinnfm {

/// Training points for one PINN objective.
///
/// Initial-condition points sit at time `ic_time` (0 for whole-horizon
/// training, the segment start for time marching). Boundary times are paired
/// as u(0, t) vs u(2pi, t).
struct CollocationSet {
  Vector ic_x;
  Vector ic_target;
  double ic_time = 0.0;
  Matrix interior;  ///< 2 x N_f, row 0 = x, row 1 = t
  Vector boundary_t;

  Eigen::Index n_u() const { return ic_x.size(); }
  Eigen::Index n_f() const { return interior.cols(); }
  Eigen::Index n_b() const { return boundary_t.size(); }
};

struct CollocationCounts {
  int n_u = 100;
  int n_f = 1000;
  int n_b = 100;
};

/// Uniform samples over [0, 2pi) x (0, T] with targets h(x_i).
CollocationSet sample_collocation(const PdeProblem& problem, int n_u, int n_f, int n_b,
                                  std::uint64_t seed);

/// Samples for the window [t0, t1]: interior in (t0, t1], boundary times in
/// [t0, t1], no IC points (callers attach their own).
CollocationSet sample_window(double t0, double t1, int n_f, int n_b, std::uint64_t seed,
                             std::uint64_t window_index);

/// The raw PDE residual of `jet` (which carries u itself).
double residual(const PdeProblem& problem, const InputJet& jet);

struct LossBreakdown {
  double ic_loss = 0.0;
  double bc_loss = 0.0;  ///< u periodicity; with diffusion also u_x periodicity
  double residual_loss = 0.0;  ///< already multiplied by lambda
  double total = 0.0;
  double lambda = 1.0;
};

/// ic + bc + (lambda / N_f) sum r^2. Throws NonFiniteLoss naming the term.
LossBreakdown total_loss(const NetworkParams& params, const PdeProblem& problem,
                         const CollocationSet& colloc, double lambda);

/// The network's time input is tau = (t - t0) / (t1 - t0), so every
/// training window spans [0, 1]. The default window is the identity.
struct TimeWindow {
  double t0 = 0.0;
  double t1 = 1.0;

  double length() const { return t1 - t0; }
  double local(double t) const { return (t - t0) / (t1 - t0); }
  void validate() const;
};

/// The PINN training objective over flat network parameters. Collocation
/// times are physical; derivatives in the residual are taken in t.
class PinnObjective final : public Objective {
 public:
  PinnObjective(PdeProblem problem, CollocationSet colloc, double lambda,
                Architecture arch = default_architecture(), TimeWindow window = {});

  std::size_t dimension() const override { return dim_; }
  double value(const Vector& x) const override;
  double value_and_gradient(const Vector& x, Vector& grad) const override;
  /// Exact: forward-mode tangent of the reverse-mode gradient.
  Vector hessian_vector_product(const Vector& x, const Vector& v) const override;
  std::string nonfinite_component(const Vector& x) const override;

  /// Loss terms without the finiteness check.
  LossBreakdown breakdown(const Vector& x) const;

  const PdeProblem& problem() const { return problem_; }
  const CollocationSet& collocation() const { return colloc_; }
  double lambda() const { return lambda_; }
  const Architecture& architecture() const { return arch_; }
  const TimeWindow& window() const { return window_; }

 private:
  PdeProblem problem_;
  CollocationSet colloc_;
  double lambda_;
  Architecture arch_;
  std::size_t dim_;
  TimeWindow window_;
  Matrix data_inputs_;      // IC points then both boundary sides, local time
  Matrix interior_inputs_;  // local time
};

struct ErrorMetrics {
  double relative = 0.0;
  double absolute = 0.0;
};

/// Per-time-slice L2 norms over x, averaged over the nt slices.
ErrorMetrics error_metrics(const SolutionGrid& predicted, const SolutionGrid& reference);

/// Network evaluated on the xs x ts lattice, with times mapped through `window`.
SolutionGrid predict_grid(const NetworkParams& params, const std::vector<double>& xs,
                          const std::vector<double>& ts, const TimeWindow& window = {});

/// CSV row fields: run_id, iteration, ic_loss, bc_loss, residual_loss, total, lambda.
std::string loss_csv_header();
std::string loss_csv_row(const std::string& run_id, long iteration, const LossBreakdown& loss);

}  // namespace pinnfm

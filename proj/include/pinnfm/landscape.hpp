#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pinnfm/objective.hpp"
#include "pinnfm/problem.hpp"

namespace pinnfm {

struct EigenConfig {
  int k = 2;
  int max_iters = 500;           ///< per eigenpair
  double rayleigh_tol = 1e-6;    ///< relative change of the Rayleigh quotient
  double residual_tol = 1e-4;    ///< |Hv - lambda v| / |lambda| also required
  std::uint64_t seed = 0;

  void validate() const;
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;   ///< |Hv - lambda v|
  int iterations = 0;
  bool converged = false;
};

struct EigenResult {
  std::vector<EigenPair> pairs;  ///< dominant first
  bool converged = false;        ///< all pairs converged; otherwise best estimates
};

/// Dominant Hessian eigenpairs of `objective` at x by power iteration, each
/// later pair restricted to the orthogonal complement of the earlier ones.
EigenResult top_eigenpairs(const Objective& objective, const Vector& x,
                           const EigenConfig& cfg = {});

struct SurfaceConfig {
  double half_range = 1.0;
  int resolution = 41;
  int jobs = 1;

  void validate() const;
};

struct LandscapeSurface {
  std::vector<double> alphas;   ///< along v1, row index
  std::vector<double> betas;    ///< along v2, column index
  Matrix losses;                ///< +inf where the loss is not finite
  double eig1 = 0.0;
  double eig2 = 0.0;
  double center_loss = 0.0;
  double half_range = 0.0;

  /// max - min over the finite cells.
  double loss_range() const;
};

/// Total loss at x + a v1 + b v2 on a uniform grid over [-h, h]^2. The
/// middle cell is evaluated at exactly x. half_range == 0 gives a 1x1 grid.
LandscapeSurface loss_surface(const Objective& objective, const Vector& x, const Vector& v1,
                              const Vector& v2, const SurfaceConfig& cfg = {},
                              double eig1 = 0.0, double eig2 = 0.0);

/// Writes `<stem>.csv` (the loss matrix, one alpha per line) and
/// `<stem>.json` (eigenvalues, range, resolution, trained loss).
void write_surface(const LandscapeSurface& surface, const std::filesystem::path& dir,
                   const std::string& stem);

struct ConditionEstimate {
  std::string variant;
  int n = 0;
  double delta_t = 0.0;
  double value = 0.0;
  /// False for pure reaction: there is no spatial operator to scale with N,
  /// and value is just rho^2.
  bool spatial_scaling = true;
};

/// Growth of the residual-term conditioning with grid size N:
/// convection (beta N)^2, reaction-diffusion (nu N^2)^2, reaction rho^2.
ConditionEstimate condition_estimate(const PdeProblem& problem, int n, double delta_t);

}  // namespace pinnfm

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinnfm/objective.hpp"

namespace pinnfm {

struct LbfgsConfig {
  int history = 50;
  int max_iters = 2000;
  double grad_tol = 1e-9;
  double lr = 1.0;  ///< first trial step; later iterations start from 1
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_ls_steps = 25;

  /// Throws DomainError naming the offending field.
  void validate() const;
};

enum class LbfgsStatus {
  kConverged,          ///< gradient norm <= grad_tol
  kMaxIterations,
  kLineSearchFailure,  ///< no step with sufficient decrease; best iterate kept
  kNonFiniteStart,     ///< objective or gradient non-finite at x0
};

std::string to_string(LbfgsStatus status);

struct TraceEntry {
  int iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double step_len = 0.0;  ///< |x_k - x_{k-1}|
};

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  Vector grad;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
  std::vector<TraceEntry> trace;
  int iterations = 0;
  int evaluations = 0;
  int skipped_pairs = 0;  ///< pairs rejected for y.s <= 0
  double min_stored_curvature = 0.0;  ///< smallest y.s among stored pairs
};

/// Full-batch L-BFGS with a strong-Wolfe cubic-interpolation line search.
LbfgsResult minimize(const Objective& objective, const Vector& x0, const LbfgsConfig& cfg);

/// Default learning-rate grid for sweeps.
std::vector<double> default_sweep_lrs();

struct SweepRun {
  double lr = 0.0;
  double final_loss = 0.0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
  int iterations = 0;
};

struct SweepResult {
  double lr = 0.0;
  LbfgsResult best;
  std::vector<SweepRun> runs;
};

class SweepFailure : public std::runtime_error {
 public:
  explicit SweepFailure(std::vector<SweepRun> runs);
  const std::vector<SweepRun>& runs() const { return runs_; }

 private:
  std::vector<SweepRun> runs_;
};

/// Final losses closer than this (relative, floored at 1) count as a tie.
inline constexpr double kSweepTieTol = 1e-12;

/// Runs minimize() once per lr from the same x0 and keeps the lowest final
/// loss; ties go to the smaller lr. Throws SweepFailure if no run ends finite.
SweepResult lr_sweep(const Objective& objective, const Vector& x0, std::span<const double> lrs,
                     const LbfgsConfig& cfg);

std::string trace_csv_header();
void write_trace_csv(const std::vector<TraceEntry>& trace, const std::filesystem::path& path);

}  // namespace pinnfm

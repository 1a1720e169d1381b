#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pinnfm/lbfgs.hpp"
#include "pinnfm/losses.hpp"
#include "pinnfm/network.hpp"
#include "pinnfm/oracles.hpp"
#include "pinnfm/problem.hpp"

namespace pinnfm {

struct TrainConfig {
  PdeProblem problem = PdeProblem::convection(1.0);
  CollocationCounts counts;
  double lambda = 1.0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  LbfgsConfig lbfgs;
  std::vector<double> sweep_lrs = default_sweep_lrs();
  std::size_t grid_nx = kDefaultGridX;
  std::size_t grid_nt = kDefaultGridT;
  int jobs = 1;  ///< seeds trained concurrently

  /// Throws DomainError naming the offending field.
  void validate() const;
};

/// Coefficients (beta or rho) trained in order, each stage warm-started from
/// the previous one. The last entry is the target.
struct CurriculumSchedule {
  std::vector<double> coefficient_path;
  std::optional<int> iters_per_stage;       ///< intermediate stages; default lbfgs.max_iters
  std::optional<int> final_stage_iters;     ///< last stage; default lbfgs.max_iters

  void validate(double target) const;

  /// Convection: 1, 5, 10, 15, ... below the target, then the target.
  /// Reaction-type problems: 1, 2, 3, ... below the target, then the target.
  static CurriculumSchedule defaults_for(const PdeProblem& problem);
};

/// Time marching over segments of length dt that tile [0, T].
struct SegmentSchedule {
  double dt = 0.1;
  /// Interior points across all segments; default TrainConfig::counts.n_f.
  std::optional<int> total_interior;
  /// Start each segment from the previous segment's weights.
  bool warm_start = false;

  int segment_count(double horizon) const;
  /// Per-segment interior counts summing exactly to `total`.
  static std::vector<int> split_budget(int total, int segments);
  void validate(double horizon) const;
};

enum class Regime { kRegular, kCurriculum, kSeq2Seq };
std::string to_string(Regime regime);

/// One curriculum stage or one seq2seq segment.
struct StageLog {
  double coefficient = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double lr = 0.0;
  int iterations = 0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
  LossBreakdown loss;
  ErrorMetrics error;     ///< against the stage problem (curriculum) or window (seq2seq)
  Vector start_params;    ///< parameters at iteration 0 of the stage
  Vector final_params;
  Vector ic_x;            ///< seq2seq: IC locations used for this segment
  Vector ic_target;       ///< seq2seq: IC targets used for this segment
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string status;     ///< "ok" or a failure description
  ErrorMetrics error;
  LossBreakdown loss;     ///< seq2seq: component-wise sum over segments
  double lr = 0.0;        ///< seq2seq: lr of the last segment
  int iterations = 0;     ///< summed over stages/segments
  std::vector<SweepRun> sweep;  ///< final stage/segment sweep
  std::vector<StageLog> stages;
  std::vector<TraceEntry> trace;  ///< optimizer trace of the chosen final run
  SolutionGrid prediction;
  std::optional<NetworkParams> params;  ///< final network (regular, curriculum)
};

struct Aggregate {
  int succeeded = 0;
  double mean_relative = 0.0;
  double min_relative = 0.0;
  double var_relative = 0.0;
  double mean_absolute = 0.0;
  double min_absolute = 0.0;
  double var_absolute = 0.0;
};

struct TrainReport {
  Regime regime = Regime::kRegular;
  PdeProblem problem;
  std::vector<SeedResult> seeds;
  SolutionGrid reference;

  /// Over successful seeds; population variance.
  Aggregate aggregate() const;
  bool all_failed() const;

  static std::string csv_header();
  std::string csv() const;
  nlohmann::json summary() const;
};

/// Observer for tests and progress logging; all members optional.
struct TrainHooks {
  std::function<void(std::uint64_t seed, std::size_t stage, const Vector& start)> on_stage_start;
  std::function<void(std::uint64_t seed, const StageLog& stage)> on_stage_end;
};

TrainReport train_regular(const TrainConfig& cfg, const TrainHooks& hooks = {});
TrainReport train_curriculum(const TrainConfig& cfg, const CurriculumSchedule& schedule,
                             const TrainHooks& hooks = {});
TrainReport train_seq2seq(const TrainConfig& cfg, const SegmentSchedule& schedule,
                          const TrainHooks& hooks = {});

}  // namespace pinnfm

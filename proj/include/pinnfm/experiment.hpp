#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pinnfm/landscape.hpp"
#include "pinnfm/trainers.hpp"

namespace pinnfm {

inline constexpr const char* kVersion = "1.0.0";

/// Invalid experiment configuration; field() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { kRegular, kCurriculum, kSeq2Seq, kLandscape, kOracle };
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kRegular;
  TrainConfig train;
  CurriculumSchedule curriculum;  ///< empty path means defaults_for(problem)
  SegmentSchedule segments;
  SurfaceConfig surface;
  EigenConfig eigen;
  std::vector<double> lambda_sweep;  ///< empty: just train.lambda
  std::filesystem::path out = "run";

  /// Parses the flat JSON document. Unknown keys and every invariant
  /// violation raise ConfigError before any compute starts.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// The fully resolved config; from_json(to_json()) round-trips.
  nlohmann::ordered_json to_json() const;
  void validate() const;
};

struct RunOutcome {
  int exit_code = 0;  ///< 0 success (possibly partial), 3 every seed failed
  std::filesystem::path run_dir;
  std::vector<TrainReport> reports;  ///< one per lambda
  std::vector<LandscapeSurface> surfaces;
};

/// Executes the experiment and writes manifest.json, report.csv,
/// summary.json, grids/, traces/, surfaces/ and snapshots/ under cfg.out.
RunOutcome run_experiment(const ExperimentConfig& cfg);

struct RunSummary {
  std::string regime;
  nlohmann::json problem;
  double mean_relative = 0.0;
  double mean_absolute = 0.0;
  int succeeded = 0;
};

RunSummary read_run(const std::filesystem::path& run_dir);

struct Comparison {
  RunSummary a;
  RunSummary b;
  double delta_relative = 0.0;  ///< b - a
  double delta_absolute = 0.0;
};

/// Throws std::runtime_error when the runs solved different problems.
Comparison compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);
std::string format_comparison(const Comparison& c);

}  // namespace pinnfm

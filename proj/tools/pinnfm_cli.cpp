#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pinnfm/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFailed = 3;

nlohmann::json read_doc(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw pinnfm::ConfigError("config", "cannot open " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw pinnfm::ConfigError("config", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PINN failure-mode experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out;
  int jobs = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--seeds", seeds, "Seeds, overriding the config")->delimiter(',');
  run->add_option("--out", out, "Run directory, overriding the config");
  run->add_option("--jobs", jobs, "Seeds trained in parallel")->check(CLI::PositiveNumber);

  std::string dir_a;
  std::string dir_b;
  auto* compare = app.add_subcommand("compare", "Tabulate errors of two runs of one problem");
  compare->add_option("dir_a", dir_a)->required();
  compare->add_option("dir_b", dir_b)->required();

  CLI11_PARSE(app, argc, argv);

  if (*compare) {
    try {
      std::cout << pinnfm::format_comparison(pinnfm::compare_runs(dir_a, dir_b));
      return kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  pinnfm::ExperimentConfig cfg;
  try {
    nlohmann::json doc = read_doc(config_path);
    if (!seeds.empty() && doc.is_object()) doc["seeds"] = seeds;
    if (!out.empty() && doc.is_object()) doc["out"] = out;
    if (jobs > 0 && doc.is_object()) doc["jobs"] = jobs;
    cfg = pinnfm::ExperimentConfig::from_json(doc);
  } catch (const pinnfm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const pinnfm::RunOutcome outcome = pinnfm::run_experiment(cfg);
    for (const auto& report : outcome.reports) {
      for (const auto& s : report.seeds) {
        std::cout << "seed " << s.seed << ": " << s.status;
        if (s.ok) std::cout << ", relative error " << s.error.relative;
        std::cout << "\n";
      }
    }
    std::cout << "wrote " << outcome.run_dir.string() << "\n";
    return outcome.exit_code == 0 ? kExitOk : kExitFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

#include "pinnfm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pinnfm/csv.hpp"

namespace pinnfm {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kRegular:
      return "regular";
    case ExperimentKind::kCurriculum:
      return "curriculum";
    case ExperimentKind::kSeq2Seq:
      return "seq2seq";
    case ExperimentKind::kLandscape:
      return "landscape";
    case ExperimentKind::kOracle:
      return "oracle";
  }
  return "unknown";
}

namespace {

using json = nlohmann::json;

// Typed access to a flat JSON object that remembers which keys were read.
class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {
    if (!doc_.is_object()) throw ConfigError("config", "top level must be a JSON object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  template <class T>
  std::optional<T> get(const std::string& key) {
    if (!doc_.contains(key)) return std::nullopt;
    used_.insert(key);
    const json& v = doc_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(key, "expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
            throw ConfigError(key, "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(key, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key, e.what());
    }
  }

  template <class T>
  std::optional<std::vector<T>> list(const std::string& key) {
    if (!doc_.contains(key)) return std::nullopt;
    used_.insert(key);
    const json& v = doc_.at(key);
    if (!v.is_array()) throw ConfigError(key, "expected an array");
    std::vector<T> out;
    for (const auto& e : v) {
      if constexpr (std::is_same_v<T, double>) {
        if (!e.is_number()) throw ConfigError(key, "expected an array of numbers");
      } else {
        if (!e.is_number_integer() || (!e.is_number_unsigned() && e.get<long long>() < 0)) {
          throw ConfigError(key, "expected non-negative integers");
        }
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  void reject_unknown() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(it.key(), "unknown key");
    }
  }

  void forbid(const std::string& key, const std::string& why) const {
    if (doc_.contains(key)) throw ConfigError(key, why);
  }

 private:
  const json& doc_;
  std::set<std::string> used_;
};

std::string first_word(const std::string& s) { return s.substr(0, s.find(' ')); }

// Runs a validator, turning DomainError into ConfigError named after the
// first word of its message (validators lead with the field name). `keys`
// maps struct field names to config keys where they differ.
template <class Fn>
void checked(Fn fn, const std::map<std::string, std::string>& keys = {}) {
  try {
    fn();
  } catch (const DomainError& e) {
    std::string field = first_word(e.what());
    if (const auto it = keys.find(field); it != keys.end()) field = it->second;
    throw ConfigError(field, e.what());
  }
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "regular") return ExperimentKind::kRegular;
  if (s == "curriculum") return ExperimentKind::kCurriculum;
  if (s == "seq2seq") return ExperimentKind::kSeq2Seq;
  if (s == "landscape") return ExperimentKind::kLandscape;
  if (s == "oracle") return ExperimentKind::kOracle;
  throw ConfigError("kind", "expected regular, curriculum, seq2seq, landscape or oracle");
}

InitialCondition parse_ic(const std::string& s) {
  if (s == "sine") return InitialCondition::kSine;
  if (s == "gaussian") return InitialCondition::kGaussian;
  throw ConfigError("initial_condition", "expected sine or gaussian");
}

PdeProblem parse_problem(Reader& r) {
  const auto name = r.get<std::string>("problem");
  if (!name) throw ConfigError("problem", "missing");
  const double horizon = r.get<double>("T").value_or(1.0);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("T", "must be positive");

  const auto require = [&](const std::string& key) {
    const auto v = r.get<double>(key);
    if (!v) throw ConfigError(key, "missing for problem " + *name);
    if (!std::isfinite(*v)) throw ConfigError(key, "must be finite");
    return *v;
  };
  PdeProblem p;
  if (*name == "convection") {
    r.forbid("rho", "not used by convection");
    r.forbid("nu", "not used by convection");
    const double beta = require("beta");
    if (beta < 0.0) throw ConfigError("beta", "must be >= 0");
    p = PdeProblem::convection(beta, horizon);
  } else if (*name == "reaction") {
    r.forbid("beta", "not used by reaction");
    r.forbid("nu", "not used by reaction");
    const double rho = require("rho");
    if (rho < 0.0) throw ConfigError("rho", "must be >= 0");
    p = PdeProblem::reaction(rho, horizon);
  } else if (*name == "reaction_diffusion") {
    r.forbid("beta", "not used by reaction_diffusion");
    const double nu = require("nu");
    if (!(nu > 0.0)) throw ConfigError("nu", "must be positive");
    const double rho = require("rho");
    if (rho < 0.0) throw ConfigError("rho", "must be >= 0");
    p = PdeProblem::reaction_diffusion(nu, rho, horizon);
  } else {
    throw ConfigError("problem", "expected convection, reaction or reaction_diffusion");
  }
  if (const auto ic = r.get<std::string>("initial_condition")) p.initial_condition = parse_ic(*ic);
  checked([&] { p.validate(); });
  return p;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  Reader r(doc);
  ExperimentConfig c;
  const auto kind = r.get<std::string>("kind");
  if (!kind) throw ConfigError("kind", "missing");
  c.kind = parse_kind(*kind);
  c.train.problem = parse_problem(r);

  auto& t = c.train;
  t.counts.n_u = r.get<int>("n_u").value_or(t.counts.n_u);
  t.counts.n_f = r.get<int>("n_f").value_or(t.counts.n_f);
  t.counts.n_b = r.get<int>("n_b").value_or(t.counts.n_b);
  t.lambda = r.get<double>("lambda").value_or(t.lambda);
  t.seeds = r.list<std::uint64_t>("seeds").value_or(t.seeds);
  t.sweep_lrs = r.list<double>("sweep_lrs").value_or(t.sweep_lrs);
  t.lbfgs.max_iters = r.get<int>("max_iters").value_or(t.lbfgs.max_iters);
  t.lbfgs.history = r.get<int>("history").value_or(t.lbfgs.history);
  t.lbfgs.grad_tol = r.get<double>("grad_tol").value_or(t.lbfgs.grad_tol);
  t.grid_nx = r.get<std::size_t>("grid_nx").value_or(t.grid_nx);
  t.grid_nt = r.get<std::size_t>("grid_nt").value_or(t.grid_nt);
  t.jobs = r.get<int>("jobs").value_or(t.jobs);

  c.curriculum.coefficient_path = r.list<double>("curriculum_path").value_or(std::vector<double>{});
  c.curriculum.iters_per_stage = r.get<int>("iters_per_stage");
  c.curriculum.final_stage_iters = r.get<int>("final_stage_iters");

  c.segments.dt = r.get<double>("dt").value_or(c.segments.dt);
  c.segments.warm_start = r.get<bool>("warm_start").value_or(false);

  c.surface.half_range = r.get<double>("surface_half_range").value_or(c.surface.half_range);
  c.surface.resolution = r.get<int>("surface_resolution").value_or(c.surface.resolution);
  c.eigen.max_iters = r.get<int>("eigen_max_iters").value_or(c.eigen.max_iters);
  c.eigen.seed = r.get<std::uint64_t>("eigen_seed").value_or(c.eigen.seed);

  c.lambda_sweep = r.list<double>("lambda_sweep").value_or(std::vector<double>{});
  if (const auto out = r.get<std::string>("out")) c.out = *out;

  r.reject_unknown();
  if (c.kind == ExperimentKind::kCurriculum && c.curriculum.coefficient_path.empty()) {
    c.curriculum = [&] {
      CurriculumSchedule d = CurriculumSchedule::defaults_for(c.train.problem);
      d.iters_per_stage = c.curriculum.iters_per_stage;
      d.final_stage_iters = c.curriculum.final_stage_iters;
      return d;
    }();
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", e.what());
  }
  return from_json(doc);
}

void ExperimentConfig::validate() const {
  if (out.empty()) throw ConfigError("out", "must not be empty");
  checked([&] { train.validate(); });
  for (const double l : lambda_sweep) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambda_sweep", "entries must be >= 0");
  }
  switch (kind) {
    case ExperimentKind::kCurriculum:
      checked([&] { curriculum.validate(train.problem.coefficient()); },
              {{"coefficient_path", "curriculum_path"}});
      break;
    case ExperimentKind::kSeq2Seq:
      checked([&] { segments.validate(train.problem.horizon); });
      if (train.counts.n_f < segments.segment_count(train.problem.horizon)) {
        throw ConfigError("n_f", "must give every segment at least one interior point");
      }
      break;
    case ExperimentKind::kLandscape:
      checked([&] { surface.validate(); },
              {{"half_range", "surface_half_range"}, {"resolution", "surface_resolution"}});
      checked([&] { eigen.validate(); },
              {{"max_iters", "eigen_max_iters"}, {"seed", "eigen_seed"}});
      break;
    default:
      break;
  }
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  const PdeProblem& p = train.problem;
  j["kind"] = to_string(kind);
  j["problem"] = p.kind();
  if (const auto* c = std::get_if<Convection>(&p.equation)) {
    j["beta"] = c->beta;
  } else if (const auto* r = std::get_if<Reaction>(&p.equation)) {
    j["rho"] = r->rho;
  } else {
    const auto& rd = std::get<ReactionDiffusion>(p.equation);
    j["nu"] = rd.nu;
    j["rho"] = rd.rho;
  }
  j["T"] = p.horizon;
  j["initial_condition"] = p.initial_condition == InitialCondition::kSine ? "sine" : "gaussian";
  j["n_u"] = train.counts.n_u;
  j["n_f"] = train.counts.n_f;
  j["n_b"] = train.counts.n_b;
  j["lambda"] = train.lambda;
  if (!lambda_sweep.empty()) j["lambda_sweep"] = lambda_sweep;
  j["seeds"] = train.seeds;
  j["sweep_lrs"] = train.sweep_lrs;
  j["max_iters"] = train.lbfgs.max_iters;
  j["history"] = train.lbfgs.history;
  j["grad_tol"] = train.lbfgs.grad_tol;
  j["grid_nx"] = train.grid_nx;
  j["grid_nt"] = train.grid_nt;
  j["jobs"] = train.jobs;
  if (kind == ExperimentKind::kCurriculum) {
    j["curriculum_path"] = curriculum.coefficient_path;
    if (curriculum.iters_per_stage) j["iters_per_stage"] = *curriculum.iters_per_stage;
    if (curriculum.final_stage_iters) j["final_stage_iters"] = *curriculum.final_stage_iters;
  }
  if (kind == ExperimentKind::kSeq2Seq) {
    j["dt"] = segments.dt;
    j["warm_start"] = segments.warm_start;
  }
  if (kind == ExperimentKind::kLandscape) {
    j["surface_half_range"] = surface.half_range;
    j["surface_resolution"] = surface.resolution;
    j["eigen_max_iters"] = eigen.max_iters;
    j["eigen_seed"] = eigen.seed;
  }
  j["out"] = out.string();
  return j;
}

// ---- running -----------------------------------------------------------------

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

SolutionGrid difference(const SolutionGrid& predicted, const SolutionGrid& exact) {
  SolutionGrid d = exact;
  d.values = predicted.values - exact.values;
  return d;
}

void write_stage_csv(const std::vector<StageLog>& stages, const std::filesystem::path& path) {
  std::string out = "stage,coefficient,t0,t1,lr,iterations,status,total_loss,relative_error\n";
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    out += csv_row({std::to_string(s), format_double(st.coefficient), format_double(st.t0),
                    format_double(st.t1), format_double(st.lr), std::to_string(st.iterations),
                    to_string(st.status), format_double(st.loss.total),
                    format_double(st.error.relative)}) +
           "\n";
  }
  write_text(path, out);
}

TrainReport train(const ExperimentConfig& cfg, const TrainConfig& tc) {
  switch (cfg.kind) {
    case ExperimentKind::kCurriculum:
      return train_curriculum(tc, cfg.curriculum);
    case ExperimentKind::kSeq2Seq:
      return train_seq2seq(tc, cfg.segments);
    default:
      return train_regular(tc);
  }
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  RunOutcome outcome;
  outcome.run_dir = cfg.out;
  const fs::path dir = cfg.out;
  fs::create_directories(dir / "grids");

  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = cfg.to_json();
  manifest["seeds"] = cfg.train.seeds;

  if (cfg.kind == ExperimentKind::kOracle) {
    const SolutionGrid exact = reference_grid(cfg.train.problem, cfg.train.grid_nx, cfg.train.grid_nt);
    write_grid_csv(exact, dir / "grids" / "exact.csv");
    manifest["exit_code"] = 0;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return outcome;
  }

  for (const char* sub : {"traces", "snapshots"}) fs::create_directories(dir / sub);
  if (cfg.kind == ExperimentKind::kLandscape) fs::create_directories(dir / "surfaces");

  std::vector<double> lambdas = cfg.lambda_sweep;
  if (lambdas.empty()) lambdas.push_back(cfg.train.lambda);
  const bool multi = lambdas.size() > 1;

  std::string report_csv = TrainReport::csv_header() + "\n";
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  bool any_ok = false;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    TrainConfig tc = cfg.train;
    tc.lambda = lambdas[li];
    TrainReport report = train(cfg, tc);
    const std::string suffix = multi ? "_lambda" + std::to_string(li) : "";

    const std::string body = report.csv();
    report_csv += body.substr(body.find('\n') + 1);
    if (li == 0) write_grid_csv(report.reference, dir / "grids" / "exact.csv");

    nlohmann::ordered_json statuses = nlohmann::ordered_json::array();
    for (const auto& s : report.seeds) {
      const std::string tag = "seed" + std::to_string(s.seed) + suffix;
      statuses.push_back({{"seed", s.seed}, {"status", s.status}});
      if (!s.trace.empty()) {
        write_trace_csv(s.trace, dir / "traces" / (tag + ".csv"));
      }
      if (!s.stages.empty()) write_stage_csv(s.stages, dir / "traces" / (tag + "_stages.csv"));
      if (!s.ok) continue;
      any_ok = true;
      write_grid_csv(s.prediction, dir / "grids" / ("predicted_" + tag + ".csv"));
      write_grid_csv(difference(s.prediction, report.reference),
                     dir / "grids" / ("diff_" + tag + ".csv"));
      if (s.params) save_snapshot(*s.params, dir / "snapshots" / (tag + ".pinn"));

      if (cfg.kind == ExperimentKind::kLandscape && s.params) {
        const CollocationSet colloc = sample_collocation(
            tc.problem, tc.counts.n_u, tc.counts.n_f, tc.counts.n_b, s.seed);
        const PinnObjective objective(tc.problem, colloc, tc.lambda);
        EigenConfig ec = cfg.eigen;
        ec.k = 2;
        const EigenResult eig = top_eigenpairs(objective, s.params->flat(), ec);
        SurfaceConfig sc = cfg.surface;
        sc.jobs = tc.jobs;
        LandscapeSurface surf =
            loss_surface(objective, s.params->flat(), eig.pairs[0].vector, eig.pairs[1].vector, sc,
                         eig.pairs[0].value, eig.pairs[1].value);
        write_surface(surf, dir / "surfaces", tag);
        statuses.back()["eigen_converged"] = eig.converged;
        outcome.surfaces.push_back(std::move(surf));
      }
    }
    const Aggregate a = report.aggregate();
    const auto num = [](double v) {
      return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
    };
    runs.push_back({{"lambda", tc.lambda},
                    {"succeeded", a.succeeded},
                    {"mean_relative_error", num(a.mean_relative)},
                    {"min_relative_error", num(a.min_relative)},
                    {"var_relative_error", num(a.var_relative)},
                    {"mean_absolute_error", num(a.mean_absolute)},
                    {"min_absolute_error", num(a.min_absolute)},
                    {"var_absolute_error", num(a.var_absolute)},
                    {"statuses", statuses}});
    write_text(dir / ("summary" + suffix + ".json"), report.summary().dump(2) + "\n");
    outcome.reports.push_back(std::move(report));
  }
  write_text(dir / "report.csv", report_csv);

  outcome.exit_code = any_ok ? 0 : 3;
  manifest["regime"] = to_string(cfg.kind == ExperimentKind::kLandscape ? ExperimentKind::kRegular
                                                                         : cfg.kind);
  manifest["runs"] = runs;
  manifest["exit_code"] = outcome.exit_code;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return outcome;
}

// ---- comparison ----------------------------------------------------------------

RunSummary read_run(const std::filesystem::path& run_dir) {
  std::ifstream is(run_dir / "manifest.json");
  if (!is) throw std::runtime_error("no manifest.json in " + run_dir.string());
  const json m = json::parse(is);
  if (!m.contains("runs") || m["runs"].empty()) {
    throw std::runtime_error(run_dir.string() + " has no training results");
  }
  RunSummary s;
  s.regime = m.at("regime").get<std::string>();
  const json& c = m.at("config");
  for (const char* key : {"problem", "beta", "rho", "nu", "T", "initial_condition"}) {
    if (c.contains(key)) s.problem[key] = c[key];
  }
  const json& run = m["runs"][0];
  const auto num = [](const json& v) {
    return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
  };
  s.mean_relative = num(run.at("mean_relative_error"));
  s.mean_absolute = num(run.at("mean_absolute_error"));
  s.succeeded = run.at("succeeded").get<int>();
  return s;
}

Comparison compare_runs(const std::filesystem::path& a, const std::filesystem::path& b) {
  Comparison c{read_run(a), read_run(b)};
  if (c.a.problem != c.b.problem) {
    throw std::runtime_error("runs solved different problems: " + c.a.problem.dump() + " vs " +
                             c.b.problem.dump());
  }
  c.delta_relative = c.b.mean_relative - c.a.mean_relative;
  c.delta_absolute = c.b.mean_absolute - c.a.mean_absolute;
  return c;
}

std::string format_comparison(const Comparison& c) {
  std::ostringstream os;
  std::string title = c.a.problem.value("problem", "");
  for (const char* key : {"beta", "nu", "rho"}) {
    if (c.a.problem.contains(key)) title += std::string(" ") + key + "=" + c.a.problem[key].dump();
  }
  os << title << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %-16s %-16s\n", "regime", "relative_error",
                "absolute_error");
  os << line;
  const auto row = [&](const std::string& name, double rel, double abs) {
    std::snprintf(line, sizeof line, "%-14s %-16.3e %-16.3e\n", name.c_str(), rel, abs);
    os << line;
  };
  row(c.a.regime, c.a.mean_relative, c.a.mean_absolute);
  row(c.b.regime, c.b.mean_relative, c.b.mean_absolute);
  row("delta", c.delta_relative, c.delta_absolute);
  return os.str();
}

}  // namespace pinnfm

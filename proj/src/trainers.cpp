#include "pinnfm/trainers.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "pinnfm/csv.hpp"

namespace pinnfm {

void TrainConfig::validate() const {
  problem.validate();
  if (counts.n_u <= 0) throw DomainError("n_u must be positive");
  if (counts.n_f <= 0) throw DomainError("n_f must be positive");
  if (counts.n_b <= 0) throw DomainError("n_b must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  if (seeds.empty()) throw DomainError("seeds must not be empty");
  if (sweep_lrs.empty()) throw DomainError("sweep_lrs must not be empty");
  for (const double lr : sweep_lrs) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("sweep_lrs entries must be positive");
  }
  if (grid_nx == 0 || grid_nt == 0) throw DomainError("grid size must be positive");
  if (jobs < 1) throw DomainError("jobs must be >= 1");
  lbfgs.validate();
}

void CurriculumSchedule::validate(double target) const {
  if (coefficient_path.empty()) throw DomainError("coefficient_path must not be empty");
  for (std::size_t i = 1; i < coefficient_path.size(); ++i) {
    if (!(coefficient_path[i] > coefficient_path[i - 1])) {
      throw DomainError("coefficient_path must be strictly increasing");
    }
  }
  if (coefficient_path.back() != target) {
    throw DomainError("coefficient_path must end at the target coefficient");
  }
  if (iters_per_stage && *iters_per_stage < 0) throw DomainError("iters_per_stage must be >= 0");
  if (final_stage_iters && *final_stage_iters < 0) {
    throw DomainError("final_stage_iters must be >= 0");
  }
}

CurriculumSchedule CurriculumSchedule::defaults_for(const PdeProblem& problem) {
  const double target = problem.coefficient();
  CurriculumSchedule s;
  if (std::holds_alternative<Convection>(problem.equation)) {
    for (double b = 1.0; b < target; b = (b == 1.0 ? 5.0 : b + 5.0)) s.coefficient_path.push_back(b);
  } else {
    for (double r = 1.0; r < target; r += 1.0) s.coefficient_path.push_back(r);
  }
  s.coefficient_path.push_back(target);
  return s;
}

int SegmentSchedule::segment_count(double horizon) const {
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (!(dt > 0.0) || std::abs(ratio - rounded) > 1e-12 * std::max(1.0, ratio) || rounded < 1.0) {
    throw DomainError("dt must divide the horizon exactly");
  }
  return static_cast<int>(rounded);
}

std::vector<int> SegmentSchedule::split_budget(int total, int segments) {
  if (segments < 1) throw DomainError("need at least one segment");
  std::vector<int> out(static_cast<std::size_t>(segments), total / segments);
  for (int i = 0; i < total % segments; ++i) ++out[static_cast<std::size_t>(i)];
  return out;
}

void SegmentSchedule::validate(double horizon) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  const int k = segment_count(horizon);
  if (total_interior && *total_interior < k) {
    throw DomainError("total_interior must give every segment at least one point");
  }
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kRegular:
      return "regular";
    case Regime::kCurriculum:
      return "curriculum";
    case Regime::kSeq2Seq:
      return "seq2seq";
  }
  return "unknown";
}

namespace {

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

LbfgsConfig with_iters(LbfgsConfig cfg, std::optional<int> iters) {
  if (iters) cfg.max_iters = *iters;
  return cfg;
}

// Runs `per_seed` for every seed, `jobs` at a time, keeping seed order.
template <class Fn>
std::vector<SeedResult> for_each_seed(const TrainConfig& cfg, Fn per_seed) {
  std::vector<SeedResult> results(cfg.seeds.size());
  const auto run_one = [&](std::size_t i) {
    try {
      results[i] = per_seed(cfg.seeds[i]);
    } catch (const std::exception& e) {
      results[i].seed = cfg.seeds[i];
      results[i].ok = false;
      results[i].status = sanitize(std::string("error: ") + e.what());
    }
  };
  const auto jobs = static_cast<std::size_t>(cfg.jobs);
  if (jobs <= 1 || cfg.seeds.size() <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(jobs, cfg.seeds.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) run_one(i);
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

void fail_seed(SeedResult& r, const std::string& why) {
  r.ok = false;
  r.status = sanitize(why);
  r.error = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace

TrainReport train_regular(const TrainConfig& cfg, const TrainHooks& hooks) {
  CurriculumSchedule single;
  single.coefficient_path = {cfg.problem.coefficient()};
  TrainReport report = train_curriculum(cfg, single, hooks);
  report.regime = Regime::kRegular;
  return report;
}

TrainReport train_curriculum(const TrainConfig& cfg, const CurriculumSchedule& schedule,
                             const TrainHooks& hooks) {
  cfg.validate();
  schedule.validate(cfg.problem.coefficient());

  TrainReport report;
  report.regime = Regime::kCurriculum;
  report.problem = cfg.problem;
  report.reference = reference_grid(cfg.problem, cfg.grid_nx, cfg.grid_nt);

  // Intermediate-stage references are shared by all seeds.
  std::vector<SolutionGrid> stage_refs;
  for (std::size_t s = 0; s + 1 < schedule.coefficient_path.size(); ++s) {
    stage_refs.push_back(reference_grid(cfg.problem.with_coefficient(schedule.coefficient_path[s]),
                                        cfg.grid_nx, cfg.grid_nt));
  }
  stage_refs.push_back(report.reference);

  report.seeds = for_each_seed(cfg, [&](std::uint64_t seed) {
    SeedResult r;
    r.seed = seed;
    const CollocationSet colloc =
        sample_collocation(cfg.problem, cfg.counts.n_u, cfg.counts.n_f, cfg.counts.n_b, seed);
    const TimeWindow window{0.0, cfg.problem.horizon};
    Vector x = NetworkParams::glorot(seed).flat();
    const std::size_t n_stages = schedule.coefficient_path.size();
    for (std::size_t s = 0; s < n_stages; ++s) {
      const bool last = s + 1 == n_stages;
      const PdeProblem stage_problem = cfg.problem.with_coefficient(schedule.coefficient_path[s]);
      const PinnObjective objective(stage_problem, colloc, cfg.lambda, default_architecture(),
                                    window);
      const LbfgsConfig lcfg =
          with_iters(cfg.lbfgs, last ? schedule.final_stage_iters : schedule.iters_per_stage);

      if (hooks.on_stage_start) hooks.on_stage_start(seed, s, x);
      StageLog log;
      log.coefficient = schedule.coefficient_path[s];
      log.t1 = cfg.problem.horizon;
      log.start_params = x;

      SweepResult sweep;
      try {
        sweep = lr_sweep(objective, x, cfg.sweep_lrs, lcfg);
      } catch (const SweepFailure& e) {
        fail_seed(r, "stage " + std::to_string(s) + " failed: " + e.what());
        r.sweep = e.runs();
        return r;
      }
      x = sweep.best.x;
      const NetworkParams params(default_architecture(), x);
      log.lr = sweep.lr;
      log.iterations = sweep.best.iterations;
      log.status = sweep.best.status;
      log.loss = objective.breakdown(x);
      log.error = error_metrics(predict_grid(params, stage_refs[s].xs, stage_refs[s].ts, window),
                                stage_refs[s]);
      log.final_params = x;
      r.iterations += log.iterations;
      if (hooks.on_stage_end) hooks.on_stage_end(seed, log);

      if (last) {
        r.lr = sweep.lr;
        r.loss = log.loss;
        r.error = log.error;
        r.sweep = sweep.runs;
        r.trace = std::move(sweep.best.trace);
        r.prediction = predict_grid(params, report.reference.xs, report.reference.ts, window);
        r.params = params;
      }
      r.stages.push_back(std::move(log));
    }
    r.ok = true;
    r.status = "ok";
    return r;
  });
  return report;
}

TrainReport train_seq2seq(const TrainConfig& cfg, const SegmentSchedule& schedule,
                          const TrainHooks& hooks) {
  cfg.validate();
  schedule.validate(cfg.problem.horizon);

  TrainReport report;
  report.regime = Regime::kSeq2Seq;
  report.problem = cfg.problem;
  report.reference = reference_grid(cfg.problem, cfg.grid_nx, cfg.grid_nt);

  const int n_seg = schedule.segment_count(cfg.problem.horizon);
  const std::vector<int> budget =
      SegmentSchedule::split_budget(schedule.total_interior.value_or(cfg.counts.n_f), n_seg);
  const double horizon = cfg.problem.horizon;
  const auto seg_start = [&](int k) { return horizon * k / n_seg; };

  // Lattice column j belongs to the segment whose window (t_k, t_{k+1}]
  // contains it; t = 0 belongs to the first segment.
  const auto& ts = report.reference.ts;
  std::vector<int> owner(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    int k = static_cast<int>(std::ceil(ts[j] / horizon * n_seg - 1e-9)) - 1;
    owner[j] = std::clamp(k, 0, n_seg - 1);
  }

  report.seeds = for_each_seed(cfg, [&](std::uint64_t seed) {
    SeedResult r;
    r.seed = seed;
    const CollocationSet initial = sample_collocation(cfg.problem, cfg.counts.n_u, 0, 0, seed);
    Vector ic_target = initial.ic_target;
    std::vector<NetworkParams> nets;
    std::vector<TimeWindow> windows;
    Vector x;
    for (int k = 0; k < n_seg; ++k) {
      const double t0 = seg_start(k);
      const double t1 = k + 1 == n_seg ? horizon : seg_start(k + 1);
      CollocationSet colloc = sample_window(t0, t1, budget[static_cast<std::size_t>(k)],
                                            cfg.counts.n_b, seed, static_cast<std::uint64_t>(k));
      colloc.ic_x = initial.ic_x;
      colloc.ic_target = ic_target;
      colloc.ic_time = t0;
      const TimeWindow window{t0, t1};
      windows.push_back(window);
      const PinnObjective objective(cfg.problem, colloc, cfg.lambda, default_architecture(),
                                    window);

      if (k == 0 || !schedule.warm_start) {
        x = NetworkParams::glorot(seed, default_architecture(), static_cast<std::uint64_t>(k)).flat();
      }
      if (hooks.on_stage_start) hooks.on_stage_start(seed, static_cast<std::size_t>(k), x);
      StageLog log;
      log.coefficient = cfg.problem.coefficient();
      log.t0 = t0;
      log.t1 = t1;
      log.start_params = x;
      log.ic_x = colloc.ic_x;
      log.ic_target = colloc.ic_target;

      SweepResult sweep;
      try {
        sweep = lr_sweep(objective, x, cfg.sweep_lrs, cfg.lbfgs);
      } catch (const SweepFailure& e) {
        fail_seed(r, "partial: segment " + std::to_string(k) + " of " + std::to_string(n_seg) +
                         " failed: " + e.what());
        r.sweep = e.runs();
        r.stages.push_back(std::move(log));
        return r;
      }
      x = sweep.best.x;
      nets.emplace_back(default_architecture(), x);
      log.lr = sweep.lr;
      log.iterations = sweep.best.iterations;
      log.status = sweep.best.status;
      log.loss = objective.breakdown(x);
      log.final_params = x;

      // Window error over the lattice columns this segment owns.
      std::vector<double> own_ts;
      std::vector<Eigen::Index> own_cols;
      for (std::size_t j = 0; j < ts.size(); ++j) {
        if (owner[j] == k) {
          own_ts.push_back(ts[j]);
          own_cols.push_back(static_cast<Eigen::Index>(j));
        }
      }
      if (!own_ts.empty()) {
        SolutionGrid ref_part{report.reference.xs, own_ts,
                              Matrix(report.reference.values.rows(),
                                     static_cast<Eigen::Index>(own_cols.size()))};
        for (std::size_t c = 0; c < own_cols.size(); ++c) {
          ref_part.values.col(static_cast<Eigen::Index>(c)) = report.reference.values.col(own_cols[c]);
        }
        log.error =
            error_metrics(predict_grid(nets.back(), ref_part.xs, own_ts, window), ref_part);
      }

      r.loss.ic_loss += log.loss.ic_loss;
      r.loss.bc_loss += log.loss.bc_loss;
      r.loss.residual_loss += log.loss.residual_loss;
      r.loss.total += log.loss.total;
      r.loss.lambda = cfg.lambda;
      r.iterations += log.iterations;
      r.lr = sweep.lr;
      r.sweep = sweep.runs;
      r.trace = std::move(sweep.best.trace);
      if (hooks.on_stage_end) hooks.on_stage_end(seed, log);
      r.stages.push_back(std::move(log));

      // Next segment's initial condition: this network at t1 on the IC points.
      Matrix in(2, initial.ic_x.size());
      in.row(0) = initial.ic_x.transpose();
      in.row(1).setConstant(window.local(t1));
      ic_target = forward_batch(nets.back(), in).transpose();
    }

    // Stitch the per-segment predictions onto the evaluation lattice.
    r.prediction = report.reference;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const auto k = static_cast<std::size_t>(owner[j]);
      const SolutionGrid col = predict_grid(nets[k], report.reference.xs, {ts[j]}, windows[k]);
      r.prediction.values.col(static_cast<Eigen::Index>(j)) = col.values.col(0);
    }
    r.error = error_metrics(r.prediction, report.reference);
    r.ok = true;
    r.status = "ok";
    return r;
  });
  return report;
}

// ---- reporting ---------------------------------------------------------------

Aggregate TrainReport::aggregate() const {
  Aggregate a;
  std::vector<const SeedResult*> ok;
  for (const auto& s : seeds) {
    if (s.ok) ok.push_back(&s);
  }
  a.succeeded = static_cast<int>(ok.size());
  if (ok.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    a.mean_relative = a.min_relative = a.var_relative = nan;
    a.mean_absolute = a.min_absolute = a.var_absolute = nan;
    return a;
  }
  const double n = static_cast<double>(ok.size());
  a.min_relative = a.min_absolute = std::numeric_limits<double>::infinity();
  for (const auto* s : ok) {
    a.mean_relative += s->error.relative / n;
    a.mean_absolute += s->error.absolute / n;
    a.min_relative = std::min(a.min_relative, s->error.relative);
    a.min_absolute = std::min(a.min_absolute, s->error.absolute);
  }
  for (const auto* s : ok) {
    a.var_relative += (s->error.relative - a.mean_relative) * (s->error.relative - a.mean_relative) / n;
    a.var_absolute += (s->error.absolute - a.mean_absolute) * (s->error.absolute - a.mean_absolute) / n;
  }
  return a;
}

bool TrainReport::all_failed() const {
  for (const auto& s : seeds) {
    if (s.ok) return false;
  }
  return true;
}

std::string TrainReport::csv_header() {
  return "seed,status,relative_error,absolute_error,ic_loss,bc_loss,residual_loss,total,lambda,lr,"
         "iterations";
}

std::string TrainReport::csv() const {
  std::string out = csv_header() + "\n";
  for (const auto& s : seeds) {
    out += csv_row({std::to_string(s.seed), sanitize(s.status), format_double(s.error.relative),
                    format_double(s.error.absolute), format_double(s.loss.ic_loss),
                    format_double(s.loss.bc_loss), format_double(s.loss.residual_loss),
                    format_double(s.loss.total), format_double(s.loss.lambda),
                    format_double(s.lr), std::to_string(s.iterations)}) +
           "\n";
  }
  return out;
}

namespace {

nlohmann::json problem_json(const PdeProblem& p) {
  nlohmann::json j;
  j["problem"] = p.kind();
  j["T"] = p.horizon;
  j["initial_condition"] = to_string(p.initial_condition);
  if (const auto* c = std::get_if<Convection>(&p.equation)) {
    j["beta"] = c->beta;
  } else if (const auto* r = std::get_if<Reaction>(&p.equation)) {
    j["rho"] = r->rho;
  } else {
    const auto& rd = std::get<ReactionDiffusion>(p.equation);
    j["nu"] = rd.nu;
    j["rho"] = rd.rho;
  }
  return j;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json TrainReport::summary() const {
  const Aggregate a = aggregate();
  nlohmann::json j;
  j["regime"] = to_string(regime);
  j["problem"] = problem_json(problem);
  j["aggregate"] = {{"succeeded", a.succeeded},
                    {"mean_relative_error", finite_or_null(a.mean_relative)},
                    {"min_relative_error", finite_or_null(a.min_relative)},
                    {"var_relative_error", finite_or_null(a.var_relative)},
                    {"mean_absolute_error", finite_or_null(a.mean_absolute)},
                    {"min_absolute_error", finite_or_null(a.min_absolute)},
                    {"var_absolute_error", finite_or_null(a.var_absolute)}};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : seeds) {
    nlohmann::json row;
    row["seed"] = s.seed;
    row["status"] = s.status;
    row["relative_error"] = finite_or_null(s.error.relative);
    row["absolute_error"] = finite_or_null(s.error.absolute);
    row["lr"] = s.lr;
    row["iterations"] = s.iterations;
    row["loss"] = {{"ic", s.loss.ic_loss},
                   {"bc", s.loss.bc_loss},
                   {"residual", s.loss.residual_loss},
                   {"total", s.loss.total},
                   {"lambda", s.loss.lambda}};
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& st : s.stages) {
      stages.push_back({{"coefficient", st.coefficient},
                        {"t0", st.t0},
                        {"t1", st.t1},
                        {"lr", st.lr},
                        {"iterations", st.iterations},
                        {"status", to_string(st.status)},
                        {"total_loss", finite_or_null(st.loss.total)},
                        {"relative_error", finite_or_null(st.error.relative)}});
    }
    row["stages"] = std::move(stages);
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& run : s.sweep) {
      sweep.push_back({{"lr", run.lr},
                       {"final_loss", finite_or_null(run.final_loss)},
                       {"status", to_string(run.status)},
                       {"iterations", run.iterations}});
    }
    row["sweep"] = std::move(sweep);
    rows.push_back(std::move(row));
  }
  j["seeds"] = std::move(rows);
  return j;
}

}  // namespace pinnfm

#include "pinnfm/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include "pinnfm/csv.hpp"

namespace pinnfm {

void LbfgsConfig::validate() const {
  if (history < 1) throw DomainError("history must be >= 1");
  if (max_iters < 0) throw DomainError("max_iters must be >= 0");
  if (!(grad_tol >= 0.0)) throw DomainError("grad_tol must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("lr must be positive");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw DomainError("wolfe constants need 0 < c1 < c2 < 1");
  }
  if (max_ls_steps < 1) throw DomainError("max_ls_steps must be >= 1");
}

std::string to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::kConverged:
      return "converged";
    case LbfgsStatus::kMaxIterations:
      return "max_iterations";
    case LbfgsStatus::kLineSearchFailure:
      return "line_search_failure";
    case LbfgsStatus::kNonFiniteStart:
      return "non_finite_start";
  }
  return "unknown";
}

namespace {

// Minimizer of the cubic through (x1, f1, g1), (x2, f2, g2), clamped to
// bounds. Falls back to the midpoint when the fit is unusable.
double cubic_interpolate(double x1, double f1, double g1, double x2, double f2, double g2,
                         double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  if (!std::isfinite(f1) || !std::isfinite(f2) || !std::isfinite(g1) || !std::isfinite(g2)) {
    return mid;
  }
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_sq = d1 * d1 - g1 * g2;
  if (!(d2_sq >= 0.0)) return mid;
  const double d2 = std::sqrt(d2_sq);
  double pos;
  if (x1 <= x2) {
    pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
  } else {
    pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
  }
  if (!std::isfinite(pos)) return mid;
  return std::clamp(pos, lo, hi);
}

struct Point {
  double t = 0.0;
  double f = 0.0;
  double gtd = 0.0;
  Vector g;
};

struct LineSearchOutcome {
  Point best;
  int evaluations = 0;
  bool wolfe = false;
};

class LineSearch {
 public:
  LineSearch(const Objective& obj, const Vector& x, const Vector& d, const LbfgsConfig& cfg)
      : obj_(obj), x_(x), d_(d), cfg_(cfg) {}

  LineSearchOutcome run(const Point& start, double t) {
    const double f0 = start.f;
    const double gtd0 = start.gtd;
    const auto armijo_fails = [&](const Point& p) {
      return !std::isfinite(p.f) || p.f > f0 + cfg_.wolfe_c1 * p.t * gtd0;
    };
    const auto curvature_ok = [&](const Point& p) {
      return std::isfinite(p.gtd) && std::abs(p.gtd) <= -cfg_.wolfe_c2 * gtd0;
    };

    Point prev = start;
    Point cur = eval(t);
    int steps = 1;
    Point lo;
    Point hi;
    bool bracketed = false;

    while (steps < cfg_.max_ls_steps) {
      if (armijo_fails(cur) || (steps > 1 && cur.f >= prev.f)) {
        lo = prev;
        hi = cur;
        bracketed = true;
        break;
      }
      if (curvature_ok(cur)) return {cur, evals_, true};
      if (cur.gtd >= 0.0) {
        lo = cur;
        hi = prev;
        bracketed = true;
        break;
      }
      const double next = cubic_interpolate(prev.t, prev.f, prev.gtd, cur.t, cur.f, cur.gtd,
                                            cur.t + 0.01 * (cur.t - prev.t), 10.0 * cur.t);
      prev = std::move(cur);
      cur = eval(next);
      ++steps;
    }
    if (!bracketed) {
      // Budget spent while extrapolating.
      if (!armijo_fails(cur) && cur.f < prev.f) return {cur, evals_, curvature_ok(cur)};
      lo = start;
      hi = cur;
      if (!armijo_fails(prev) && prev.t > 0.0) lo = prev;
      return {lo, evals_, false};
    }

    // Zoom: keep lo satisfying sufficient decrease with the lowest f so far.
    bool insufficient_progress = false;
    while (steps < cfg_.max_ls_steps) {
      const double left = std::min(lo.t, hi.t);
      const double right = std::max(lo.t, hi.t);
      if (right - left < 1e-14 * std::max(1.0, right)) break;
      double t_new = cubic_interpolate(lo.t, lo.f, lo.gtd, hi.t, hi.f, hi.gtd, left, right);
      const double eps = 0.1 * (right - left);
      if (std::min(right - t_new, t_new - left) < eps) {
        if (insufficient_progress || t_new >= right || t_new <= left) {
          t_new = std::abs(t_new - right) < std::abs(t_new - left) ? right - eps : left + eps;
          insufficient_progress = false;
        } else {
          insufficient_progress = true;
        }
      } else {
        insufficient_progress = false;
      }
      Point p = eval(t_new);
      ++steps;
      if (armijo_fails(p) || p.f >= lo.f) {
        hi = std::move(p);
      } else {
        if (curvature_ok(p)) return {p, evals_, true};
        if (p.gtd * (hi.t - lo.t) >= 0.0) hi = lo;
        lo = std::move(p);
      }
    }
    return {lo, evals_, false};
  }

 private:
  Point eval(double t) {
    Point p;
    p.t = t;
    p.f = obj_.value_and_gradient(x_ + t * d_, p.g);
    ++evals_;
    p.gtd = (std::isfinite(p.f) && p.g.allFinite()) ? p.g.dot(d_)
                                                    : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(p.gtd)) p.f = std::numeric_limits<double>::infinity();
    return p;
  }

  const Objective& obj_;
  const Vector& x_;
  const Vector& d_;
  const LbfgsConfig& cfg_;
  int evals_ = 0;
};

struct CurvaturePair {
  Vector s;
  Vector y;
  double rho;  // 1 / y.s
};

Vector two_loop(const std::deque<CurvaturePair>& mem, const Vector& g) {
  Vector q = -g;
  if (mem.empty()) return q;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  const auto& last = mem.back();
  q *= 1.0 / (last.rho * last.y.squaredNorm());  // s.y / y.y
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return q;
}

}  // namespace

LbfgsResult minimize(const Objective& objective, const Vector& x0, const LbfgsConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x0.size()) != objective.dimension()) {
    throw DomainError("starting point has the wrong dimension");
  }
  LbfgsResult res;
  res.x = x0;
  res.f = objective.value_and_gradient(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !res.grad.allFinite()) {
    res.status = LbfgsStatus::kNonFiniteStart;
    return res;
  }
  res.trace.push_back({0, res.f, res.grad.norm(), 0.0});
  if (res.grad.norm() <= cfg.grad_tol) {
    res.status = LbfgsStatus::kConverged;
    return res;
  }

  std::deque<CurvaturePair> mem;
  res.min_stored_curvature = std::numeric_limits<double>::infinity();
  res.status = LbfgsStatus::kMaxIterations;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    Vector d = two_loop(mem, res.grad);
    double gtd = res.grad.dot(d);
    if (!(gtd < 0.0)) {
      // Not a descent direction: drop the curvature memory.
      mem.clear();
      d = -res.grad;
      gtd = -res.grad.squaredNorm();
    }

    LineSearch ls(objective, res.x, d, cfg);
    Point start{0.0, res.f, gtd, res.grad};
    LineSearchOutcome out = ls.run(start, k == 1 ? cfg.lr : 1.0);
    res.evaluations += out.evaluations;

    if (!(out.best.t > 0.0) || !(out.best.f < res.f)) {
      res.status = LbfgsStatus::kLineSearchFailure;
      break;
    }

    Vector x_new = res.x + out.best.t * d;
    Vector s = x_new - res.x;
    Vector y = out.best.g - res.grad;
    const double ys = y.dot(s);
    if (ys > 1e-10 * s.norm() * y.norm() && ys > 0.0) {
      if (static_cast<int>(mem.size()) == cfg.history) mem.pop_front();
      res.min_stored_curvature = std::min(res.min_stored_curvature, ys);
      mem.push_back({std::move(s), std::move(y), 1.0 / ys});
    } else {
      ++res.skipped_pairs;
    }
    const double step_len = out.best.t * d.norm();
    res.x = std::move(x_new);
    res.f = out.best.f;
    res.grad = std::move(out.best.g);
    res.iterations = k;
    const double gnorm = res.grad.norm();
    res.trace.push_back({k, res.f, gnorm, step_len});
    if (gnorm <= cfg.grad_tol) {
      res.status = LbfgsStatus::kConverged;
      break;
    }
  }
  if (!std::isfinite(res.min_stored_curvature)) res.min_stored_curvature = 0.0;
  return res;
}

std::vector<double> default_sweep_lrs() { return {1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0}; }

namespace {

std::string describe_runs(const std::vector<SweepRun>& runs) {
  std::string msg = "every learning-rate run failed:";
  for (const auto& r : runs) msg += " lr=" + format_double(r.lr) + " (" + to_string(r.status) + ")";
  return msg;
}

}  // namespace

SweepFailure::SweepFailure(std::vector<SweepRun> runs)
    : std::runtime_error(describe_runs(runs)), runs_(std::move(runs)) {}

SweepResult lr_sweep(const Objective& objective, const Vector& x0, std::span<const double> lrs,
                     const LbfgsConfig& cfg) {
  if (lrs.empty()) throw DomainError("learning-rate sweep needs at least one value");
  SweepResult out;
  bool have_best = false;
  for (const double lr : lrs) {
    LbfgsConfig c = cfg;
    c.lr = lr;
    LbfgsResult r = minimize(objective, x0, c);
    out.runs.push_back({lr, r.f, r.status, r.iterations});
    if (r.status == LbfgsStatus::kNonFiniteStart || !std::isfinite(r.f)) continue;
    const bool tie = have_best && std::abs(r.f - out.best.f) <=
                                      kSweepTieTol * std::max({1.0, std::abs(r.f), std::abs(out.best.f)});
    const bool better = !have_best || (!tie && r.f < out.best.f) || (tie && lr < out.lr);
    if (better) {
      out.lr = lr;
      out.best = std::move(r);
      have_best = true;
    }
  }
  if (!have_best) throw SweepFailure(out.runs);
  return out;
}

std::string trace_csv_header() { return "iter,f,grad_norm,step_len"; }

void write_trace_csv(const std::vector<TraceEntry>& trace, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << trace_csv_header() << '\n';
  for (const auto& e : trace) {
    os << e.iter << ',' << format_double(e.f) << ',' << format_double(e.grad_norm) << ','
       << format_double(e.step_len) << '\n';
  }
}

}  // namespace pinnfm

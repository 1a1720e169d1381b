#include "pinnfm/losses.hpp"

#include <cmath>

#include "pinnfm/csv.hpp"
#include "pinnfm/detail/jet_tape.hpp"
#include "pinnfm/rng.hpp"

namespace pinnfm {

CollocationSet sample_collocation(const PdeProblem& problem, int n_u, int n_f, int n_b,
                                  std::uint64_t seed) {
  if (n_u < 0 || n_f < 0 || n_b < 0) throw DomainError("collocation counts must be non-negative");
  Rng rng(seed, RngStream::kCollocation);
  CollocationSet c;
  c.ic_time = 0.0;
  c.ic_x.resize(n_u);
  c.ic_target.resize(n_u);
  for (int i = 0; i < n_u; ++i) {
    c.ic_x(i) = kTwoPi * rng.uniform();
    c.ic_target(i) = problem.h(c.ic_x(i));
  }
  const double horizon = problem.horizon;
  c.interior.resize(2, n_f);
  for (int i = 0; i < n_f; ++i) {
    c.interior(0, i) = kTwoPi * rng.uniform();
    c.interior(1, i) = horizon * (1.0 - rng.uniform());  // (0, T]
  }
  c.boundary_t.resize(n_b);
  for (int i = 0; i < n_b; ++i) c.boundary_t(i) = horizon * rng.uniform();
  return c;
}

CollocationSet sample_window(double t0, double t1, int n_f, int n_b, std::uint64_t seed,
                             std::uint64_t window_index) {
  if (n_f < 0 || n_b < 0) throw DomainError("collocation counts must be non-negative");
  if (!(t1 > t0)) throw DomainError("window must have positive length");
  Rng rng(seed, RngStream::kCollocation, window_index + 1);
  CollocationSet c;
  c.ic_time = t0;
  const double len = t1 - t0;
  c.interior.resize(2, n_f);
  for (int i = 0; i < n_f; ++i) {
    c.interior(0, i) = kTwoPi * rng.uniform();
    c.interior(1, i) = t0 + len * (1.0 - rng.uniform());
  }
  c.boundary_t.resize(n_b);
  for (int i = 0; i < n_b; ++i) c.boundary_t(i) = t0 + len * rng.uniform();
  return c;
}

double residual(const PdeProblem& problem, const InputJet& jet) {
  if (const auto* c = std::get_if<Convection>(&problem.equation)) {
    return jet.du_dt + c->beta * jet.du_dx;
  }
  if (const auto* r = std::get_if<Reaction>(&problem.equation)) {
    return jet.du_dt - r->rho * jet.u * (1.0 - jet.u);
  }
  const auto& rd = std::get<ReactionDiffusion>(problem.equation);
  return jet.du_dt - rd.nu * jet.d2u_dx2 - rd.rho * jet.u * (1.0 - jet.u);
}

namespace {

using detail::Channels;
using detail::JetTape;
using detail::LayerWeights;

JetOrder residual_order(const PdeProblem& p) {
  return std::holds_alternative<ReactionDiffusion>(p.equation) ? JetOrder::kSecond
                                                               : JetOrder::kFirst;
}

template <class T>
struct Evaluation {
  double ic = 0.0;
  double bc = 0.0;
  double res = 0.0;
  std::vector<T> gw;
  std::vector<T> gb;
};

template <class T>
void accumulate(std::vector<T>& into, std::vector<T>&& part) {
  if (into.empty()) {
    into = std::move(part);
    return;
  }
  for (std::size_t i = 0; i < into.size(); ++i) into[i] = into[i] + part[i];
}

// Residual r over the batch and, when `bar` is given, the output adjoints of
// scale * sum r^2 / 2 (i.e. dL/du with scale = 2 lambda / N_f).
template <class T>
T residual_channels(const PdeProblem& problem, const Channels<T>& out, double scale,
                    double inv_len, Channels<T>* bar) {
  using detail::cw;
  using detail::one_minus;
  using detail::scaled;
  using detail::zeros_like;
  if (const auto* c = std::get_if<Convection>(&problem.equation)) {
    T r = scaled(inv_len, out.dt) + scaled(c->beta, out.dx);
    if (bar) {
      T rbar = scaled(scale, r);
      bar->val = zeros_like(r);
      bar->dx = scaled(c->beta, rbar);
      bar->dt = scaled(inv_len, rbar);
    }
    return r;
  }
  double nu = 0.0;
  double rho = 0.0;
  if (const auto* re = std::get_if<Reaction>(&problem.equation)) {
    rho = re->rho;
  } else {
    const auto& rd = std::get<ReactionDiffusion>(problem.equation);
    nu = rd.nu;
    rho = rd.rho;
  }
  const bool second = residual_order(problem) == JetOrder::kSecond;
  T r = scaled(inv_len, out.dt) - scaled(rho, cw(out.val, one_minus(out.val)));
  if (second) r = r - scaled(nu, out.dxx);
  if (bar) {
    T rbar = scaled(scale, r);
    bar->val = scaled(-rho, cw(one_minus(scaled(2.0, out.val)), rbar));
    bar->dx = zeros_like(r);
    if (second) bar->dxx = scaled(-nu, rbar);
    bar->dt = scaled(inv_len, rbar);
  }
  return r;
}

// Columns per tape. Keeps every intermediate well below the allocator's mmap
// threshold and inside L2.
constexpr Eigen::Index kChunk = 48;

template <class T>
Evaluation<T> evaluate(const LayerWeights<T>& weights, const PdeProblem& problem,
                       const CollocationSet& c, const Matrix& data_inputs,
                       const Matrix& interior, double inv_len, double lambda, bool want_grad) {
  using detail::cols;
  using detail::hcat;
  using detail::minus_const;
  using detail::scaled;
  using detail::value_of;

  Evaluation<T> ev;
  const Eigen::Index nu = c.n_u();
  const Eigen::Index nb = c.n_b();
  const Eigen::Index nf = c.n_f();

  if (nu + nb > 0) {
    // IC and boundary terms couple columns across the batch (u(0,t) vs
    // u(2pi,t)), so run every chunk forward before forming adjoints. With
    // diffusion the boundary term also matches u_x across the period.
    const bool flux = residual_order(problem) == JetOrder::kSecond && nb > 0;
    const Eigen::Index n = data_inputs.cols();
    std::vector<JetTape<T>> tapes;
    std::vector<T> outs;
    std::vector<T> dx_outs;
    for (Eigen::Index at = 0; at < n; at += kChunk) {
      const Eigen::Index w = std::min(kChunk, n - at);
      tapes.emplace_back(weights, flux ? JetOrder::kFirst : JetOrder::kValue);
      Channels<T> out = tapes.back().forward(data_inputs.middleCols(at, w));
      outs.push_back(std::move(out.val));
      if (flux) dx_outs.push_back(std::move(out.dx));
    }
    const auto join = [](const std::vector<T>& v) {
      if (v.size() == 1) return v.front();
      std::vector<const T*> ptrs;
      for (const auto& o : v) ptrs.push_back(&o);
      return hcat(ptrs);
    };
    const T u = join(outs);

    std::vector<const T*> parts;
    std::vector<const T*> dx_parts;
    T ic_bar;
    T ic_dx_bar;
    T bc_bar;
    T bc_bar_neg;
    T flux_bar;
    T flux_bar_neg;
    if (nu > 0) {
      T diff = minus_const(cols(u, 0, nu), Matrix(c.ic_target.transpose()));
      ev.ic = value_of(diff).squaredNorm() / static_cast<double>(nu);
      ic_bar = scaled(2.0 / static_cast<double>(nu), diff);
      parts.push_back(&ic_bar);
      if (flux) {
        ic_dx_bar = detail::zeros_like(ic_bar);
        dx_parts.push_back(&ic_dx_bar);
      }
    }
    if (nb > 0) {
      T diff = cols(u, nu, nb) - cols(u, nu + nb, nb);
      ev.bc = value_of(diff).squaredNorm() / static_cast<double>(nb);
      bc_bar = scaled(2.0 / static_cast<double>(nb), diff);
      bc_bar_neg = scaled(-2.0 / static_cast<double>(nb), diff);
      parts.push_back(&bc_bar);
      parts.push_back(&bc_bar_neg);
      if (flux) {
        const T ux = join(dx_outs);
        T dflux = cols(ux, nu, nb) - cols(ux, nu + nb, nb);
        ev.bc += value_of(dflux).squaredNorm() / static_cast<double>(nb);
        flux_bar = scaled(2.0 / static_cast<double>(nb), dflux);
        flux_bar_neg = scaled(-2.0 / static_cast<double>(nb), dflux);
        dx_parts.push_back(&flux_bar);
        dx_parts.push_back(&flux_bar_neg);
      }
    }
    if (want_grad) {
      const T ubar = hcat(parts);
      T uxbar;
      if (flux) uxbar = hcat(dx_parts);
      Eigen::Index at = 0;
      for (auto& tape : tapes) {
        const Eigen::Index w = std::min(kChunk, n - at);
        Channels<T> bar;
        bar.val = cols(ubar, at, w);
        if (flux) {
          bar.dx = cols(uxbar, at, w);
          bar.dt = detail::zeros_like(bar.val);
        }
        std::vector<T> gw;
        std::vector<T> gb;
        tape.backward(bar, gw, gb);
        accumulate(ev.gw, std::move(gw));
        accumulate(ev.gb, std::move(gb));
        at += w;
      }
    }
  }

  if (nf > 0 && lambda != 0.0) {
    const JetOrder order = residual_order(problem);
    const double scale = 2.0 * lambda / static_cast<double>(nf);
    double sum_sq = 0.0;
    for (Eigen::Index at = 0; at < nf; at += kChunk) {
      const Eigen::Index w = std::min(kChunk, nf - at);
      JetTape<T> tape(weights, order);
      const Channels<T> out = tape.forward(interior.middleCols(at, w));
      Channels<T> bar;
      const T r = residual_channels(problem, out, scale, inv_len, want_grad ? &bar : nullptr);
      sum_sq += value_of(r).squaredNorm();
      if (want_grad) {
        std::vector<T> gw;
        std::vector<T> gb;
        tape.backward(bar, gw, gb);
        accumulate(ev.gw, std::move(gw));
        accumulate(ev.gb, std::move(gb));
      }
    }
    ev.res = lambda * sum_sq / static_cast<double>(nf);
  }
  return ev;
}

Matrix data_inputs_for(const CollocationSet& c, const TimeWindow& win) {
  const Eigen::Index nu = c.n_u();
  const Eigen::Index nb = c.n_b();
  Matrix in(2, nu + 2 * nb);
  in.block(0, 0, 1, nu) = c.ic_x.transpose();
  in.block(1, 0, 1, nu).setConstant(c.ic_time);
  in.block(0, nu, 1, nb).setZero();
  in.block(1, nu, 1, nb) = c.boundary_t.transpose();
  in.block(0, nu + nb, 1, nb).setConstant(kTwoPi);
  in.block(1, nu + nb, 1, nb) = c.boundary_t.transpose();
  in.row(1) = ((in.row(1).array() - win.t0) / win.length()).matrix();
  return in;
}

LossBreakdown to_breakdown(double ic, double bc, double res, double lambda) {
  return {ic, bc, res, ic + bc + res, lambda};
}

}  // namespace

void TimeWindow::validate() const {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) {
    throw DomainError("time window needs t1 > t0");
  }
}

PinnObjective::PinnObjective(PdeProblem problem, CollocationSet colloc, double lambda,
                             Architecture arch, TimeWindow window)
    : problem_(std::move(problem)),
      colloc_(std::move(colloc)),
      lambda_(lambda),
      arch_(std::move(arch)),
      dim_(NetworkParams::parameter_count(arch_)),
      window_(window) {
  window_.validate();
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw DomainError("lambda must be >= 0");
  if (colloc_.ic_x.size() != colloc_.ic_target.size()) {
    throw DomainError("initial-condition points and targets differ in length");
  }
  data_inputs_ = data_inputs_for(colloc_, window_);
  interior_inputs_ = colloc_.interior;
  interior_inputs_.row(1) =
      ((interior_inputs_.row(1).array() - window_.t0) / window_.length()).matrix();
}

LossBreakdown PinnObjective::breakdown(const Vector& x) const {
  const NetworkParams p(arch_, x);
  const auto ev =
      evaluate(detail::unpack(p), problem_, colloc_, data_inputs_, interior_inputs_,
               1.0 / window_.length(), lambda_, /*want_grad=*/false);
  return to_breakdown(ev.ic, ev.bc, ev.res, lambda_);
}

double PinnObjective::value(const Vector& x) const { return breakdown(x).total; }

double PinnObjective::value_and_gradient(const Vector& x, Vector& grad) const {
  const NetworkParams p(arch_, x);
  auto ev = evaluate(detail::unpack(p), problem_, colloc_, data_inputs_, interior_inputs_,
               1.0 / window_.length(), lambda_, true);
  if (ev.gw.empty()) {
    grad = Vector::Zero(x.size());
  } else {
    detail::flatten_into(p, ev.gw, ev.gb, grad);
  }
  return ev.ic + ev.bc + ev.res;
}

Vector PinnObjective::hessian_vector_product(const Vector& x, const Vector& v) const {
  const NetworkParams p(arch_, x);
  auto ev = evaluate(detail::unpack_dual(p, v), problem_, colloc_, data_inputs_, interior_inputs_,
               1.0 / window_.length(), lambda_, true);
  if (ev.gw.empty()) return Vector::Zero(x.size());
  std::vector<Matrix> dw;
  std::vector<Matrix> db;
  for (std::size_t l = 0; l < ev.gw.size(); ++l) {
    dw.push_back(std::move(ev.gw[l].d));
    db.push_back(std::move(ev.gb[l].d));
  }
  Vector hv;
  detail::flatten_into(p, dw, db, hv);
  return hv;
}

std::string PinnObjective::nonfinite_component(const Vector& x) const {
  const LossBreakdown b = breakdown(x);
  if (!std::isfinite(b.ic_loss)) return "ic";
  if (!std::isfinite(b.bc_loss)) return "bc";
  if (!std::isfinite(b.residual_loss)) return "residual";
  return "total";
}

LossBreakdown total_loss(const NetworkParams& params, const PdeProblem& problem,
                         const CollocationSet& colloc, double lambda) {
  const PinnObjective objective(problem, colloc, lambda, params.architecture());
  const LossBreakdown b = objective.breakdown(params.flat());
  if (!std::isfinite(b.ic_loss)) throw NonFiniteLoss("ic");
  if (!std::isfinite(b.bc_loss)) throw NonFiniteLoss("bc");
  if (!std::isfinite(b.residual_loss)) throw NonFiniteLoss("residual");
  return b;
}

ErrorMetrics error_metrics(const SolutionGrid& predicted, const SolutionGrid& reference) {
  if (predicted.values.rows() != reference.values.rows() ||
      predicted.values.cols() != reference.values.cols()) {
    throw DomainError("prediction and reference grids differ in shape");
  }
  const Eigen::Index nt = reference.values.cols();
  if (nt == 0) throw DomainError("empty grid");
  double rel = 0.0;
  double abs = 0.0;
  for (Eigen::Index j = 0; j < nt; ++j) {
    const double ref_norm = reference.values.col(j).norm();
    if (ref_norm == 0.0) {
      throw DomainError("reference slice " + std::to_string(j) + " is identically zero");
    }
    const double diff = (predicted.values.col(j) - reference.values.col(j)).norm();
    rel += diff / ref_norm;
    abs += diff;
  }
  return {rel / static_cast<double>(nt), abs / static_cast<double>(nt)};
}

SolutionGrid predict_grid(const NetworkParams& params, const std::vector<double>& xs,
                          const std::vector<double>& ts, const TimeWindow& window) {
  window.validate();
  const auto nx = static_cast<Eigen::Index>(xs.size());
  const auto nt = static_cast<Eigen::Index>(ts.size());
  Matrix in(2, nx * nt);
  for (Eigen::Index j = 0; j < nt; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      in(0, j * nx + i) = xs[static_cast<std::size_t>(i)];
      in(1, j * nx + i) = window.local(ts[static_cast<std::size_t>(j)]);
    }
  }
  const Eigen::RowVectorXd u = forward_batch(params, in);
  SolutionGrid g{xs, ts, Matrix(nx, nt)};
  for (Eigen::Index j = 0; j < nt; ++j) g.values.col(j) = u.segment(j * nx, nx).transpose();
  return g;
}

std::string loss_csv_header() { return "run_id,iteration,ic_loss,bc_loss,residual_loss,total,lambda"; }

std::string loss_csv_row(const std::string& run_id, long iteration, const LossBreakdown& loss) {
  return csv_row({run_id, std::to_string(iteration), format_double(loss.ic_loss),
                  format_double(loss.bc_loss), format_double(loss.residual_loss),
                  format_double(loss.total), format_double(loss.lambda)});
}

}  // namespace pinnfm

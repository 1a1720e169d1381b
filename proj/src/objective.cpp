#include "pinnfm/objective.hpp"

#include <algorithm>
#include <cmath>

namespace pinnfm {

Vector Objective::hessian_vector_product(const Vector& x, const Vector& v) const {
  return finite_difference_hvp(*this, x, v);
}

Vector finite_difference_hvp(const Objective& objective, const Vector& x, const Vector& v) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) return Vector::Zero(v.size());
  const double h = 1e-5 * std::max(x.norm(), 1.0) / vnorm;
  Vector gp;
  Vector gm;
  objective.value_and_gradient(x + h * v, gp);
  objective.value_and_gradient(x - h * v, gm);
  return (gp - gm) / (2.0 * h);
}

Vector loss_gradient(const Vector& x, const Objective& objective) {
  Vector grad;
  const double f = objective.value_and_gradient(x, grad);
  if (!std::isfinite(f)) throw NonFiniteLoss(objective.nonfinite_component(x));
  if (!grad.allFinite()) throw NonFiniteLoss("gradient");
  return grad;
}

Vector loss_gradient(const NetworkParams& params, const Objective& objective) {
  return loss_gradient(params.flat(), objective);
}

Vector hessian_vector_product(const Vector& x, const Objective& objective, const Vector& v) {
  if (v.size() == 0) throw DomainError("Hessian-vector product needs a non-empty direction");
  if (v.size() != x.size()) {
    throw DomainError("direction length " + std::to_string(v.size()) +
                      " does not match parameter count " + std::to_string(x.size()));
  }
  return objective.hessian_vector_product(x, v);
}

Vector hessian_vector_product(const NetworkParams& params, const Objective& objective,
                              const Vector& v) {
  return hessian_vector_product(params.flat(), objective, v);
}

double DiagonalQuadratic::value(const Vector& x) const {
  return 0.5 * x.cwiseProduct(diag_).dot(x);
}

double DiagonalQuadratic::value_and_gradient(const Vector& x, Vector& grad) const {
  grad = diag_.cwiseProduct(x);
  return 0.5 * grad.dot(x);
}

Vector DiagonalQuadratic::hessian_vector_product(const Vector&, const Vector& v) const {
  return diag_.cwiseProduct(v);
}

}  // namespace pinnfm

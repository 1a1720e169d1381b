#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "pinnfm/network.hpp"

namespace pinnfm {

/// A loss evaluated to a non-finite value. `component()` names the offending
/// term ("ic", "bc", "residual", or "total" for opaque objectives).
class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(std::string component)
      : std::runtime_error("loss component '" + component + "' is not finite"),
        component_(std::move(component)) {}
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

/// Scalar objective over a flat parameter vector.
///
/// Implementations must be pure: the same x yields the same value and
/// gradient bit for bit. Non-finite values are returned, not thrown, so the
/// optimizer can back off.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual double value_and_gradient(const Vector& x, Vector& grad) const = 0;

  /// Hv at x. The default differences gradients centrally, see
  /// finite_difference_hvp(); objectives with exact second-order support
  /// override it.
  virtual Vector hessian_vector_product(const Vector& x, const Vector& v) const;

  /// Name of the first non-finite loss term at x ("total" if unknown).
  virtual std::string nonfinite_component(const Vector& /*x*/) const { return "total"; }
};

/// Gradient of `objective` at the flattened params; throws NonFiniteLoss.
Vector loss_gradient(const NetworkParams& params, const Objective& objective);
Vector loss_gradient(const Vector& x, const Objective& objective);

/// Hv via the objective's exact route. Throws DomainError when v is empty or
/// its length differs from the parameter count.
Vector hessian_vector_product(const NetworkParams& params, const Objective& objective,
                              const Vector& v);
Vector hessian_vector_product(const Vector& x, const Objective& objective, const Vector& v);

/// Central differences of gradients with step 1e-5 * max(|x|, 1) / |v|.
Vector finite_difference_hvp(const Objective& objective, const Vector& x, const Vector& v);

/// f(x) = 1/2 sum_i d_i x_i^2.
class DiagonalQuadratic final : public Objective {
 public:
  explicit DiagonalQuadratic(Vector diagonal) : diag_(std::move(diagonal)) {}
  std::size_t dimension() const override { return static_cast<std::size_t>(diag_.size()); }
  double value(const Vector& x) const override;
  double value_and_gradient(const Vector& x, Vector& grad) const override;
  Vector hessian_vector_product(const Vector& x, const Vector& v) const override;

 private:
  Vector diag_;
};

/// Objective assembled from callables; used for analytic test functions.
class FunctionObjective final : public Objective {
 public:
  using ValueGrad = std::function<double(const Vector&, Vector&)>;

  FunctionObjective(std::size_t dim, ValueGrad fn) : dim_(dim), fn_(std::move(fn)) {}
  std::size_t dimension() const override { return dim_; }
  double value(const Vector& x) const override {
    Vector g;
    return fn_(x, g);
  }
  double value_and_gradient(const Vector& x, Vector& grad) const override { return fn_(x, grad); }

 private:
  std::size_t dim_;
  ValueGrad fn_;
};

}  // namespace pinnfm

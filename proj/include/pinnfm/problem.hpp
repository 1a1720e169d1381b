#pragma once

#include <numbers>
#include <string>
#include <variant>

namespace pinnfm {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// u_t + beta u_x = 0
struct Convection {
  double beta = 0.0;
};

/// u_t - rho u (1 - u) = 0
struct Reaction {
  double rho = 0.0;
};

/// u_t - nu u_xx - rho u (1 - u) = 0, nu > 0
struct ReactionDiffusion {
  double nu = 1.0;
  double rho = 0.0;
};

enum class InitialCondition {
  kSine,      ///< sin(x)
  kGaussian,  ///< exp(-(x - pi)^2 / (2 (pi/4)^2))
};

double initial_value(InitialCondition ic, double x);
std::string to_string(InitialCondition ic);

/// A 1D periodic problem on [0, 2pi) x [0, horizon].
struct PdeProblem {
  std::variant<Convection, Reaction, ReactionDiffusion> equation;
  double horizon = 1.0;
  InitialCondition initial_condition = InitialCondition::kSine;

  static PdeProblem convection(double beta, double horizon = 1.0);
  static PdeProblem reaction(double rho, double horizon = 1.0);
  static PdeProblem reaction_diffusion(double nu, double rho, double horizon = 1.0);

  /// "convection", "reaction" or "reaction_diffusion".
  std::string kind() const;

  /// The coefficient a curriculum ramps: beta for convection, rho otherwise.
  double coefficient() const;
  PdeProblem with_coefficient(double value) const;

  double h(double x) const { return initial_value(initial_condition, x); }

  /// Throws DomainError naming the offending field.
  void validate() const;
};

bool operator==(const PdeProblem& a, const PdeProblem& b);

}  // namespace pinnfm

#include "pinnfm/problem.hpp"

#include <cmath>

#include "pinnfm/network.hpp"

namespace pinnfm {

double initial_value(InitialCondition ic, double x) {
  switch (ic) {
    case InitialCondition::kSine:
      return std::sin(x);
    case InitialCondition::kGaussian: {
      constexpr double sigma = std::numbers::pi / 4.0;
      const double d = x - std::numbers::pi;
      return std::exp(-d * d / (2.0 * sigma * sigma));
    }
  }
  return 0.0;
}

std::string to_string(InitialCondition ic) {
  return ic == InitialCondition::kSine ? "sin" : "gauss";
}

PdeProblem PdeProblem::convection(double beta, double horizon) {
  return {Convection{beta}, horizon, InitialCondition::kSine};
}

PdeProblem PdeProblem::reaction(double rho, double horizon) {
  return {Reaction{rho}, horizon, InitialCondition::kGaussian};
}

PdeProblem PdeProblem::reaction_diffusion(double nu, double rho, double horizon) {
  return {ReactionDiffusion{nu, rho}, horizon, InitialCondition::kGaussian};
}

std::string PdeProblem::kind() const {
  struct {
    std::string operator()(const Convection&) const { return "convection"; }
    std::string operator()(const Reaction&) const { return "reaction"; }
    std::string operator()(const ReactionDiffusion&) const { return "reaction_diffusion"; }
  } visitor;
  return std::visit(visitor, equation);
}

double PdeProblem::coefficient() const {
  if (const auto* c = std::get_if<Convection>(&equation)) return c->beta;
  if (const auto* r = std::get_if<Reaction>(&equation)) return r->rho;
  return std::get<ReactionDiffusion>(equation).rho;
}

PdeProblem PdeProblem::with_coefficient(double value) const {
  PdeProblem out = *this;
  if (auto* c = std::get_if<Convection>(&out.equation)) {
    c->beta = value;
  } else if (auto* r = std::get_if<Reaction>(&out.equation)) {
    r->rho = value;
  } else {
    std::get<ReactionDiffusion>(out.equation).rho = value;
  }
  return out;
}

void PdeProblem::validate() const {
  if (!(std::isfinite(horizon) && horizon > 0.0)) throw DomainError("T must be positive");
  if (const auto* c = std::get_if<Convection>(&equation)) {
    if (!std::isfinite(c->beta)) throw DomainError("beta must be finite");
  } else if (const auto* r = std::get_if<Reaction>(&equation)) {
    if (!std::isfinite(r->rho)) throw DomainError("rho must be finite");
  } else {
    const auto& rd = std::get<ReactionDiffusion>(equation);
    if (!(std::isfinite(rd.nu) && rd.nu > 0.0)) throw DomainError("nu must be positive");
    if (!std::isfinite(rd.rho)) throw DomainError("rho must be finite");
  }
}

bool operator==(const PdeProblem& a, const PdeProblem& b) {
  if (a.equation.index() != b.equation.index()) return false;
  if (a.horizon != b.horizon || a.initial_condition != b.initial_condition) return false;
  if (const auto* c = std::get_if<Convection>(&a.equation)) {
    return c->beta == std::get<Convection>(b.equation).beta;
  }
  if (const auto* r = std::get_if<Reaction>(&a.equation)) {
    return r->rho == std::get<Reaction>(b.equation).rho;
  }
  const auto& x = std::get<ReactionDiffusion>(a.equation);
  const auto& y = std::get<ReactionDiffusion>(b.equation);
  return x.nu == y.nu && x.rho == y.rho;
}

}  // namespace pinnfm

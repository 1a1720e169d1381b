#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "pinnfm/network.hpp"
#include "pinnfm/problem.hpp"

namespace pinnfm {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Forward DFT, X_k = sum_j s_j exp(-2 pi i jk/n). Radix-2 for powers of two,
/// direct summation otherwise. Throws DomainError on empty input.
ComplexVector dft(std::span<const Complex> signal);
ComplexVector dft(std::span<const double> signal);
/// Inverse with the 1/n factor.
ComplexVector idft(std::span<const Complex> spectrum);
/// Real part of idft().
std::vector<double> idft_real(std::span<const Complex> spectrum);

bool is_power_of_two(std::size_t n);

/// n uniform points on [0, 2pi) and integer wavenumbers in DFT order.
struct SpectralGrid {
  std::vector<double> xs;
  std::vector<int> ks;

  explicit SpectralGrid(std::size_t n);
  std::size_t size() const { return xs.size(); }
  double spacing() const { return kTwoPi / static_cast<double>(xs.size()); }
};

/// u(x, t) sampled on an (x, t) lattice; values(i, j) = u(xs[i], ts[j]).
struct SolutionGrid {
  std::vector<double> xs;
  std::vector<double> ts;
  Matrix values;

  std::size_t nx() const { return xs.size(); }
  std::size_t nt() const { return ts.size(); }
};

/// Periodic translation of h0 by beta * t via the Fourier shift theorem.
std::vector<double> convection_solution(std::span<const double> h0, double beta, double t);

/// Logistic growth h e^{rho t} / (h e^{rho t} + 1 - h), evaluated as
/// h / (h + (1 - h) e^{-rho t}). Requires 0 <= h0 <= 1.
double reaction_solution(double h0, double rho, double t);
std::vector<double> reaction_solution(std::span<const double> h0, double rho, double t);

/// Exact heat-equation step: each Fourier mode scaled by exp(-nu k^2 dt).
std::vector<double> diffusion_step(std::span<const double> u, double nu, double dt);

/// Reaction-then-diffusion splitting on nt_solver uniform steps over
/// [0, horizon]. The result has nt_solver + 1 time slices. nu == 0 skips the
/// diffusion half-step.
SolutionGrid reaction_diffusion_solution(const PdeProblem& problem, int nt_solver,
                                         std::size_t nx = 256);

inline constexpr std::size_t kDefaultGridX = 256;
inline constexpr std::size_t kDefaultGridT = 100;
inline constexpr int kDefaultSolverSteps = 200;

/// Evaluation times: nt points spanning [t0, t1] inclusive.
std::vector<double> time_lattice(double t0, double t1, std::size_t nt);

/// Exact solution of `problem` on nx spatial x nt temporal points.
SolutionGrid reference_grid(const PdeProblem& problem, std::size_t nx = kDefaultGridX,
                            std::size_t nt = kDefaultGridT, int nt_solver = kDefaultSolverSteps);

/// CSV with header "x,t,u", one row per lattice point (time-major).
void write_grid_csv(const SolutionGrid& grid, const std::filesystem::path& path);
/// nt lines of nx comma-separated values.
void write_grid_matrix(const SolutionGrid& grid, const std::filesystem::path& path);

}  // namespace pinnfm

#include "pinnfm/oracles.hpp"

#include <cmath>
#include <fstream>

#include "pinnfm/csv.hpp"

namespace pinnfm {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

// In-place iterative Cooley-Tukey; sign = -1 forward, +1 inverse (unscaled).
void fft_radix2(ComplexVector& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddles evaluated directly rather than by repeated multiplication.
  ComplexVector w(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = sign * kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(ang), std::sin(ang)};
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w[k * stride];
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

ComplexVector dft_direct(std::span<const Complex> s, int sign) {
  const std::size_t n = s.size();
  ComplexVector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const double ang =
          sign * kTwoPi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += s[j] * Complex{std::cos(ang), std::sin(ang)};
    }
    out[k] = acc;
  }
  return out;
}

ComplexVector transform(std::span<const Complex> s, int sign) {
  if (s.empty()) throw DomainError("DFT of an empty signal");
  if (is_power_of_two(s.size())) {
    ComplexVector a(s.begin(), s.end());
    fft_radix2(a, sign);
    return a;
  }
  return dft_direct(s, sign);
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw DomainError(std::string(name) + " must be finite");
}

}  // namespace

ComplexVector dft(std::span<const Complex> signal) { return transform(signal, -1); }

ComplexVector dft(std::span<const double> signal) {
  ComplexVector c(signal.begin(), signal.end());
  return transform(c, -1);
}

ComplexVector idft(std::span<const Complex> spectrum) {
  ComplexVector out = transform(spectrum, +1);
  const double inv = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= inv;
  return out;
}

std::vector<double> idft_real(std::span<const Complex> spectrum) {
  const ComplexVector c = idft(spectrum);
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

SpectralGrid::SpectralGrid(std::size_t n) {
  if (n == 0) throw DomainError("spectral grid needs at least one point");
  xs.resize(n);
  ks.resize(n);
  const auto half = static_cast<long>(n / 2);
  for (std::size_t j = 0; j < n; ++j) {
    xs[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    const auto jj = static_cast<long>(j);
    // 0, 1, ..., n/2 - 1, -n/2, ..., -1 (odd n: 0..(n-1)/2, -(n-1)/2..-1)
    ks[j] = static_cast<int>(jj < static_cast<long>(n) - half ? jj : jj - static_cast<long>(n));
  }
}

std::vector<double> convection_solution(std::span<const double> h0, double beta, double t) {
  require_finite(beta, "beta");
  require_finite(t, "t");
  const SpectralGrid grid(h0.size());
  ComplexVector spec = dft(h0);
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const double phase = -beta * grid.ks[j] * t;
    spec[j] *= Complex{std::cos(phase), std::sin(phase)};
  }
  return idft_real(spec);
}

double reaction_solution(double h0, double rho, double t) {
  if (!(h0 >= 0.0 && h0 <= 1.0)) throw DomainError("reaction initial value must lie in [0, 1]");
  require_finite(rho, "rho");
  require_finite(t, "t");
  if (h0 == 0.0 || h0 == 1.0) return h0;
  return h0 / (h0 + (1.0 - h0) * std::exp(-rho * t));
}

std::vector<double> reaction_solution(std::span<const double> h0, double rho, double t) {
  std::vector<double> out(h0.size());
  for (std::size_t i = 0; i < h0.size(); ++i) out[i] = reaction_solution(h0[i], rho, t);
  return out;
}

std::vector<double> diffusion_step(std::span<const double> u, double nu, double dt) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("nu must be positive");
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw DomainError("dt must be non-negative");
  if (dt == 0.0) return {u.begin(), u.end()};
  const SpectralGrid grid(u.size());
  ComplexVector spec = dft(u);
  for (std::size_t j = 0; j < spec.size(); ++j) {
    const double k = grid.ks[j];
    spec[j] *= std::exp(-nu * k * k * dt);
  }
  return idft_real(spec);
}

namespace {

std::vector<double> split_step(std::vector<double> u, double nu, double rho, double dt) {
  u = reaction_solution(u, rho, dt);
  if (nu != 0.0) u = diffusion_step(u, nu, dt);
  return u;
}

const ReactionDiffusion& require_rd(const PdeProblem& problem) {
  const auto* rd = std::get_if<ReactionDiffusion>(&problem.equation);
  if (rd == nullptr) throw DomainError("problem is not reaction-diffusion");
  if (!(rd->nu >= 0.0) || !std::isfinite(rd->nu)) throw DomainError("nu must be non-negative");
  return *rd;
}

std::vector<double> initial_samples(const PdeProblem& problem, const std::vector<double>& xs) {
  std::vector<double> h(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) h[i] = problem.h(xs[i]);
  return h;
}

}  // namespace

SolutionGrid reaction_diffusion_solution(const PdeProblem& problem, int nt_solver, std::size_t nx) {
  const auto& rd = require_rd(problem);
  if (nt_solver < 1) throw DomainError("nt_solver must be at least 1");
  SolutionGrid grid;
  grid.xs = SpectralGrid(nx).xs;
  grid.ts = time_lattice(0.0, problem.horizon, static_cast<std::size_t>(nt_solver) + 1);
  grid.values.resize(static_cast<Eigen::Index>(nx), nt_solver + 1);
  std::vector<double> u = initial_samples(problem, grid.xs);
  const double dt = problem.horizon / nt_solver;
  for (int j = 0; j <= nt_solver; ++j) {
    if (j > 0) u = split_step(std::move(u), rd.nu, rd.rho, dt);
    grid.values.col(j) = Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(nx));
  }
  return grid;
}

std::vector<double> time_lattice(double t0, double t1, std::size_t nt) {
  if (nt == 0) throw DomainError("time lattice needs at least one point");
  std::vector<double> ts(nt);
  if (nt == 1) {
    ts[0] = t0;
    return ts;
  }
  for (std::size_t j = 0; j < nt; ++j) {
    ts[j] = t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(nt - 1);
  }
  ts.back() = t1;
  return ts;
}

SolutionGrid reference_grid(const PdeProblem& problem, std::size_t nx, std::size_t nt,
                            int nt_solver) {
  problem.validate();
  SolutionGrid grid;
  grid.xs = SpectralGrid(nx).xs;
  grid.ts = time_lattice(0.0, problem.horizon, nt);
  grid.values.resize(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nt));
  const std::vector<double> h = initial_samples(problem, grid.xs);
  const auto put = [&](std::size_t j, const std::vector<double>& col) {
    grid.values.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Vector>(col.data(), static_cast<Eigen::Index>(nx));
  };

  if (const auto* c = std::get_if<Convection>(&problem.equation)) {
    for (std::size_t j = 0; j < nt; ++j) put(j, convection_solution(h, c->beta, grid.ts[j]));
  } else if (const auto* r = std::get_if<Reaction>(&problem.equation)) {
    for (std::size_t j = 0; j < nt; ++j) put(j, reaction_solution(h, r->rho, grid.ts[j]));
  } else {
    const auto& rd = require_rd(problem);
    if (nt_solver < 1) throw DomainError("nt_solver must be at least 1");
    // March between lattice times with substeps no longer than horizon/nt_solver.
    std::vector<double> u = h;
    put(0, u);
    for (std::size_t j = 1; j < nt; ++j) {
      const double span = grid.ts[j] - grid.ts[j - 1];
      const int substeps =
          std::max(1, static_cast<int>(std::ceil(nt_solver * span / problem.horizon - 1e-9)));
      const double dt = span / substeps;
      for (int s = 0; s < substeps; ++s) u = split_step(std::move(u), rd.nu, rd.rho, dt);
      put(j, u);
    }
  }
  return grid;
}

void write_grid_csv(const SolutionGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "x,t,u\n";
  for (std::size_t j = 0; j < grid.nt(); ++j) {
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      os << format_double(grid.xs[i]) << ',' << format_double(grid.ts[j]) << ','
         << format_double(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
         << '\n';
    }
  }
}

void write_grid_matrix(const SolutionGrid& grid, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < grid.nt(); ++j) {
    for (std::size_t i = 0; i < grid.nx(); ++i) {
      if (i) os << ',';
      os << format_double(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    os << '\n';
  }
}

}  // namespace pinnfm

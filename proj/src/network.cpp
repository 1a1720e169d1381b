#include "pinnfm/network.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "pinnfm/detail/jet_tape.hpp"
#include "pinnfm/rng.hpp"

namespace pinnfm {

Architecture default_architecture() { return {2, 50, 50, 50, 50, 1}; }

std::size_t NetworkParams::parameter_count(const Architecture& arch) {
  if (arch.size() < 2) throw DomainError("architecture needs at least input and output widths");
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    if (arch[l] <= 0 || arch[l + 1] <= 0) throw DomainError("layer widths must be positive");
    n += static_cast<std::size_t>(arch[l]) * static_cast<std::size_t>(arch[l + 1]) +
         static_cast<std::size_t>(arch[l + 1]);
  }
  return n;
}

NetworkParams::NetworkParams() : NetworkParams(default_architecture()) {}

NetworkParams::NetworkParams(Architecture arch)
    : NetworkParams(arch, Vector::Zero(static_cast<Eigen::Index>(parameter_count(arch)))) {}

NetworkParams::NetworkParams(Architecture arch, Vector flat)
    : arch_(std::move(arch)), flat_(std::move(flat)) {
  if (arch_.front() != 2 || arch_.back() != 1) {
    throw DomainError("network must map (x, t) to a scalar");
  }
  if (static_cast<std::size_t>(flat_.size()) != parameter_count(arch_)) {
    throw DomainError("flat parameter vector has length " + std::to_string(flat_.size()) +
                      ", architecture needs " + std::to_string(parameter_count(arch_)));
  }
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < arch_.size(); ++l) {
    offsets_.push_back(at);
    at += static_cast<std::size_t>(arch_[l]) * arch_[l + 1] + arch_[l + 1];
  }
}

NetworkParams NetworkParams::glorot(std::uint64_t seed, Architecture arch, std::uint64_t index) {
  NetworkParams p(std::move(arch));
  Rng rng(seed, RngStream::kInit, index);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const double fan_in = p.arch_[l];
    const double fan_out = p.arch_[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    auto w = p.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
    }
  }
  return p;
}

std::size_t NetworkParams::bias_offset(std::size_t layer) const {
  return offsets_[layer] + static_cast<std::size_t>(arch_[layer]) * arch_[layer + 1];
}

Eigen::Map<const RowMajorMatrix> NetworkParams::weight(std::size_t layer) const {
  return {flat_.data() + offsets_[layer], arch_[layer + 1], arch_[layer]};
}
Eigen::Map<RowMajorMatrix> NetworkParams::weight(std::size_t layer) {
  return {flat_.data() + offsets_[layer], arch_[layer + 1], arch_[layer]};
}
Eigen::Map<const Vector> NetworkParams::bias(std::size_t layer) const {
  return {flat_.data() + bias_offset(layer), arch_[layer + 1]};
}
Eigen::Map<Vector> NetworkParams::bias(std::size_t layer) {
  return {flat_.data() + bias_offset(layer), arch_[layer + 1]};
}

namespace {

void require_finite_point(double x, double t) {
  if (!std::isfinite(x) || !std::isfinite(t)) {
    throw DomainError("network input must be finite");
  }
}

void require_finite_inputs(const Matrix& inputs) {
  if (inputs.rows() != 2) throw DomainError("network inputs must have two rows (x, t)");
  if (!inputs.allFinite()) throw DomainError("network input must be finite");
}

}  // namespace

Eigen::RowVectorXd forward_batch(const NetworkParams& params, const Matrix& inputs) {
  require_finite_inputs(inputs);
  const auto weights = detail::unpack(params);
  constexpr Eigen::Index kChunk = 256;
  Eigen::RowVectorXd out(inputs.cols());
  for (Eigen::Index c0 = 0; c0 < inputs.cols(); c0 += kChunk) {
    const Eigen::Index n = std::min(kChunk, inputs.cols() - c0);
    detail::JetTape<Matrix> tape(weights, JetOrder::kValue);
    out.segment(c0, n) = tape.forward(inputs.middleCols(c0, n)).val.row(0);
  }
  return out;
}

BatchJet forward_jet_batch(const NetworkParams& params, const Matrix& inputs, JetOrder order) {
  require_finite_inputs(inputs);
  const auto weights = detail::unpack(params);
  detail::JetTape<Matrix> tape(weights, order);
  auto out = tape.forward(inputs);
  const Eigen::Index n = inputs.cols();
  BatchJet jet;
  jet.u = out.val.row(0);
  jet.du_dt = detail::has_first(order) ? Eigen::RowVectorXd(out.dt.row(0))
                                       : Eigen::RowVectorXd::Zero(n);
  jet.du_dx = detail::has_first(order) ? Eigen::RowVectorXd(out.dx.row(0))
                                       : Eigen::RowVectorXd::Zero(n);
  jet.d2u_dx2 = detail::has_second(order) ? Eigen::RowVectorXd(out.dxx.row(0))
                                          : Eigen::RowVectorXd::Zero(n);
  return jet;
}

double forward(const NetworkParams& params, double x, double t) {
  require_finite_point(x, t);
  Matrix in(2, 1);
  in << x, t;
  return forward_batch(params, in)(0);
}

InputJet forward_jet(const NetworkParams& params, double x, double t) {
  require_finite_point(x, t);
  Matrix in(2, 1);
  in << x, t;
  const BatchJet b = forward_jet_batch(params, in, JetOrder::kSecond);
  return {b.u(0), b.du_dt(0), b.du_dx(0), b.d2u_dx2(0)};
}

// ---- snapshots -------------------------------------------------------------

namespace {

template <class U>
void put_le(std::ostream& os, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  std::array<char, sizeof(U)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), bytes.size());
}

template <class U>
U get_le(std::istream& is) {
  std::array<char, sizeof(U)> bytes{};
  if (!is.read(bytes.data(), bytes.size())) throw std::runtime_error("truncated snapshot");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  U value;
  std::memcpy(&value, bytes.data(), sizeof(U));
  return value;
}

}  // namespace

void save_snapshot(const NetworkParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write("PINN", 4);
  put_le<std::uint32_t>(os, kSnapshotVersion);
  put_le<std::uint64_t>(os, params.size());
  for (Eigen::Index i = 0; i < params.flat().size(); ++i) put_le<double>(os, params.flat()(i));
}

NetworkParams load_snapshot(const std::filesystem::path& path, Architecture arch) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (!is || std::string(magic.data(), 4) != "PINN") throw std::runtime_error("bad snapshot magic");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kSnapshotVersion) {
    throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
  }
  const auto count = get_le<std::uint64_t>(is);
  if (count != NetworkParams::parameter_count(arch)) {
    throw std::runtime_error("snapshot parameter count does not match architecture");
  }
  Vector flat(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = get_le<double>(is);
  return NetworkParams(std::move(arch), std::move(flat));
}

void save_snapshot_csv(const NetworkParams& params, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "index,value\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < params.flat().size(); ++i) os << i << ',' << params.flat()(i) << '\n';
}

}  // namespace pinnfm

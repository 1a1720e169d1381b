#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pinnfm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when an input or parameter leaves the numeric domain an operation accepts.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Layer widths from input to output, e.g. {2, 50, 50, 50, 50, 1}.
using Architecture = std::vector<int>;

/// The fixed PINN architecture: (x, t) -> 4 tanh layers of width 50 -> u.
Architecture default_architecture();

/// Weights and biases of a fully-connected tanh network.
///
/// Parameters live in one flat vector, layer-major, with each layer's weight
/// matrix (out x in, row-major) followed by its bias. The flat layout is what
/// the optimizer and the binary snapshot format see.
class NetworkParams {
 public:
  NetworkParams();
  explicit NetworkParams(Architecture arch);
  NetworkParams(Architecture arch, Vector flat);

  /// Glorot-uniform weights, zero biases. `index` selects an independent
  /// draw for the same seed (e.g. one per time segment).
  static NetworkParams glorot(std::uint64_t seed, Architecture arch = default_architecture(),
                              std::uint64_t index = 0);

  static std::size_t parameter_count(const Architecture& arch);

  const Architecture& architecture() const { return arch_; }
  std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }
  std::size_t num_layers() const { return arch_.size() - 1; }

  const Vector& flat() const { return flat_; }
  Vector& flat() { return flat_; }

  Eigen::Map<const RowMajorMatrix> weight(std::size_t layer) const;
  Eigen::Map<RowMajorMatrix> weight(std::size_t layer);
  Eigen::Map<const Vector> bias(std::size_t layer) const;
  Eigen::Map<Vector> bias(std::size_t layer);

  /// Offset of layer `layer`'s weight block inside flat().
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const;

  bool all_finite() const { return flat_.allFinite(); }

 private:
  Architecture arch_;
  std::vector<std::size_t> offsets_;
  Vector flat_;
};

/// Network output and its exact input derivatives at one point.
struct InputJet {
  double u = 0.0;
  double du_dt = 0.0;
  double du_dx = 0.0;
  double d2u_dx2 = 0.0;
};

/// Which input-derivative channels a batched evaluation carries.
enum class JetOrder {
  kValue,   ///< u only
  kFirst,   ///< u, du/dt, du/dx
  kSecond,  ///< u, du/dt, du/dx, d2u/dx2
};

/// Batched jets: each member is a row vector over the batch.
struct BatchJet {
  Eigen::RowVectorXd u;
  Eigen::RowVectorXd du_dt;
  Eigen::RowVectorXd du_dx;
  Eigen::RowVectorXd d2u_dx2;
};

double forward(const NetworkParams& params, double x, double t);
InputJet forward_jet(const NetworkParams& params, double x, double t);

/// Evaluate the network on the columns of `inputs` (row 0 = x, row 1 = t).
Eigen::RowVectorXd forward_batch(const NetworkParams& params, const Matrix& inputs);
BatchJet forward_jet_batch(const NetworkParams& params, const Matrix& inputs,
                           JetOrder order = JetOrder::kSecond);

// Snapshot I/O. Binary layout: "PINN", u32 version, u64 count, then count
// little-endian f64 values.
inline constexpr std::uint32_t kSnapshotVersion = 1;

void save_snapshot(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams load_snapshot(const std::filesystem::path& path,
                            Architecture arch = default_architecture());
/// One line per parameter: index,value.
void save_snapshot_csv(const NetworkParams& params, const std::filesystem::path& path);

}  // namespace pinnfm

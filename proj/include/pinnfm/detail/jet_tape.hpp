#pragma once

// Batched forward/backward through a tanh MLP that carries input-derivative
// channels (u, u_t, u_x, u_xx) alongside the values.
//
// The kernel is written once against a tiny tensor vocabulary and instantiated
// twice: with plain matrices for loss gradients, and with DualMatrix (value +
// tangent along a parameter direction) so that the tangent of the gradient is
// an exact Hessian-vector product.

#include <vector>

#include <Eigen/Dense>

#include "pinnfm/network.hpp"

namespace pinnfm::detail {

/// A matrix carrying a first-order tangent: v + eps * d.
struct DualMatrix {
  Matrix v;
  Matrix d;
};

// ---- plain vocabulary ----------------------------------------------------

inline Matrix lift(const Matrix& m, const Matrix*) { return m; }
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out;
  out.noalias() = a * b;
  return out;
}
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out;
  out.noalias() = a.transpose() * b;
  return out;
}
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix out;
  out.noalias() = a * b.transpose();
  return out;
}

// Elementwise helpers return lazy expressions so nested uses fuse into a
// single loop when assigned.
template <class A, class B>
auto cw(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return a.cwiseProduct(b);
}
template <class A>
auto scaled(double s, const Eigen::MatrixBase<A>& a) {
  return s * a;
}
template <class A>
auto one_minus(const Eigen::MatrixBase<A>& a) {
  return (1.0 - a.array()).matrix();
}

/// tanh through the vectorized exp: 1 - 2 / (e^{2z} + 1). Absolute error is
/// a few ulp of 1; saturates cleanly to +-1.
template <class A>
Matrix fast_tanh(const Eigen::MatrixBase<A>& z) {
  return (1.0 - 2.0 / ((2.0 * z.derived().array()).exp() + 1.0)).matrix();
}
inline Matrix tanh_of(const Matrix& z) { return fast_tanh(z); }
inline Matrix add_bias(const Matrix& z, const Matrix& b) { return z.colwise() + b.col(0); }
inline Matrix rowsum(const Matrix& a) { return a.rowwise().sum(); }
inline Matrix cols(const Matrix& a, Eigen::Index start, Eigen::Index n) {
  return a.middleCols(start, n);
}
inline Matrix hcat(const std::vector<const Matrix*>& parts) {
  Eigen::Index total = 0;
  for (const auto* p : parts) total += p->cols();
  Matrix out(parts.front()->rows(), total);
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    out.middleCols(at, p->cols()) = *p;
    at += p->cols();
  }
  return out;
}
inline Matrix minus_const(const Matrix& a, const Matrix& c) { return a - c; }
inline Matrix zeros_like(const Matrix& a) { return Matrix::Zero(a.rows(), a.cols()); }
inline const Matrix& value_of(const Matrix& a) { return a; }

// ---- dual vocabulary -----------------------------------------------------

inline DualMatrix lift(const Matrix& m, const DualMatrix*) {
  return {m, Matrix::Zero(m.rows(), m.cols())};
}
inline DualMatrix operator+(const DualMatrix& a, const DualMatrix& b) { return {a.v + b.v, a.d + b.d}; }
inline DualMatrix operator-(const DualMatrix& a, const DualMatrix& b) { return {a.v - b.v, a.d - b.d}; }
inline DualMatrix matmul(const DualMatrix& a, const DualMatrix& b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline DualMatrix matmul_tn(const DualMatrix& a, const DualMatrix& b) {
  return {a.v.transpose() * b.v, a.d.transpose() * b.v + a.v.transpose() * b.d};
}
inline DualMatrix matmul_nt(const DualMatrix& a, const DualMatrix& b) {
  return {a.v * b.v.transpose(), a.d * b.v.transpose() + a.v * b.d.transpose()};
}
inline DualMatrix cw(const DualMatrix& a, const DualMatrix& b) {
  return {a.v.cwiseProduct(b.v), a.d.cwiseProduct(b.v) + a.v.cwiseProduct(b.d)};
}
inline DualMatrix scaled(double s, const DualMatrix& a) { return {s * a.v, s * a.d}; }
inline DualMatrix one_minus(const DualMatrix& a) { return {(1.0 - a.v.array()).matrix(), -a.d}; }
inline DualMatrix tanh_of(const DualMatrix& z) {
  Matrix s = fast_tanh(z.v);
  Matrix d = (1.0 - s.array().square()).matrix().cwiseProduct(z.d);
  return {std::move(s), std::move(d)};
}
inline DualMatrix add_bias(const DualMatrix& z, const DualMatrix& b) {
  return {z.v.colwise() + b.v.col(0), z.d.colwise() + b.d.col(0)};
}
inline DualMatrix rowsum(const DualMatrix& a) { return {a.v.rowwise().sum(), a.d.rowwise().sum()}; }
inline DualMatrix cols(const DualMatrix& a, Eigen::Index start, Eigen::Index n) {
  return {a.v.middleCols(start, n), a.d.middleCols(start, n)};
}
inline DualMatrix hcat(const std::vector<const DualMatrix*>& parts) {
  std::vector<const Matrix*> vs;
  std::vector<const Matrix*> ds;
  for (const auto* p : parts) {
    vs.push_back(&p->v);
    ds.push_back(&p->d);
  }
  return {hcat(vs), hcat(ds)};
}
inline DualMatrix minus_const(const DualMatrix& a, const Matrix& c) { return {a.v - c, a.d}; }
inline DualMatrix zeros_like(const DualMatrix& a) {
  return {Matrix::Zero(a.v.rows(), a.v.cols()), Matrix::Zero(a.v.rows(), a.v.cols())};
}
inline const Matrix& value_of(const DualMatrix& a) { return a.v; }

// ---- kernel --------------------------------------------------------------

template <class T>
struct Channels {
  T val, dt, dx, dxx;
};

template <class T>
struct LayerWeights {
  std::vector<T> w;  // out x in
  std::vector<T> b;  // out x 1
};

inline bool has_first(JetOrder o) { return o != JetOrder::kValue; }
inline bool has_second(JetOrder o) { return o == JetOrder::kSecond; }

inline LayerWeights<Matrix> unpack(const NetworkParams& p) {
  LayerWeights<Matrix> lw;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    lw.w.emplace_back(p.weight(l));
    lw.b.emplace_back(p.bias(l));
  }
  return lw;
}

/// Weights with tangent taken from `direction` (same flat layout as p).
inline LayerWeights<DualMatrix> unpack_dual(const NetworkParams& p, const Vector& direction) {
  NetworkParams dir(p.architecture(), direction);
  LayerWeights<DualMatrix> lw;
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    lw.w.push_back({Matrix(p.weight(l)), Matrix(dir.weight(l))});
    lw.b.push_back({Matrix(p.bias(l)), Matrix(dir.bias(l))});
  }
  return lw;
}

template <class T>
class JetTape {
 public:
  JetTape(const LayerWeights<T>& weights, JetOrder order) : weights_(weights), order_(order) {}

  /// inputs: 2 x B (x row, t row). Returns 1 x B output channels.
  Channels<T> forward(const Matrix& inputs) {
    const Eigen::Index batch = inputs.cols();
    const T* tag = nullptr;
    Channels<T> a;
    a.val = lift(inputs, tag);
    if (has_first(order_)) {
      Matrix e_t = Matrix::Zero(2, batch);
      e_t.row(1).setOnes();
      Matrix e_x = Matrix::Zero(2, batch);
      e_x.row(0).setOnes();
      a.dt = lift(e_t, tag);
      a.dx = lift(e_x, tag);
    }
    if (has_second(order_)) a.dxx = lift(Matrix::Zero(2, batch), tag);

    const std::size_t layers = weights_.w.size();
    saved_.clear();
    saved_.reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
      const T& w = weights_.w[l];
      Saved s;
      s.input = std::move(a);
      Channels<T> z;
      z.val = add_bias(matmul(w, s.input.val), weights_.b[l]);
      if (has_first(order_)) {
        z.dt = matmul(w, s.input.dt);
        z.dx = matmul(w, s.input.dx);
      }
      if (has_second(order_)) z.dxx = matmul(w, s.input.dxx);

      if (l + 1 == layers) {
        saved_.push_back(std::move(s));
        return z;
      }

      s.s0 = tanh_of(z.val);
      s.s1 = one_minus(cw(s.s0, s.s0));
      Channels<T> next;
      next.val = s.s0;
      if (has_first(order_)) {
        s.s2 = scaled(-2.0, cw(s.s0, s.s1));
        next.dt = cw(s.s1, z.dt);
        next.dx = cw(s.s1, z.dx);
      }
      if (has_second(order_)) {
        next.dxx = cw(s.s2, cw(z.dx, z.dx)) + cw(s.s1, z.dxx);
      }
      s.z_dt = std::move(z.dt);
      s.z_dx = std::move(z.dx);
      s.z_dxx = std::move(z.dxx);
      saved_.push_back(std::move(s));
      a = std::move(next);
    }
    return a;  // unreachable for non-empty networks
  }

  /// Reverse pass given adjoints of the output channels (unused channels may
  /// be left empty). Fills per-layer weight/bias gradients.
  void backward(const Channels<T>& out_bar, std::vector<T>& grad_w, std::vector<T>& grad_b) {
    const std::size_t layers = weights_.w.size();
    grad_w.assign(layers, T{});
    grad_b.assign(layers, T{});

    Channels<T> zbar = out_bar;
    for (std::size_t li = layers; li-- > 0;) {
      const Saved& s = saved_[li];
      const T& w = weights_.w[li];

      T gw = matmul_nt(zbar.val, s.input.val);
      if (has_first(order_)) {
        gw = gw + matmul_nt(zbar.dt, s.input.dt);
        gw = gw + matmul_nt(zbar.dx, s.input.dx);
      }
      if (has_second(order_)) gw = gw + matmul_nt(zbar.dxx, s.input.dxx);
      grad_w[li] = std::move(gw);
      grad_b[li] = rowsum(zbar.val);
      if (li == 0) break;

      // Adjoints of the previous layer's activations.
      Channels<T> abar;
      abar.val = matmul_tn(w, zbar.val);
      if (has_first(order_)) {
        abar.dt = matmul_tn(w, zbar.dt);
        abar.dx = matmul_tn(w, zbar.dx);
      }
      if (has_second(order_)) abar.dxx = matmul_tn(w, zbar.dxx);

      // Back through tanh of layer li-1, whose saved state holds s0..s2 and
      // the pre-activation derivative channels.
      const Saved& p = saved_[li - 1];
      Channels<T> nz;
      nz.val = cw(p.s1, abar.val);
      if (has_first(order_)) {
        nz.val = nz.val + cw(p.s2, cw(p.z_dt, abar.dt) + cw(p.z_dx, abar.dx));
        nz.dt = cw(p.s1, abar.dt);
        nz.dx = cw(p.s1, abar.dx);
      }
      if (has_second(order_)) {
        const T& s2 = p.s2;
        T s3 = scaled(-2.0, cw(p.s1, p.s1) + cw(p.s0, s2));
        nz.val = nz.val + cw(cw(s2, p.z_dxx) + cw(s3, cw(p.z_dx, p.z_dx)), abar.dxx);
        nz.dx = nz.dx + scaled(2.0, cw(cw(s2, p.z_dx), abar.dxx));
        nz.dxx = cw(p.s1, abar.dxx);
      }
      zbar = std::move(nz);
    }
  }

 private:
  struct Saved {
    Channels<T> input;
    T s0, s1, s2;
    T z_dt, z_dx, z_dxx;
  };

  const LayerWeights<T>& weights_;
  JetOrder order_;
  std::vector<Saved> saved_;
};

/// Scatter per-layer gradients into the flat parameter layout.
inline void flatten_into(const NetworkParams& shape, const std::vector<Matrix>& gw,
                         const std::vector<Matrix>& gb, Vector& flat) {
  flat.resize(static_cast<Eigen::Index>(shape.size()));
  NetworkParams view(shape.architecture(), Vector::Zero(flat.size()));
  for (std::size_t l = 0; l < gw.size(); ++l) {
    view.weight(l) = gw[l];
    view.bias(l) = gb[l].col(0);
  }
  flat = std::move(view.flat());
}

}  // namespace pinnfm::detail

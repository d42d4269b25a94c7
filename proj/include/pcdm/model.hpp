#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pcdm/blocks.hpp"
#include "pcdm/eso.hpp"
#include "pcdm/sampling.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace pcdm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RegularizerKind { Zero, L1, Box, SquaredL2 };

/// Coordinate-separable convex regularizer applied to one block.
struct Regularizer {
  RegularizerKind kind = RegularizerKind::Zero;
  double lambda = 0.0;  // L1 weight
  double lo = -kInf;    // box bounds
  double hi = kInf;
  double mu = 0.0;  // SquaredL2: (mu/2) ||x||^2

  static Regularizer zero() { return {}; }
  static Regularizer l1(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("l1: lambda must be >= 0");
    Regularizer r;
    r.kind = RegularizerKind::L1;
    r.lambda = lambda;
    return r;
  }
  static Regularizer box(double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("box: need lo <= hi");
    Regularizer r;
    r.kind = RegularizerKind::Box;
    r.lo = lo;
    r.hi = hi;
    return r;
  }
  static Regularizer squared_l2(double mu) {
    if (!(mu >= 0.0)) throw std::invalid_argument("squared_l2: mu must be >= 0");
    Regularizer r;
    r.kind = RegularizerKind::SquaredL2;
    r.mu = mu;
    return r;
  }

  double value(double x) const {
    switch (kind) {
      case RegularizerKind::Zero: return 0.0;
      case RegularizerKind::L1: return lambda * std::abs(x);
      case RegularizerKind::Box: return (x < lo || x > hi) ? kInf : 0.0;
      case RegularizerKind::SquaredL2: return 0.5 * mu * x * x;
    }
    return 0.0;
  }

  /// argmin_t  g t + (c/2) t^2 + psi(x + t)  for curvature c > 0.
  double step(double g, double x, double c) const {
    switch (kind) {
      case RegularizerKind::Zero: return -g / c;
      case RegularizerKind::L1: {
        const double z = x - g / c;
        const double thr = lambda / c;
        const double shrunk = z > thr ? z - thr : (z < -thr ? z + thr : 0.0);
        return shrunk - x;
      }
      case RegularizerKind::Box: return std::clamp(x - g / c, lo, hi) - x;
      case RegularizerKind::SquaredL2: return -(g + mu * x) / (c + mu);
    }
    return 0.0;
  }

  // Euclidean strong convexity modulus.
  double strong_convexity() const { return kind == RegularizerKind::SquaredL2 ? mu : 0.0; }

  std::string describe() const {
    switch (kind) {
      case RegularizerKind::Zero: return "none";
      case RegularizerKind::L1: return "l1:" + std::to_string(lambda);
      case RegularizerKind::Box: return "box:" + std::to_string(lo) + ":" + std::to_string(hi);
      case RegularizerKind::SquaredL2: return "l2:" + std::to_string(mu);
    }
    return "?";
  }
};

/// f(x) = 1/2 ||Ax - b||^2
struct LeastSquares {
  SparseMatrix A;
  std::vector<double> b;
};

/// Negated SVM dual: f(x) = (lambda/2) ||w(x)||^2 - (1/N) 1^T x with
/// w(x) = (1/(lambda N)) sum_i x_i y_i a_i. Rows of `samples` are the a_i.
struct SvmDual {
  SparseMatrix samples;
  std::vector<double> labels;
  double lambda;
};

/// f(x) = sum_{j=1..m} log(1 + exp(-x + zeta j)), x scalar.
struct ToyLogistic {
  std::size_t m;
  double zeta;
};

using SmoothPart = std::variant<LeastSquares, SvmDual, ToyLogistic>;

/// F = f + Psi with Psi block separable.
class CompositeProblem {
 public:
  CompositeProblem(SmoothPart smooth, std::vector<Regularizer> regs, BlockLayout layout,
                   std::vector<double> b_diag = {})
      : smooth_(std::move(smooth)), layout_(std::move(layout)), b_diag_(std::move(b_diag)),
        regs_(std::move(regs)) {
    layout_.check_dim(natural_dim(), "CompositeProblem layout");
    if (regs_.size() == 1 && layout_.num_blocks() > 1) regs_.assign(layout_.num_blocks(), regs_[0]);
    if (regs_.size() != layout_.num_blocks())
      throw std::invalid_argument("CompositeProblem: need one regularizer per block");
    if (!b_diag_.empty()) {
      layout_.check_dim(b_diag_.size(), "CompositeProblem diagonal");
      for (double b : b_diag_)
        if (!(b > 0.0)) throw std::invalid_argument("CompositeProblem: B entries must be positive");
    }
    if (auto* ls = std::get_if<LeastSquares>(&smooth_); ls && ls->b.size() != ls->A.rows())
      throw std::invalid_argument("LeastSquares: b length must equal rows of A");
    if (auto* svm = std::get_if<SvmDual>(&smooth_)) {
      if (svm->labels.size() != svm->samples.rows())
        throw std::invalid_argument("SvmDual: one label per sample");
      if (!(svm->lambda > 0.0)) throw std::invalid_argument("SvmDual: lambda must be positive");
      for (double y : svm->labels)
        if (y != 1.0 && y != -1.0) throw std::invalid_argument("SvmDual: labels must be +-1");
      for (const auto& r : regs_)
        if (r.kind != RegularizerKind::Box || r.lo != 0.0 || r.hi != 1.0)
          throw std::invalid_argument("SvmDual: feasible set is the box [0,1] per coordinate");
    }
  }

  const SmoothPart& smooth() const { return smooth_; }
  const BlockLayout& layout() const { return layout_; }
  const std::vector<double>& b_diag() const { return b_diag_; }
  const std::vector<Regularizer>& regularizers() const { return regs_; }
  const Regularizer& regularizer(std::size_t i) const { return regs_[i]; }
  std::size_t dim() const { return layout_.dim(); }
  std::size_t num_blocks() const { return layout_.num_blocks(); }
  double b(std::size_t j) const { return b_diag_.empty() ? 1.0 : b_diag_[j]; }

  template <class T>
  const T* as() const { return std::get_if<T>(&smooth_); }

  // Strong convexity constants with respect to ||.||_v, when known.
  std::optional<double> mu_f;
  std::optional<double> mu_psi;

  BlockNorms norms(std::vector<double> v) const { return BlockNorms(layout_, std::move(v), b_diag_); }

 private:
  std::size_t natural_dim() const {
    if (auto* ls = std::get_if<LeastSquares>(&smooth_)) return ls->A.cols();
    if (auto* svm = std::get_if<SvmDual>(&smooth_)) return svm->samples.rows();
    return 1;
  }

  SmoothPart smooth_;
  BlockLayout layout_;
  std::vector<double> b_diag_;
  std::vector<Regularizer> regs_;
};

inline CompositeProblem make_least_squares(SparseMatrix A, std::vector<double> b, Regularizer reg) {
  auto layout = BlockLayout::singletons(A.cols());
  return CompositeProblem(LeastSquares{std::move(A), std::move(b)}, {reg}, std::move(layout));
}

inline CompositeProblem make_svm_dual(SparseMatrix samples, std::vector<double> labels, double lambda) {
  auto layout = BlockLayout::singletons(samples.rows());
  return CompositeProblem(SvmDual{std::move(samples), std::move(labels), lambda},
                          {Regularizer::box(0.0, 1.0)}, std::move(layout));
}

inline CompositeProblem toy_logistic(std::size_t m, double zeta) {
  if (m == 0) throw std::invalid_argument("toy_logistic: m must be >= 1");
  return CompositeProblem(ToyLogistic{m, zeta}, {Regularizer::zero()}, BlockLayout::singletons(1));
}

/// Incrementally maintained auxiliary vector: r = Ax - b for least squares,
/// w(x) for the SVM dual, empty for the toy model.
struct ResidualState {
  std::vector<double> aux;
};

namespace detail {
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
}  // namespace detail

inline ResidualState make_state(const CompositeProblem& p, std::span<const double> x) {
  p.layout().check_dim(x.size(), "make_state");
  ResidualState s;
  if (auto* ls = p.as<LeastSquares>()) {
    s.aux.resize(ls->A.rows());
    ls->A.multiply(x, s.aux);
    for (std::size_t r = 0; r < s.aux.size(); ++r) s.aux[r] -= ls->b[r];
  } else if (auto* svm = p.as<SvmDual>()) {
    const double N = static_cast<double>(svm->samples.rows());
    s.aux.assign(svm->samples.cols(), 0.0);
    for (std::size_t i = 0; i < svm->samples.rows(); ++i) {
      if (x[i] == 0.0) continue;
      const double scale = x[i] * svm->labels[i] / (svm->lambda * N);
      auto idx = svm->samples.row_indices(i);
      auto val = svm->samples.row_values(i);
      for (std::size_t k = 0; k < idx.size(); ++k) s.aux[idx[k]] += scale * val[k];
    }
  }
  return s;
}

inline double smooth_value(const CompositeProblem& p, std::span<const double> x, const ResidualState& s) {
  if (p.as<LeastSquares>()) {
    double total = 0.0;
    for (double r : s.aux) total += r * r;
    return 0.5 * total;
  }
  if (auto* svm = p.as<SvmDual>()) {
    double ww = 0.0, sx = 0.0;
    for (double w : s.aux) ww += w * w;
    for (double xi : x) sx += xi;
    return 0.5 * svm->lambda * ww - sx / static_cast<double>(x.size());
  }
  const auto& toy = *p.as<ToyLogistic>();
  double total = 0.0;
  for (std::size_t j = 1; j <= toy.m; ++j) total += detail::softplus(-x[0] + toy.zeta * static_cast<double>(j));
  return total;
}

inline double smooth_value(const CompositeProblem& p, std::span<const double> x) {
  return smooth_value(p, x, make_state(p, x));
}

/// (grad f(x))^{(i)} written into out (length N_i).
inline void block_gradient(const CompositeProblem& p, std::span<const double> x, const ResidualState& s,
                           std::size_t i, std::span<double> out) {
  const auto& layout = p.layout();
  const std::size_t begin = layout.offset(i);
  if (auto* ls = p.as<LeastSquares>()) {
    for (std::size_t j = begin; j < layout.end(i); ++j) {
      auto idx = ls->A.col_indices(j);
      auto val = ls->A.col_values(j);
      double g = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) g += val[k] * s.aux[idx[k]];
      out[j - begin] = g;
    }
  } else if (auto* svm = p.as<SvmDual>()) {
    const double N = static_cast<double>(svm->samples.rows());
    for (std::size_t j = begin; j < layout.end(i); ++j) {
      auto idx = svm->samples.row_indices(j);
      auto val = svm->samples.row_values(j);
      double margin = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) margin += val[k] * s.aux[idx[k]];
      out[j - begin] = (svm->labels[j] * margin - 1.0) / N;
    }
  } else {
    const auto& toy = *p.as<ToyLogistic>();
    double g = 0.0;
    for (std::size_t j = 1; j <= toy.m; ++j) g -= detail::sigmoid(-x[0] + toy.zeta * static_cast<double>(j));
    out[0] = g;
  }
}

inline std::vector<double> gradient(const CompositeProblem& p, std::span<const double> x,
                                    const ResidualState& s) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < p.num_blocks(); ++i)
    block_gradient(p, x, s, i, std::span<double>(g).subspan(p.layout().offset(i), p.layout().size(i)));
  return g;
}

inline std::vector<double> gradient(const CompositeProblem& p, std::span<const double> x) {
  return gradient(p, x, make_state(p, x));
}

inline double block_regularizer_value(const CompositeProblem& p, std::span<const double> x, std::size_t i) {
  double total = 0.0;
  const auto& reg = p.regularizer(i);
  for (std::size_t j = p.layout().offset(i); j < p.layout().end(i); ++j) total += reg.value(x[j]);
  return total;
}

inline double regularizer_value(const CompositeProblem& p, std::span<const double> x) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.num_blocks(); ++i) total += block_regularizer_value(p, x, i);
  return total;
}

inline double function_value(const CompositeProblem& p, std::span<const double> x, const ResidualState& s) {
  const double psi = regularizer_value(p, x);
  if (psi == kInf) return kInf;
  return smooth_value(p, x, s) + psi;
}

inline double function_value(const CompositeProblem& p, std::span<const double> x) {
  return function_value(p, x, make_state(p, x));
}

/// h_i = argmin_t <g_i, t> + (v_i/2) ||t||_(i)^2 + Psi_i(x_i + t), with B_i
/// diagonal (b_i empty means identity).
inline void block_prox(const Regularizer& reg, std::span<const double> g, std::span<const double> x,
                       double v, std::span<const double> b, std::span<double> h) {
  if (!(v > 0.0)) throw std::invalid_argument("block_prox: v must be positive");
  for (std::size_t j = 0; j < g.size(); ++j) h[j] = reg.step(g[j], x[j], b.empty() ? v : v * b[j]);
}

/// Block i of h(x): gradient followed by the closed-form prox step.
inline void block_update(const CompositeProblem& p, std::span<const double> x, const ResidualState& s,
                         const BlockNorms& norms, std::size_t i, std::span<double> h_block) {
  const auto& layout = p.layout();
  const std::size_t begin = layout.offset(i), len = layout.size(i);
  double local[8];
  std::vector<double> heap;
  std::span<double> g;
  if (len <= 8) {
    g = std::span<double>(local, len);
  } else {
    heap.resize(len);
    g = heap;
  }
  block_gradient(p, x, s, i, g);
  std::span<const double> b_block =
      norms.b_diag.empty() ? std::span<const double>{} : std::span<const double>(norms.b_diag).subspan(begin, len);
  block_prox(p.regularizer(i), g, x.subspan(begin, len), norms.v[i], b_block, h_block);
}

/// The full minimizer h(x) of H(x, .).
inline std::vector<double> update_direction(const CompositeProblem& p, std::span<const double> x,
                                            const ResidualState& s, const BlockNorms& norms) {
  std::vector<double> h(x.size());
  for (std::size_t i = 0; i < p.num_blocks(); ++i)
    block_update(p, x, s, norms, i, std::span<double>(h).subspan(p.layout().offset(i), p.layout().size(i)));
  return h;
}

/// g_i = -v_i B_i h_i
inline std::vector<double> composite_gradient_map(std::span<const double> h, const BlockNorms& norms,
                                                  const BlockLayout& layout) {
  layout.check_dim(h.size(), "composite_gradient_map");
  std::vector<double> g(h.size());
  for (std::size_t i = 0; i < layout.num_blocks(); ++i)
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) g[j] = -norms.v[i] * norms.b(j) * h[j];
  return g;
}

/// H(x, h) = f(x) + <grad f(x), h> + 1/2 ||h||_v^2 + Psi(x + h)
inline double overapprox_H(const CompositeProblem& p, std::span<const double> x, std::span<const double> h,
                           const BlockNorms& norms) {
  p.layout().check_dim(h.size(), "overapprox_H");
  const auto state = make_state(p, x);
  std::vector<double> xh(x.begin(), x.end());
  for (std::size_t j = 0; j < xh.size(); ++j) xh[j] += h[j];
  const double psi = regularizer_value(p, xh);
  if (psi == kInf) return kInf;
  const auto g = gradient(p, x, state);
  return smooth_value(p, x, state) + inner(g, h) + 0.5 * weighted_norm_sq(h, norms, p.layout()) + psi;
}

/// Adds h on the blocks of S to x and updates the residual incrementally.
/// Blocks are applied in the order given (ascending for determinism).
inline void apply_update(const CompositeProblem& p, std::span<double> x, ResidualState& s,
                         std::span<const std::size_t> S, std::span<const double> h) {
  const auto& layout = p.layout();
  auto* ls = p.as<LeastSquares>();
  auto* svm = p.as<SvmDual>();
  const double svm_scale = svm ? 1.0 / (svm->lambda * static_cast<double>(svm->samples.rows())) : 0.0;
  for (std::size_t i : S) {
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) {
      const double hj = h[j];
      if (hj == 0.0) continue;
      x[j] += hj;
      if (ls) {
        auto idx = ls->A.col_indices(j);
        auto val = ls->A.col_values(j);
        for (std::size_t k = 0; k < idx.size(); ++k) s.aux[idx[k]] += val[k] * hj;
      } else if (svm) {
        const double scale = hj * svm->labels[j] * svm_scale;
        auto idx = svm->samples.row_indices(j);
        auto val = svm->samples.row_values(j);
        for (std::size_t k = 0; k < idx.size(); ++k) s.aux[idx[k]] += scale * val[k];
      }
    }
  }
}

/// P(w) = (lambda/2)||w||^2 + (1/N) sum_i max(0, 1 - y_i a_i^T w)
inline double svm_primal_value(const CompositeProblem& p, std::span<const double> w) {
  const auto& svm = *p.as<SvmDual>();
  double ww = 0.0;
  for (double e : w) ww += e * e;
  double hinge = 0.0;
  for (std::size_t i = 0; i < svm.samples.rows(); ++i) {
    auto idx = svm.samples.row_indices(i);
    auto val = svm.samples.row_values(i);
    double margin = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) margin += val[k] * w[idx[k]];
    hinge += std::max(0.0, 1.0 - svm.labels[i] * margin);
  }
  return 0.5 * svm.lambda * ww + hinge / static_cast<double>(svm.samples.rows());
}

inline double svm_dual_value(const CompositeProblem& p, std::span<const double> x, const ResidualState& s) {
  return -smooth_value(p, x, s);
}

/// G(x) = P(w(x)) - D(x); nonnegative for feasible x.
inline double duality_gap(const CompositeProblem& p, std::span<const double> x, const ResidualState& s) {
  return svm_primal_value(p, s.aux) - svm_dual_value(p, x, s);
}

/// f as 1/2 ||M x||^2 + linear for the SVM dual: M = A^T diag(y) / (N sqrt(lambda)).
inline SparseMatrix svm_quadratic_factor(const SvmDual& svm) {
  const double N = static_cast<double>(svm.samples.rows());
  const double scale = 1.0 / (N * std::sqrt(svm.lambda));
  auto t = svm.samples.triplets();
  for (auto& e : t) {
    e.value *= svm.labels[e.row] * scale;
    std::swap(e.row, e.col);
  }
  return SparseMatrix(svm.samples.cols(), svm.samples.rows(), std::move(t));
}

/// Smoothness data of the toy logistic model: each sub-function has
/// curvature at most 1/4, while the sum peaks at roughly 1/4 when the
/// sub-functions are well separated (large zeta).
inline eso::SmoothnessData toy_logistic_smoothness(std::size_t m, double zeta) {
  auto curvature = [&](double x) {
    double total = 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
      const double s = detail::sigmoid(x - zeta * static_cast<double>(j));
      total += s * (1.0 - s);
    }
    return total;
  };
  // Maximize f'' by ternary search in a window around every peak x = zeta j,
  // plus the midpoints where neighbouring tails overlap most.
  double best = 0.0;
  const double half = std::max(std::abs(zeta), 1e-3);
  for (std::size_t j = 1; j <= m; ++j) {
    const double center = zeta * static_cast<double>(j);
    double lo = center - half, hi = center + half;
    for (int it = 0; it < 200; ++it) {
      const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
      if (curvature(a) < curvature(b)) lo = a; else hi = b;
    }
    best = std::max({best, curvature(0.5 * (lo + hi)), curvature(center)});
  }
  eso::SmoothnessData data;
  data.n = 1;
  data.L = {best};
  data.omega = 1;
  data.pattern_ptr.assign(1, 0);
  for (std::size_t j = 0; j < m; ++j) {
    data.pattern_idx.push_back(0);
    data.lhat.push_back(0.25);
    data.ltilde.push_back(0.25);
    data.pattern_ptr.push_back(data.pattern_idx.size());
  }
  return data;
}

/// Smoothness data for the problem's smooth part in its block norms.
inline eso::SmoothnessData smoothness_data(const CompositeProblem& p) {
  if (auto* ls = p.as<LeastSquares>()) return eso::lipschitz_from_quadratic(ls->A, p.layout(), p.b_diag());
  if (auto* svm = p.as<SvmDual>())
    return eso::lipschitz_from_quadratic(svm_quadratic_factor(*svm), p.layout(), p.b_diag());
  const auto& toy = *p.as<ToyLogistic>();
  return toy_logistic_smoothness(toy.m, toy.zeta);
}

/// Matrix Q with f(x) = 1/2 x^T Q x + linear, dense; only for small problems.
inline Eigen::MatrixXd dense_hessian(const CompositeProblem& p) {
  const SparseMatrix* M = nullptr;
  SparseMatrix svm_factor;
  if (auto* ls = p.as<LeastSquares>()) {
    M = &ls->A;
  } else if (auto* svm = p.as<SvmDual>()) {
    svm_factor = svm_quadratic_factor(*svm);
    M = &svm_factor;
  } else {
    throw std::invalid_argument("dense_hessian: smooth part is not quadratic");
  }
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M->rows()),
                                                static_cast<Eigen::Index>(M->cols()));
  for (const auto& t : M->triplets())
    dense(static_cast<Eigen::Index>(t.row), static_cast<Eigen::Index>(t.col)) = t.value;
  return dense.transpose() * dense;
}

inline constexpr std::size_t kMaxDenseDim = 2000;

/// Largest mu with f(y) >= f(x) + <grad f(x), y-x> + (mu/2)||y-x||_v^2,
/// i.e. lambda_min(D^{-1/2} Q D^{-1/2}) with D = diag(v_i b_j). Requires a
/// dense eigensolve; zero for the (non strongly convex) toy model.
inline double mu_f_wrt(const CompositeProblem& p, const BlockNorms& norms) {
  if (p.as<ToyLogistic>()) return 0.0;
  if (p.dim() > kMaxDenseDim) throw std::length_error("mu_f_wrt: dimension too large for a dense eigensolve");
  Eigen::MatrixXd Q = dense_hessian(p);
  const auto& layout = p.layout();
  Eigen::VectorXd d(static_cast<Eigen::Index>(p.dim()));
  for (std::size_t i = 0; i < layout.num_blocks(); ++i)
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j)
      d(static_cast<Eigen::Index>(j)) = 1.0 / std::sqrt(norms.v[i] * norms.b(j));
  Q = d.asDiagonal() * Q * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues()(0));
}

/// Strong convexity of Psi with respect to ||.||_v: min_i mu_i / max_j (v_i b_j).
inline double mu_psi_wrt(const CompositeProblem& p, const BlockNorms& norms) {
  double mu = kInf;
  const auto& layout = p.layout();
  for (std::size_t i = 0; i < layout.num_blocks(); ++i) {
    double bmax = 0.0;
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) bmax = std::max(bmax, norms.b(j));
    mu = std::min(mu, p.regularizer(i).strong_convexity() / (norms.v[i] * bmax));
  }
  return mu;
}

}  // namespace pcdm

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcdm/blocks.hpp"
#include "pcdm/rng.hpp"
#include "pcdm/sparse_matrix.hpp"

namespace pcdm::eso {

/// Smoothness constants of f = sum_J f_J over n blocks.
///
/// The pattern is stored row-compressed: sub-function J touches blocks
/// pattern_idx[pattern_ptr[J] .. pattern_ptr[J+1]) with the matching
/// block-wise constants in lhat. Blocks not listed have lhat = 0.
struct SmoothnessData {
  std::size_t n = 0;
  std::vector<double> L;
  std::vector<std::size_t> pattern_ptr{0};
  std::vector<std::size_t> pattern_idx;
  std::vector<double> lhat;
  std::vector<double> ltilde;
  std::size_t omega = 0;
  std::optional<double> sigma;

  std::size_t num_functions() const { return pattern_ptr.size() - 1; }
  std::size_t support_size(std::size_t J) const { return pattern_ptr[J + 1] - pattern_ptr[J]; }
};

enum class Source { RtP, RtD, FR, DU, NC, BKBG };

inline const char* to_string(Source s) {
  switch (s) {
    case Source::RtP: return "rt-p";
    case Source::RtD: return "rt-d";
    case Source::FR: return "fr";
    case Source::DU: return "du";
    case Source::NC: return "nc";
    case Source::BKBG: return "bkbg";
  }
  return "?";
}

inline Source parse_source(const std::string& s) {
  if (s == "rt-p") return Source::RtP;
  if (s == "rt-d") return Source::RtD;
  if (s == "fr") return Source::FR;
  if (s == "du") return Source::DU;
  if (s == "nc") return Source::NC;
  if (s == "bkbg") return Source::BKBG;
  throw std::invalid_argument("unknown ESO tag '" + s + "'");
}

struct EsoParameter {
  std::vector<double> v;
  bool monotonic = false;
  Source source = Source::BKBG;
  // False only for the BKBG baseline, which is not an ESO.
  bool certified = true;
  // Scalar multiplier of L for RT-P / RT-D / BKBG.
  std::optional<double> factor;
  std::string warning;
};

/// Lipschitz data of f(x) = 1/2 ||Ax - b||^2, one sub-function per row.
///
/// With singleton blocks and B = I this gives L_i = ||A_{:,i}||^2,
/// Ltilde_j = ||A_{j,:}||^2 and Lhat_{j,i} = a_{j,i}^2. For wider blocks and
/// diagonal B the same sums are taken with entries scaled by 1/b, which
/// yields valid (possibly loose) constants in the block norms.
inline SmoothnessData lipschitz_from_quadratic(const SparseMatrix& A, const BlockLayout& layout,
                                               std::span<const double> b_diag = {}) {
  layout.check_dim(A.cols(), "lipschitz_from_quadratic");
  if (!b_diag.empty()) layout.check_dim(b_diag.size(), "lipschitz_from_quadratic diagonal");
  SmoothnessData data;
  data.n = layout.num_blocks();
  data.L.assign(data.n, 0.0);
  data.pattern_ptr.assign(1, 0);
  data.ltilde.reserve(A.rows());

  for (std::size_t r = 0; r < A.rows(); ++r) {
    auto idx = A.row_indices(r);
    auto val = A.row_values(r);
    double row_total = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double scale = b_diag.empty() ? 1.0 : b_diag[idx[k]];
      const double contrib = val[k] * val[k] / scale;
      if (contrib == 0.0) continue;
      const std::size_t blk = layout.block_of(idx[k]);
      if (data.pattern_idx.size() > data.pattern_ptr.back() && data.pattern_idx.back() == blk) {
        data.lhat.back() += contrib;
      } else {
        data.pattern_idx.push_back(blk);
        data.lhat.push_back(contrib);
      }
      row_total += contrib;
    }
    if (data.pattern_idx.size() == data.pattern_ptr.back()) continue;  // empty row
    data.pattern_ptr.push_back(data.pattern_idx.size());
    data.ltilde.push_back(row_total);
  }
  for (std::size_t J = 0; J < data.num_functions(); ++J) {
    data.omega = std::max(data.omega, data.support_size(J));
    for (std::size_t k = data.pattern_ptr[J]; k < data.pattern_ptr[J + 1]; ++k)
      data.L[data.pattern_idx[k]] += data.lhat[k];
  }
  for (std::size_t i = 0; i < data.n; ++i)
    if (!(data.L[i] > 0.0))
      throw std::invalid_argument("lipschitz_from_quadratic: column/block " + std::to_string(i) +
                                  " is identically zero");
  return data;
}

inline SmoothnessData lipschitz_from_quadratic(const SparseMatrix& A) {
  return lipschitz_from_quadratic(A, BlockLayout::singletons(A.cols()));
}

inline double rt_p_factor(std::size_t omega, std::size_t tau, std::size_t n) {
  const double denom = std::max(1.0, static_cast<double>(n) - 1.0);
  return 1.0 + (static_cast<double>(omega) - 1.0) * (static_cast<double>(tau) - 1.0) / denom;
}

inline double rt_d_factor(double sigma, std::size_t tau, std::size_t n) {
  const double denom = std::max(1.0, static_cast<double>(n) - 1.0);
  return 1.0 + (sigma - 1.0) * (static_cast<double>(tau) - 1.0) / denom;
}

namespace detail {
inline void check_tau(std::size_t tau, std::size_t n) {
  if (tau < 1 || tau > n) throw std::invalid_argument("ESO: need 1 <= tau <= n");
}
inline std::vector<double> scaled(std::span<const double> L, double factor) {
  std::vector<double> v(L.begin(), L.end());
  for (double& x : v) x *= factor;
  return v;
}
}  // namespace detail

/// RT-P: v = (1 + (omega-1)(tau-1)/max(1,n-1)) L, tau-nice sampling.
inline EsoParameter rt_p(std::span<const double> L, std::size_t omega, std::size_t tau, std::size_t n) {
  detail::check_tau(tau, n);
  if (omega < 1) throw std::invalid_argument("rt_p: omega must be >= 1");
  const double f = rt_p_factor(omega, tau, n);
  return {detail::scaled(L, f), false, Source::RtP, true, f, {}};
}

/// RT-D: v = (1 + (sigma-1)(tau-1)/max(1,n-1)) L. A factor below one is
/// clamped to one and reported through `warning`.
inline EsoParameter rt_d(std::span<const double> L, double sigma, std::size_t tau, std::size_t n) {
  detail::check_tau(tau, n);
  double f = rt_d_factor(sigma, tau, n);
  std::string warning;
  if (sigma < 1.0) {
    warning = "rt-d: sigma = " + std::to_string(sigma) + " < 1, factor clamped to 1";
    f = std::max(f, 1.0);
  }
  return {detail::scaled(L, f), false, Source::RtD, true, f, warning};
}

/// Doubly uniform ESO from block-wise sub-function constants.
inline EsoParameter du(const SmoothnessData& data, std::pair<double, double> moments) {
  const auto [m1, m2] = moments;
  if (!(m1 > 0.0)) throw std::invalid_argument("du: E|S| must be positive");
  const double denom = std::max(1.0, static_cast<double>(data.n) - 1.0);
  const double spread = m2 / m1 - 1.0;
  std::vector<double> v(data.n, 0.0);
  for (std::size_t J = 0; J < data.num_functions(); ++J) {
    const double w = 1.0 + spread * (static_cast<double>(data.support_size(J)) - 1.0) / denom;
    for (std::size_t k = data.pattern_ptr[J]; k < data.pattern_ptr[J + 1]; ++k)
      v[data.pattern_idx[k]] += w * data.lhat[k];
  }
  return {std::move(v), false, Source::DU, true, std::nullopt, {}};
}

/// FR: the doubly uniform ESO specialised to a tau-nice sampling.
inline EsoParameter fr(const SmoothnessData& data, std::size_t tau) {
  detail::check_tau(tau, data.n);
  const double t = static_cast<double>(tau);
  auto out = du(data, {t, t * t});
  out.source = Source::FR;
  return out;
}

/// NC: v_i = sum over sub-functions J containing i of Ltilde_J. Monotonic and
/// independent of tau.
inline EsoParameter nc(const SmoothnessData& data) {
  std::vector<double> v(data.n, 0.0);
  for (std::size_t J = 0; J < data.num_functions(); ++J) {
    if (!(data.ltilde[J] > 0.0)) throw std::invalid_argument("nc: Ltilde must be positive");
    for (std::size_t k = data.pattern_ptr[J]; k < data.pattern_ptr[J + 1]; ++k)
      v[data.pattern_idx[k]] += data.ltilde[J];
  }
  return {std::move(v), true, Source::NC, true, std::nullopt, {}};
}

/// BKBG baseline v = L. Not an ESO for tau > 1; PCDM may diverge with it.
inline EsoParameter bkbg(std::span<const double> L) {
  return {std::vector<double>(L.begin(), L.end()), false, Source::BKBG, false, 1.0, {}};
}

class NotConverged : public std::runtime_error {
 public:
  NotConverged(double best, std::size_t iters)
      : std::runtime_error("sigma_estimate: no convergence after " + std::to_string(iters) +
                           " iterations (best estimate " + std::to_string(best) + ")"),
        best_(best) {}
  double best_estimate() const { return best_; }

 private:
  double best_;
};

/// lambda_max(A^T A) by power iteration from a seeded random start.
///
/// The Rayleigh quotients of the iterates increase monotonically; the
/// remaining error is extrapolated from the ratio of successive increments
/// and iteration stops once it falls below tol relative.
inline double sigma_estimate(const SparseMatrix& A, double tol = 1e-6, std::size_t max_iters = 10000,
                             std::uint64_t seed = 0x5eed) {
  if (A.nnz() == 0) throw std::invalid_argument("sigma_estimate: matrix is zero");
  Rng rng(seed);
  std::vector<double> u(A.cols()), Au(A.rows()), w(A.cols());
  for (double& x : u) x = rng.normal();
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    s = std::sqrt(s);
    for (double& e : x) e /= s;
  };
  normalize(u);
  double theta = 0.0, prev_delta = -1.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    A.multiply(u, Au);
    A.multiply_transposed(Au, w);
    double next = 0.0;
    for (double e : Au) next += e * e;  // u^T A^T A u
    const double delta = next - theta;
    theta = next;
    if (theta == 0.0) {
      // Start vector orthogonal to the range; restart in another direction.
      for (double& x : u) x = rng.normal();
      normalize(u);
      continue;
    }
    if (it > 0 && delta <= 0.0) return theta;  // stalled at rounding level
    if (prev_delta > 0.0) {
      const double q = std::min(delta / prev_delta, 0.999999);
      if (delta <= tol * theta && delta * q / (1.0 - q) <= tol * theta) return theta;
    }
    prev_delta = delta;
    u = w;
    normalize(u);
  }
  throw NotConverged(theta, max_iters);
}

/// lambda_max of the Gram matrix after scaling each column by 1/sqrt(L_i);
/// this is the sigma the RT-D formula expects and is >= 1.
inline double normalized_sigma(const SparseMatrix& A, std::span<const double> L, double tol = 1e-6,
                               std::size_t max_iters = 10000, std::uint64_t seed = 0x5eed) {
  if (L.size() != A.cols()) throw std::invalid_argument("normalized_sigma: need one L per column");
  auto t = A.triplets();
  for (auto& e : t) e.value /= std::sqrt(L[e.col]);
  return sigma_estimate(SparseMatrix(A.rows(), A.cols(), std::move(t)), tol, max_iters, seed);
}

}  // namespace pcdm::eso

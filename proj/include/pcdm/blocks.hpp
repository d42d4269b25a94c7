#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcdm {

/// Partition of R^N into n contiguous blocks. Block i covers coordinates
/// [offset(i), offset(i) + size(i)). Blocks are 0-based.
class BlockLayout {
 public:
  explicit BlockLayout(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("BlockLayout: need at least one block");
    offsets_.resize(sizes_.size() + 1, 0);
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (sizes_[i] == 0) throw std::invalid_argument("BlockLayout: block sizes must be >= 1");
      offsets_[i + 1] = offsets_[i] + sizes_[i];
    }
    singleton_ = offsets_.back() == sizes_.size();
  }

  static BlockLayout singletons(std::size_t n) {
    return BlockLayout(std::vector<std::size_t>(n, 1));
  }

  std::size_t num_blocks() const { return sizes_.size(); }
  std::size_t dim() const { return offsets_.back(); }
  std::size_t size(std::size_t i) const { return sizes_[i]; }
  std::size_t offset(std::size_t i) const { return offsets_[i]; }
  std::size_t end(std::size_t i) const { return offsets_[i + 1]; }
  bool is_singleton() const { return singleton_; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  // Block containing coordinate j.
  std::size_t block_of(std::size_t j) const {
    if (singleton_) return j;
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), j);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
  }

  void check_block(std::size_t i) const {
    if (i >= sizes_.size())
      throw std::out_of_range("block index " + std::to_string(i) + " out of range [0, " +
                              std::to_string(sizes_.size()) + ")");
  }

  void check_dim(std::size_t len, const char* what) const {
    if (len != dim())
      throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(dim()) +
                                  ", got " + std::to_string(len));
  }

  friend bool operator==(const BlockLayout& a, const BlockLayout& b) { return a.sizes_ == b.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  bool singleton_ = true;
};

/// Per-block weights v and diagonal block matrices B_i (stored per
/// coordinate; an empty diagonal means B_i = I for every block).
struct BlockNorms {
  std::vector<double> v;
  std::vector<double> b_diag;

  BlockNorms() = default;
  BlockNorms(const BlockLayout& layout, std::vector<double> weights, std::vector<double> diag = {})
      : v(std::move(weights)), b_diag(std::move(diag)) {
    if (v.size() != layout.num_blocks())
      throw std::invalid_argument("BlockNorms: need one weight per block");
    for (double vi : v)
      if (!(vi > 0.0)) throw std::invalid_argument("BlockNorms: weights must be positive");
    if (!b_diag.empty()) {
      layout.check_dim(b_diag.size(), "BlockNorms diagonal");
      for (double bj : b_diag)
        if (!(bj > 0.0)) throw std::invalid_argument("BlockNorms: diagonal entries must be positive");
    }
  }

  double b(std::size_t j) const { return b_diag.empty() ? 1.0 : b_diag[j]; }
};

inline std::span<double> block_view(std::span<double> x, std::size_t i, const BlockLayout& layout) {
  layout.check_block(i);
  layout.check_dim(x.size(), "block_view");
  return x.subspan(layout.offset(i), layout.size(i));
}

inline std::span<const double> block_view(std::span<const double> x, std::size_t i,
                                          const BlockLayout& layout) {
  layout.check_block(i);
  layout.check_dim(x.size(), "block_view");
  return x.subspan(layout.offset(i), layout.size(i));
}

inline double inner(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("inner: dimension mismatch");
  return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

// ||x||_v^2 = sum_i v_i <B_i x_i, x_i>
inline double weighted_norm_sq(std::span<const double> x, const BlockNorms& norms,
                               const BlockLayout& layout) {
  layout.check_dim(x.size(), "weighted_norm_sq");
  double total = 0.0;
  for (std::size_t i = 0; i < layout.num_blocks(); ++i) {
    double block = 0.0;
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) block += norms.b(j) * x[j] * x[j];
    total += norms.v[i] * block;
  }
  return total;
}

// (||y||_v^*)^2 = sum_i (1/v_i) <B_i^{-1} y_i, y_i>
inline double dual_norm_sq(std::span<const double> y, const BlockNorms& norms,
                           const BlockLayout& layout) {
  layout.check_dim(y.size(), "dual_norm_sq");
  double total = 0.0;
  for (std::size_t i = 0; i < layout.num_blocks(); ++i) {
    double block = 0.0;
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) block += y[j] * y[j] / norms.b(j);
    total += block / norms.v[i];
  }
  return total;
}

/// x_[S]: blocks in S copied from x, everything else zero.
inline std::vector<double> project_blocks(std::span<const double> x, std::span<const std::size_t> blocks,
                                          const BlockLayout& layout) {
  layout.check_dim(x.size(), "project_blocks");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i : blocks) {
    layout.check_block(i);
    for (std::size_t j = layout.offset(i); j < layout.end(i); ++j) out[j] = x[j];
  }
  return out;
}

}  // namespace pcdm

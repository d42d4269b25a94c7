#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcdm {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Sparse matrix stored in both CSR and CSC form. Indices within each row
/// (CSR) and column (CSC) are sorted ascending; explicit zeros are kept if
/// supplied.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
      : rows_(rows), cols_(cols) {
    for (const auto& t : entries)
      if (t.row >= rows || t.col >= cols)
        throw std::out_of_range("SparseMatrix: entry (" + std::to_string(t.row) + "," +
                                std::to_string(t.col) + ") outside " + std::to_string(rows) + "x" +
                                std::to_string(cols));
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t k = 1; k < entries.size(); ++k)
      if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col)
        throw std::invalid_argument("SparseMatrix: duplicate entry");

    row_ptr_.assign(rows + 1, 0);
    col_idx_.reserve(entries.size());
    row_val_.reserve(entries.size());
    for (const auto& t : entries) {
      ++row_ptr_[t.row + 1];
      col_idx_.push_back(t.col);
      row_val_.push_back(t.value);
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());

    col_ptr_.assign(cols + 1, 0);
    for (const auto& t : entries) ++col_ptr_[t.col + 1];
    std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
    row_idx_.resize(entries.size());
    col_val_.resize(entries.size());
    std::vector<std::size_t> next(col_ptr_.begin(), col_ptr_.end() - 1);
    // Row-major traversal keeps row indices sorted inside each column.
    for (const auto& t : entries) {
      const std::size_t slot = next[t.col]++;
      row_idx_[slot] = t.row;
      col_val_[slot] = t.value;
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::size_t> row_indices(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {row_val_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const std::size_t> col_indices(std::size_t c) const {
    return {row_idx_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
  }
  std::span<const double> col_values(std::size_t c) const {
    return {col_val_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (std::size_t r = 0; r < rows_; ++r) {
      auto idx = row_indices(r);
      auto val = row_values(r);
      for (std::size_t k = 0; k < idx.size(); ++k) out.push_back({r, idx[k], val[k]});
    }
    return out;
  }

  SparseMatrix transposed() const {
    auto t = triplets();
    for (auto& e : t) std::swap(e.row, e.col);
    return SparseMatrix(cols_, rows_, std::move(t));
  }

  // y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols_ || y.size() != rows_) throw std::invalid_argument("SparseMatrix::multiply: shape");
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      auto idx = row_indices(r);
      auto val = row_values(r);
      for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * x[idx[k]];
      y[r] = s;
    }
  }

  // y = A^T x
  void multiply_transposed(std::span<const double> x, std::span<double> y) const {
    if (x.size() != rows_ || y.size() != cols_)
      throw std::invalid_argument("SparseMatrix::multiply_transposed: shape");
    for (std::size_t c = 0; c < cols_; ++c) {
      double s = 0.0;
      auto idx = col_indices(c);
      auto val = col_values(c);
      for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * x[idx[k]];
      y[c] = s;
    }
  }

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.row_ptr_ == b.row_ptr_ &&
           a.col_idx_ == b.col_idx_ && a.row_val_ == b.row_val_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> row_val_;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::size_t> row_idx_;
  std::vector<double> col_val_;
};

}  // namespace pcdm

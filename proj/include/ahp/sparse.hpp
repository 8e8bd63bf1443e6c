/**
 * @file sparse.hpp
 * @brief Compressed sparse row matrices.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

namespace ahp {

/// CSR matrix. Column indices are sorted within each row.
class CsrMatrix {
 public:
  CsrMatrix() : row_ptr_(1, 0) {}
  CsrMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Builds from (row, col, value) triplets; duplicates are summed.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols,
                                 std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  std::span<const std::uint32_t> row_indices(std::size_t r) const {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::size_t row_nnz(std::size_t r) const { return row_ptr_[r + 1] - row_ptr_[r]; }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Transposed copy, i.e. the compressed-column view of this matrix.
  CsrMatrix transpose() const;

  /// Entry lookup by binary search; zero when absent.
  double at(std::size_t r, std::size_t c) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
  std::vector<double> values_;
};

}  // namespace ahp

#include "ahp/sparse.hpp"

#include <algorithm>

namespace ahp {

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  CsrMatrix m(rows, cols);
  m.col_idx_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  std::size_t i = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    while (i < triplets.size() && std::get<0>(triplets[i]) == r) {
      const auto c = std::get<1>(triplets[i]);
      double v = 0.0;
      while (i < triplets.size() && std::get<0>(triplets[i]) == r && std::get<1>(triplets[i]) == c) {
        v += std::get<2>(triplets[i]);
        ++i;
      }
      m.col_idx_.push_back(c);
      m.values_.push_back(v);
    }
    m.row_ptr_[r + 1] = m.col_idx_.size();
  }
  return m;
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t(cols_, rows_);
  for (auto c : col_idx_) ++t.row_ptr_[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) t.row_ptr_[c + 1] += t.row_ptr_[c];
  t.col_idx_.resize(nnz());
  t.values_.resize(nnz());
  std::vector<std::size_t> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
  // rows are visited in increasing order, so each transposed row stays sorted
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const auto pos = next[col_idx_[k]]++;
      t.col_idx_[pos] = static_cast<std::uint32_t>(r);
      t.values_[pos] = values_[k];
    }
  }
  return t;
}

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  auto idx = row_indices(r);
  auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<std::uint32_t>(c));
  if (it == idx.end() || *it != c) return 0.0;
  return values_[row_ptr_[r] + static_cast<std::size_t>(it - idx.begin())];
}

}  // namespace ahp

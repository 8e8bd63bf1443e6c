/**
 * @file matrix.hpp
 * @brief Row-major dense matrix of doubles.
 */
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "ahp/common.hpp"

namespace ahp {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::initializer_list<double> values) : rows(r), cols(c), data(values) {
    if (data.size() != r * c) throw ShapeError("initializer size does not match matrix shape");
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace ahp

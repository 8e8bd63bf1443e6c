#include "ahp/kernels.hpp"

#include <algorithm>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ahp::kernels {

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok)
    throw ShapeError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows) + "x" +
                     std::to_string(a.cols) + " and " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
}

// Row kernels shared by the serial and parallel drivers so both perform the
// same floating-point operations in the same order.

// Rows [i, i + R) of a b. Each output entry accumulates over k in ascending
// order and skips zero entries of a, as a one-row loop would; the block only
// shares the loads of b's rows between the R outputs.
template <std::size_t R>
[[gnu::always_inline]] inline void gemm_block(const Matrix& a, const Matrix& b, std::size_t i, double* out) {
  const std::size_t n = b.cols, kk = a.cols;
  const double* arows = a.data.data() + i * kk;
  const double* bdata = b.data.data();
  for (std::size_t k = 0; k < kk; ++k) {
    const double* brow = bdata + k * n;
    double av[R];
    bool dense = true;
    for (std::size_t r = 0; r < R; ++r) {
      av[r] = arows[r * kk + k];
      dense = dense && av[r] != 0.0;
    }
    if (dense) {
      // Output rows never overlap b or each other.
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) {
        const double bv = brow[j];
        for (std::size_t r = 0; r < R; ++r) out[r * n + j] += av[r] * bv;
      }
      continue;
    }
    for (std::size_t r = 0; r < R; ++r) {
      if (av[r] == 0.0) continue;
      double* o = out + r * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av[r] * brow[j];
    }
  }
}

constexpr std::size_t kGemmBlock = 4;

// Block `blk` of kGemmBlock rows; the last block may be shorter. Cloned for
// wider vector units: with contraction off every lane does the same multiply
// and add, so all clones round identically.
__attribute__((target_clones("avx512f", "avx2", "default")))
void gemm_rows(const Matrix& a, const Matrix& b, std::size_t blk, Matrix& c) {
  const std::size_t i = blk * kGemmBlock;
  double* out = c.data.data() + i * c.cols;
  switch (std::min(kGemmBlock, a.rows - i)) {
    case 4: return gemm_block<4>(a, b, i, out);
    case 3: return gemm_block<3>(a, b, i, out);
    case 2: return gemm_block<2>(a, b, i, out);
    default: return gemm_block<1>(a, b, i, out);
  }
}

// Row i of a^T b.
inline void gemm_tn_row(const Matrix& a, const Matrix& b, std::size_t i, double* out) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double av = a.data[r * a.cols + i];
    if (av == 0.0) continue;
    const double* brow = b.data.data() + r * b.cols;
    for (std::size_t j = 0; j < b.cols; ++j) out[j] += av * brow[j];
  }
}

// Row i of a b^T.
inline void gemm_nt_row(const Matrix& a, const Matrix& b, std::size_t i, double* out) {
  const double* arow = a.data.data() + i * a.cols;
  for (std::size_t j = 0; j < b.rows; ++j) {
    const double* brow = b.data.data() + j * b.cols;
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
    out[j] += acc;
  }
}

inline void spmm_row(const CsrMatrix& s, const Matrix& x, std::size_t i, double* out) {
  auto idx = s.row_indices(i);
  auto val = s.row_values(i);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double sv = val[k];
    const double* xrow = x.data.data() + static_cast<std::size_t>(idx[k]) * x.cols;
    for (std::size_t j = 0; j < x.cols; ++j) out[j] += sv * xrow[j];
  }
}

template <typename RowFn>
void run_serial(std::size_t rows, Matrix& out, RowFn&& fn) {
  for (std::size_t i = 0; i < rows; ++i) fn(i, out.data.data() + i * out.cols);
}

// Below this many output entries the parallel region costs more than it saves.
constexpr std::size_t kMinParallelOutputs = 4096;

template <typename RowFn>
void run_parallel(std::size_t rows, Matrix& out, RowFn&& fn) {
  if (rows < 2 || rows * out.cols < kMinParallelOutputs || max_threads() == 1) return run_serial(rows, out, fn);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(rows); ++i)
    fn(static_cast<std::size_t>(i), out.data.data() + static_cast<std::size_t>(i) * out.cols);
}

}  // namespace

namespace serial {

Matrix gemm(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "gemm", a, b);
  Matrix c(a.rows, b.cols);
  const std::size_t blocks = (a.rows + kGemmBlock - 1) / kGemmBlock;
  for (std::size_t blk = 0; blk < blocks; ++blk) gemm_rows(a, b, blk, c);
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  require(a.rows == b.rows, "gemm_tn", a, b);
  Matrix c(a.cols, b.cols);
  run_serial(a.cols, c, [&](std::size_t i, double* o) { gemm_tn_row(a, b, i, o); });
  return c;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  require(a.cols == b.cols, "gemm_nt", a, b);
  Matrix c(a.rows, b.rows);
  run_serial(a.rows, c, [&](std::size_t i, double* o) { gemm_nt_row(a, b, i, o); });
  return c;
}

Matrix spmm(const CsrMatrix& s, const Matrix& x) {
  if (s.cols() != x.rows) throw ShapeError("spmm: sparse cols do not match dense rows");
  Matrix c(s.rows(), x.cols);
  run_serial(s.rows(), c, [&](std::size_t i, double* o) { spmm_row(s, x, i, o); });
  return c;
}

}  // namespace serial

Matrix gemm(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "gemm", a, b);
  Matrix c(a.rows, b.cols);
  const std::size_t blocks = (a.rows + kGemmBlock - 1) / kGemmBlock;
  if (blocks < 2 || c.data.size() < kMinParallelOutputs || max_threads() == 1) {
    for (std::size_t blk = 0; blk < blocks; ++blk) gemm_rows(a, b, blk, c);
    return c;
  }
#pragma omp parallel for schedule(static)
  for (std::int64_t blk = 0; blk < static_cast<std::int64_t>(blocks); ++blk)
    gemm_rows(a, b, static_cast<std::size_t>(blk), c);
  return c;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols, b.cols);
  gemm_tn_accumulate(a, b, c);
  return c;
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.rows);
  gemm_nt_accumulate(a, b, c);
  return c;
}

Matrix spmm(const CsrMatrix& s, const Matrix& x) {
  Matrix c(s.rows(), x.cols);
  spmm_accumulate(s, x, c);
  return c;
}

void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols, "gemm_tn", a, b);
  run_parallel(a.cols, out, [&](std::size_t i, double* o) { gemm_tn_row(a, b, i, o); });
}

void gemm_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows, "gemm_nt", a, b);
  run_parallel(a.rows, out, [&](std::size_t i, double* o) { gemm_nt_row(a, b, i, o); });
}

void spmm_accumulate(const CsrMatrix& s, const Matrix& x, Matrix& out) {
  if (s.cols() != x.rows || out.rows != s.rows() || out.cols != x.cols)
    throw ShapeError("spmm: incompatible shapes");
  run_parallel(s.rows(), out, [&](std::size_t i, double* o) { spmm_row(s, x, i, o); });
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace ahp::kernels

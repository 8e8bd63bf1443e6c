/**
 * @file kernels.hpp
 * @brief Dense and sparse-dense products.
 *
 * Functions in ahp::kernels are OpenMP-parallel over output rows. Each output
 * element is accumulated by a single thread in a fixed order, so results are
 * bit-identical to the ahp::kernels::serial reference for any thread count.
 */
#pragma once

#include "ahp/matrix.hpp"
#include "ahp/sparse.hpp"

namespace ahp::kernels {

namespace serial {

Matrix gemm(const Matrix& a, const Matrix& b);     // a * b
Matrix gemm_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix gemm_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix spmm(const CsrMatrix& s, const Matrix& x);  // s * x

}  // namespace serial

Matrix gemm(const Matrix& a, const Matrix& b);
Matrix gemm_tn(const Matrix& a, const Matrix& b);
Matrix gemm_nt(const Matrix& a, const Matrix& b);
Matrix spmm(const CsrMatrix& s, const Matrix& x);

/// out += a^T * b, used for weight gradients.
void gemm_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b^T, used for input gradients.
void gemm_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& out);
/// out += s * x
void spmm_accumulate(const CsrMatrix& s, const Matrix& x, Matrix& out);

/// Number of threads OpenMP would use; 1 when built without OpenMP.
int max_threads();
void set_threads(int n);

}  // namespace ahp::kernels

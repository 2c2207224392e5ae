#pragma once

namespace vlrl::detail {

// Row-major C = alpha * op(A) * op(B) + beta * C, backed by BLAS.
// op(A) is m x k, op(B) is k x n, C is m x n.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
          const float* a, int lda, const float* b, int ldb, float beta,
          float* c, int ldc);

// Pins BLAS to one thread for deterministic, single-core behavior.
void init_blas_single_thread();

}  // namespace vlrl::detail

#pragma once

// Dense kernels behind the tensor ops. Each kernel has a serial reference
// implementation (kept for testing and benchmarking) and an OpenMP one that
// the library dispatches to. The OpenMP kernels only fork when the work is
// large enough to pay for it.

#include "bfamr/tensor.hpp"

namespace bfamr::kernels {

enum class Trans { No, Yes };

// C (+)= op(A) * op(B), where op(A) is m x k and op(B) is k x n.
// Leading dimensions are the row strides of the stored (untransposed) arrays.
struct GemmArgs {
  Trans trans_a = Trans::No;
  Trans trans_b = Trans::No;
  int m = 0, n = 0, k = 0;
  const Real* a = nullptr;
  int lda = 0;
  const Real* b = nullptr;
  int ldb = 0;
  Real* c = nullptr;
  int ldc = 0;
  bool accumulate = false;
};

namespace serial {
void gemm(const GemmArgs& args);
// Row-wise softmax of an rows x cols block; entries with mask == 0 get
// probability exactly 0 (mask may be null).
void softmax_rows(const Real* x, const unsigned char* mask, int rows, int cols, Real* out);
// Row-wise normalization: out = (x - mean) / sqrt(var + eps); inv_std per row.
void normalize_rows(const Real* x, int rows, int cols, Real eps, Real* out, Real* inv_std);
}  // namespace serial

namespace omp {
void gemm(const GemmArgs& args);
void softmax_rows(const Real* x, const unsigned char* mask, int rows, int cols, Real* out);
void normalize_rows(const Real* x, int rows, int cols, Real eps, Real* out, Real* inv_std);
}  // namespace omp

// Library entry points (OpenMP versions).
inline void gemm(const GemmArgs& args) { omp::gemm(args); }
inline void softmax_rows(const Real* x, const unsigned char* mask, int rows, int cols, Real* out) {
  omp::softmax_rows(x, mask, rows, cols, out);
}
inline void normalize_rows(const Real* x, int rows, int cols, Real eps, Real* out, Real* inv_std) {
  omp::normalize_rows(x, rows, cols, eps, out, inv_std);
}

}  // namespace bfamr::kernels

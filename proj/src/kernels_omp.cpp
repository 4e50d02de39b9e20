#include <omp.h>

#include <cmath>
#include <limits>

#include "bfamr/kernels.hpp"

namespace bfamr::kernels::omp {

namespace {

// Below this many multiply-adds a fork costs more than it saves.
constexpr long kParallelWork = 1L << 16;

}  // namespace

void gemm(const GemmArgs& g) {
  const long work = static_cast<long>(g.m) * g.n * g.k;
  const bool par = work >= kParallelWork && !omp_in_parallel();
  const int m = g.m, n = g.n, k = g.k;
  if (g.trans_a == Trans::No && g.trans_b == Trans::No) {
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) {
      Real* c = g.c + static_cast<std::size_t>(i) * g.ldc;
      if (!g.accumulate)
        for (int j = 0; j < n; ++j) c[j] = 0;
      const Real* a = g.a + static_cast<std::size_t>(i) * g.lda;
      for (int p = 0; p < k; ++p) {
        const Real av = a[p];
        if (av == Real(0)) continue;
        const Real* b = g.b + static_cast<std::size_t>(p) * g.ldb;
        for (int j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  } else if (g.trans_a == Trans::No && g.trans_b == Trans::Yes) {
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) {
      const Real* a = g.a + static_cast<std::size_t>(i) * g.lda;
      Real* c = g.c + static_cast<std::size_t>(i) * g.ldc;
      for (int j = 0; j < n; ++j) {
        const Real* b = g.b + static_cast<std::size_t>(j) * g.ldb;
        Real acc = 0;
        for (int p = 0; p < k; ++p) acc += a[p] * b[p];
        c[j] = g.accumulate ? c[j] + acc : acc;
      }
    }
  } else if (g.trans_a == Trans::Yes && g.trans_b == Trans::No) {
    // C[i,:] += sum_p A[p,i] * B[p,:]
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) {
      Real* c = g.c + static_cast<std::size_t>(i) * g.ldc;
      if (!g.accumulate)
        for (int j = 0; j < n; ++j) c[j] = 0;
      for (int p = 0; p < k; ++p) {
        const Real av = g.a[static_cast<std::size_t>(p) * g.lda + i];
        if (av == Real(0)) continue;
        const Real* b = g.b + static_cast<std::size_t>(p) * g.ldb;
        for (int j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  } else {
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) {
      Real* c = g.c + static_cast<std::size_t>(i) * g.ldc;
      for (int j = 0; j < n; ++j) {
        const Real* b = g.b + static_cast<std::size_t>(j) * g.ldb;
        Real acc = 0;
        for (int p = 0; p < k; ++p) acc += g.a[static_cast<std::size_t>(p) * g.lda + i] * b[p];
        c[j] = g.accumulate ? c[j] + acc : acc;
      }
    }
  }
}

void softmax_rows(const Real* x, const unsigned char* mask, int rows, int cols, Real* out) {
  const bool par = static_cast<long>(rows) * cols >= kParallelWork && !omp_in_parallel();
#pragma omp parallel for schedule(static) if (par)
  for (int r = 0; r < rows; ++r) {
    const Real* xr = x + static_cast<std::size_t>(r) * cols;
    const unsigned char* mr = mask ? mask + static_cast<std::size_t>(r) * cols : nullptr;
    Real* o = out + static_cast<std::size_t>(r) * cols;
    Real mx = -std::numeric_limits<Real>::infinity();
    for (int c = 0; c < cols; ++c)
      if (!mr || mr[c]) mx = xr[c] > mx ? xr[c] : mx;
    Real sum = 0;
    for (int c = 0; c < cols; ++c) {
      o[c] = (!mr || mr[c]) ? std::exp(xr[c] - mx) : Real(0);
      sum += o[c];
    }
    if (sum > 0)
      for (int c = 0; c < cols; ++c) o[c] /= sum;
  }
}

void normalize_rows(const Real* x, int rows, int cols, Real eps, Real* out, Real* inv_std) {
  const bool par = static_cast<long>(rows) * cols >= kParallelWork && !omp_in_parallel();
#pragma omp parallel for schedule(static) if (par)
  for (int r = 0; r < rows; ++r) {
    const Real* xr = x + static_cast<std::size_t>(r) * cols;
    Real* o = out + static_cast<std::size_t>(r) * cols;
    Real mean = 0;
    for (int c = 0; c < cols; ++c) mean += xr[c];
    mean /= cols;
    Real var = 0;
    for (int c = 0; c < cols; ++c) {
      const Real d = xr[c] - mean;
      var += d * d;
    }
    var /= cols;
    const Real is = Real(1) / std::sqrt(var + eps);
    for (int c = 0; c < cols; ++c) o[c] = (xr[c] - mean) * is;
    inv_std[r] = is;
  }
}

}  // namespace bfamr::kernels::omp

#include <cmath>
#include <limits>

#include "bfamr/kernels.hpp"

namespace bfamr::kernels::serial {

namespace {

inline Real elem(const Real* p, int ld, Trans t, int r, int c) {
  return t == Trans::No ? p[static_cast<std::size_t>(r) * ld + c] : p[static_cast<std::size_t>(c) * ld + r];
}

}  // namespace

void gemm(const GemmArgs& g) {
  for (int i = 0; i < g.m; ++i) {
    for (int j = 0; j < g.n; ++j) {
      Real acc = 0;
      for (int p = 0; p < g.k; ++p)
        acc += elem(g.a, g.lda, g.trans_a, i, p) * elem(g.b, g.ldb, g.trans_b, p, j);
      Real& out = g.c[static_cast<std::size_t>(i) * g.ldc + j];
      out = g.accumulate ? out + acc : acc;
    }
  }
}

void softmax_rows(const Real* x, const unsigned char* mask, int rows, int cols, Real* out) {
  for (int r = 0; r < rows; ++r) {
    const Real* xr = x + static_cast<std::size_t>(r) * cols;
    const unsigned char* mr = mask ? mask + static_cast<std::size_t>(r) * cols : nullptr;
    Real* o = out + static_cast<std::size_t>(r) * cols;
    Real mx = -std::numeric_limits<Real>::infinity();
    for (int c = 0; c < cols; ++c)
      if (!mr || mr[c]) mx = std::max(mx, xr[c]);
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
  for (int r = 0; r < rows; ++r) {
    const Real* xr = x + static_cast<std::size_t>(r) * cols;
    Real* o = out + static_cast<std::size_t>(r) * cols;
    Real mean = 0;
    for (int c = 0; c < cols; ++c) mean += xr[c];
    mean /= cols;
    Real var = 0;
    for (int c = 0; c < cols; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= cols;
    const Real is = Real(1) / std::sqrt(var + eps);
    for (int c = 0; c < cols; ++c) o[c] = (xr[c] - mean) * is;
    inv_std[r] = is;
  }
}

}  // namespace bfamr::kernels::serial

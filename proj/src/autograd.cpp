#include "bfamr/autograd.hpp"

#include <cassert>
#include <cmath>
#include <memory>

#include "bfamr/error.hpp"
#include "bfamr/kernels.hpp"

namespace bfamr {

using kernels::GemmArgs;
using kernels::Trans;

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(const Parameter& p) {
  auto it = param_nodes_.find(p.index);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.external = &p.value;
  n.param = p.index;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(p.index, id);
  return Var(this, id);
}

void Tape::truncate(std::size_t n) {
  if (n >= nodes_.size()) return;
  nodes_.resize(n);
  for (auto it = param_nodes_.begin(); it != param_nodes_.end();) {
    if (static_cast<std::size_t>(it->second) >= n)
      it = param_nodes_.erase(it);
    else
      ++it;
  }
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Tape::push(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  assert(value.all_finite() && "non-finite tensor value");
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& v : inputs)
      if (v.valid() && needs_grad(v.id())) n.needs_grad = true;
    if (n.needs_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Tensor& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external ? *n.external : n.value;
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) {
    const Tensor& v = n.external ? *n.external : n.value;
    n.grad = Tensor(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss, Gradients& sink) {
  if (!record_) throw Error("backward on a non-recording tape");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw ShapeError("backward needs a 1 x 1 loss, got " + loss.value().shape_string());
  if (!needs_grad(loss.id())) return;
  grad(loss.id())[0] += Real(1);
  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param >= 0) {
      auto& g = sink.at(static_cast<std::size_t>(n.param));
      if (g.empty())
        g = n.grad;
      else
        g.add_in_place(n.grad);
    }
  }
}

namespace ag {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                   b.shape_string());
}

// C (+)= op(A) op(B) over whole tensors.
void gemm(Tensor& c, const Tensor& a, Trans ta, const Tensor& b, Trans tb, bool accumulate) {
  GemmArgs g;
  g.trans_a = ta;
  g.trans_b = tb;
  g.m = ta == Trans::No ? a.rows() : a.cols();
  g.k = ta == Trans::No ? a.cols() : a.rows();
  g.n = tb == Trans::No ? b.cols() : b.rows();
  g.a = a.data();
  g.lda = a.cols();
  g.b = b.data();
  g.ldb = b.cols();
  g.c = c.data();
  g.ldc = c.cols();
  g.accumulate = accumulate;
  kernels::gemm(g);
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) shape_error("matmul", A, B);
  Tensor y(A.rows(), B.cols());
  gemm(y, A, Trans::No, B, Trans::No, false);
  const int ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), {a, b}, [ia, ib](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    if (t.needs_grad(ia)) gemm(t.grad(ia), dy, Trans::No, t.value(ib), Trans::Yes, true);
    if (t.needs_grad(ib)) gemm(t.grad(ib), t.value(ia), Trans::Yes, dy, Trans::No, true);
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.cols()) shape_error("matmul_nt", A, B);
  Tensor y(A.rows(), B.rows());
  gemm(y, A, Trans::No, B, Trans::Yes, false);
  const int ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), {a, b}, [ia, ib](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    if (t.needs_grad(ia)) gemm(t.grad(ia), dy, Trans::No, t.value(ib), Trans::No, true);
    if (t.needs_grad(ib)) gemm(t.grad(ib), dy, Trans::Yes, t.value(ia), Trans::No, true);
  });
}

Var linear(Var x, Var w, Var bias) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  if (X.cols() != W.cols()) shape_error("linear", X, W);
  Tensor y(X.rows(), W.rows());
  gemm(y, X, Trans::No, W, Trans::Yes, false);
  const bool has_bias = bias.valid();
  if (has_bias) {
    const Tensor& B = bias.value();
    if (B.rows() != 1 || B.cols() != W.rows()) shape_error("linear bias", B, W);
    for (int r = 0; r < y.rows(); ++r)
      for (int c = 0; c < y.cols(); ++c) y(r, c) += B[c];
  }
  const int ix = x.id(), iw = w.id(), ib = has_bias ? bias.id() : -1;
  auto inputs = {x, w, bias};
  return x.tape().push(std::move(y), inputs, [ix, iw, ib](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    if (t.needs_grad(ix)) gemm(t.grad(ix), dy, Trans::No, t.value(iw), Trans::No, true);
    if (t.needs_grad(iw)) gemm(t.grad(iw), dy, Trans::Yes, t.value(ix), Trans::No, true);
    if (ib >= 0 && t.needs_grad(ib)) {
      Tensor& db = t.grad(ib);
      for (int r = 0; r < dy.rows(); ++r)
        for (int c = 0; c < dy.cols(); ++c) db[c] += dy(r, c);
    }
  });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("add", A, B);
  Tensor y = A;
  y.add_in_place(B);
  const int ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), {a, b}, [ia, ib](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia).add_in_place(dy);
    if (t.needs_grad(ib)) t.grad(ib).add_in_place(dy);
  });
}

Var sub(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Tensor y = A;
  for (int i = 0; i < y.size(); ++i) y[i] -= B[i];
  const int ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), {a, b}, [ia, ib](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia).add_in_place(dy);
    if (t.needs_grad(ib)) {
      Tensor& g = t.grad(ib);
      for (int i = 0; i < g.size(); ++i) g[i] -= dy[i];
    }
  });
}

Var mul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool a_scalar = A.size() == 1, b_scalar = B.size() == 1;
  if (!A.same_shape(B) && !a_scalar && !b_scalar) shape_error("mul", A, B);
  const Tensor& big = (a_scalar && !b_scalar) ? B : A;
  Tensor y(big.rows(), big.cols());
  for (int i = 0; i < y.size(); ++i) y[i] = A[a_scalar ? 0 : i] * B[b_scalar ? 0 : i];
  const int ia = a.id(), ib = b.id();
  return a.tape().push(std::move(y), {a, b}, [ia, ib, a_scalar, b_scalar](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (t.needs_grad(ia)) {
      Tensor& g = t.grad(ia);
      for (int i = 0; i < dy.size(); ++i) g[a_scalar ? 0 : i] += dy[i] * B[b_scalar ? 0 : i];
    }
    if (t.needs_grad(ib)) {
      Tensor& g = t.grad(ib);
      for (int i = 0; i < dy.size(); ++i) g[b_scalar ? 0 : i] += dy[i] * A[a_scalar ? 0 : i];
    }
  });
}

Var scale(Var a, Real s) {
  Tensor y = a.value();
  for (int i = 0; i < y.size(); ++i) y[i] *= s;
  const int ia = a.id();
  return a.tape().push(std::move(y), {a}, [ia, s](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& g = t.grad(ia);
    for (int i = 0; i < dy.size(); ++i) g[i] += s * dy[i];
  });
}

Var add_row(Var a, Var row) {
  const Tensor& A = a.value();
  const Tensor& R = row.value();
  if (R.rows() != 1 || R.cols() != A.cols()) shape_error("add_row", A, R);
  Tensor y = A;
  for (int r = 0; r < y.rows(); ++r)
    for (int c = 0; c < y.cols(); ++c) y(r, c) += R[c];
  const int ia = a.id(), ir = row.id();
  return a.tape().push(std::move(y), {a, row}, [ia, ir](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia).add_in_place(dy);
    if (t.needs_grad(ir)) {
      Tensor& g = t.grad(ir);
      for (int r = 0; r < dy.rows(); ++r)
        for (int c = 0; c < dy.cols(); ++c) g[c] += dy(r, c);
    }
  });
}

Var relu(Var x) {
  Tensor y = x.value();
  for (int i = 0; i < y.size(); ++i) y[i] = y[i] > 0 ? y[i] : Real(0);
  const int ix = x.id();
  return x.tape().push(std::move(y), {x}, [ix](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Tensor& X = t.value(ix);
    Tensor& g = t.grad(ix);
    for (int i = 0; i < dy.size(); ++i)
      if (X[i] > 0) g[i] += dy[i];
  });
}

Var layer_norm(Var x, Var gain, Var bias, Real eps) {
  const Tensor& X = x.value();
  const Tensor& G = gain.value();
  const Tensor& B = bias.value();
  if (G.cols() != X.cols() || B.cols() != X.cols() || G.rows() != 1 || B.rows() != 1)
    shape_error("layer_norm", X, G);
  const int rows = X.rows(), cols = X.cols();
  auto xhat = std::make_shared<Tensor>(rows, cols);
  auto inv_std = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(rows));
  kernels::normalize_rows(X.data(), rows, cols, eps, xhat->data(), inv_std->data());
  Tensor y(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) y(r, c) = (*xhat)(r, c) * G[c] + B[c];
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return x.tape().push(std::move(y), {x, gain, bias},
                       [ix, ig, ib, xhat, inv_std](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Tensor& G = t.value(ig);
    const int rows = dy.rows(), cols = dy.cols();
    if (t.needs_grad(ig)) {
      Tensor& gg = t.grad(ig);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) gg[c] += dy(r, c) * (*xhat)(r, c);
    }
    if (t.needs_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) gb[c] += dy(r, c);
    }
    if (t.needs_grad(ix)) {
      Tensor& gx = t.grad(ix);
      for (int r = 0; r < rows; ++r) {
        Real sum_d = 0, sum_dx = 0;
        for (int c = 0; c < cols; ++c) {
          const Real d = dy(r, c) * G[c];
          sum_d += d;
          sum_dx += d * (*xhat)(r, c);
        }
        const Real k = (*inv_std)[static_cast<std::size_t>(r)] / cols;
        for (int c = 0; c < cols; ++c) {
          const Real d = dy(r, c) * G[c];
          gx(r, c) += k * (cols * d - sum_d - (*xhat)(r, c) * sum_dx);
        }
      }
    }
  });
}

Var softmax(Var x, const std::vector<unsigned char>& mask) {
  const Tensor& X = x.value();
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(X.size()))
    throw ShapeError("softmax: mask size " + std::to_string(mask.size()) + " vs " +
                     X.shape_string());
  Tensor y(X.rows(), X.cols());
  kernels::softmax_rows(X.data(), mask.empty() ? nullptr : mask.data(), X.rows(), X.cols(),
                        y.data());
  const int ix = x.id();
  return x.tape().push(std::move(y), {x}, [ix](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Tensor& Y = t.value(self);
    Tensor& g = t.grad(ix);
    for (int r = 0; r < Y.rows(); ++r) {
      Real dot = 0;
      for (int c = 0; c < Y.cols(); ++c) dot += dy(r, c) * Y(r, c);
      for (int c = 0; c < Y.cols(); ++c) g(r, c) += Y(r, c) * (dy(r, c) - dot);
    }
  });
}

Var attention(Var q, Var k, Var v, int heads, const std::vector<unsigned char>& mask) {
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  const Tensor& V = v.value();
  if (Q.cols() != K.cols()) shape_error("attention q/k", Q, K);
  if (!K.same_shape(V)) shape_error("attention k/v", K, V);
  if (heads < 1 || Q.cols() % heads != 0)
    throw ShapeError("attention: " + std::to_string(Q.cols()) + " columns not divisible by " +
                     std::to_string(heads) + " heads");
  const int nq = Q.rows(), nk = K.rows(), d = Q.cols(), dh = d / heads;
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(nq) * nk)
    throw ShapeError("attention: mask size " + std::to_string(mask.size()) + " vs [" +
                     std::to_string(nq) + " x " + std::to_string(nk) + "]");
  const Real sc = Real(1) / std::sqrt(static_cast<Real>(dh));
  auto probs = std::make_shared<std::vector<Tensor>>();
  Tensor y(nq, d);
  Tensor scores(nq, nk);
  for (int h = 0; h < heads; ++h) {
    GemmArgs g;
    g.trans_b = Trans::Yes;
    g.m = nq;
    g.n = nk;
    g.k = dh;
    g.a = Q.data() + h * dh;
    g.lda = d;
    g.b = K.data() + h * dh;
    g.ldb = d;
    g.c = scores.data();
    g.ldc = nk;
    kernels::gemm(g);
    for (int i = 0; i < scores.size(); ++i) scores[i] *= sc;
    Tensor p(nq, nk);
    kernels::softmax_rows(scores.data(), mask.empty() ? nullptr : mask.data(), nq, nk, p.data());
    GemmArgs o;
    o.m = nq;
    o.n = dh;
    o.k = nk;
    o.a = p.data();
    o.lda = nk;
    o.b = V.data() + h * dh;
    o.ldb = d;
    o.c = y.data() + h * dh;
    o.ldc = d;
    kernels::gemm(o);
    probs->push_back(std::move(p));
  }
  const int iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape().push(std::move(y), {q, k, v},
                       [iq, ik, iv, heads, dh, sc, probs](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Tensor& Q = t.value(iq);
    const Tensor& K = t.value(ik);
    const Tensor& V = t.value(iv);
    const int nq = Q.rows(), nk = K.rows(), d = Q.cols();
    Tensor dp(nq, nk);
    for (int h = 0; h < heads; ++h) {
      const Tensor& P = (*probs)[static_cast<std::size_t>(h)];
      // dP = dY_h V_h^T
      GemmArgs g;
      g.trans_b = Trans::Yes;
      g.m = nq;
      g.n = nk;
      g.k = dh;
      g.a = dy.data() + h * dh;
      g.lda = d;
      g.b = V.data() + h * dh;
      g.ldb = d;
      g.c = dp.data();
      g.ldc = nk;
      kernels::gemm(g);
      if (t.needs_grad(iv)) {
        // dV_h += P^T dY_h
        GemmArgs gv;
        gv.trans_a = Trans::Yes;
        gv.m = nk;
        gv.n = dh;
        gv.k = nq;
        gv.a = P.data();
        gv.lda = nk;
        gv.b = dy.data() + h * dh;
        gv.ldb = d;
        gv.c = t.grad(iv).data() + h * dh;
        gv.ldc = d;
        gv.accumulate = true;
        kernels::gemm(gv);
      }
      // dS = P * (dP - rowsum(dP * P)) * scale
      for (int r = 0; r < nq; ++r) {
        Real dot = 0;
        for (int c = 0; c < nk; ++c) dot += dp(r, c) * P(r, c);
        for (int c = 0; c < nk; ++c) dp(r, c) = P(r, c) * (dp(r, c) - dot) * sc;
      }
      if (t.needs_grad(iq)) {
        GemmArgs gq;
        gq.m = nq;
        gq.n = dh;
        gq.k = nk;
        gq.a = dp.data();
        gq.lda = nk;
        gq.b = K.data() + h * dh;
        gq.ldb = d;
        gq.c = t.grad(iq).data() + h * dh;
        gq.ldc = d;
        gq.accumulate = true;
        kernels::gemm(gq);
      }
      if (t.needs_grad(ik)) {
        GemmArgs gk;
        gk.trans_a = Trans::Yes;
        gk.m = nk;
        gk.n = dh;
        gk.k = nq;
        gk.a = dp.data();
        gk.lda = nk;
        gk.b = Q.data() + h * dh;
        gk.ldb = d;
        gk.c = t.grad(ik).data() + h * dh;
        gk.ldc = d;
        gk.accumulate = true;
        kernels::gemm(gk);
      }
    }
  });
}

Var dropout(Var x, Real p, std::mt19937_64& rng) {
  if (p <= Real(0)) return x;
  if (p >= Real(1)) throw Error("dropout probability must be below 1");
  const Tensor& X = x.value();
  auto keep = std::make_shared<std::vector<unsigned char>>(static_cast<std::size_t>(X.size()));
  std::bernoulli_distribution coin(1.0 - static_cast<double>(p));
  const Real s = Real(1) / (Real(1) - p);
  Tensor y(X.rows(), X.cols());
  for (int i = 0; i < X.size(); ++i) {
    (*keep)[static_cast<std::size_t>(i)] = coin(rng) ? 1 : 0;
    y[i] = (*keep)[static_cast<std::size_t>(i)] ? X[i] * s : Real(0);
  }
  const int ix = x.id();
  return x.tape().push(std::move(y), {x}, [ix, keep, s](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& g = t.grad(ix);
    for (int i = 0; i < dy.size(); ++i)
      if ((*keep)[static_cast<std::size_t>(i)]) g[i] += dy[i] * s;
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Tensor& T = table.value();
  Tensor y(static_cast<int>(ids.size()), T.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= T.rows())
      throw ShapeError("gather_rows: id " + std::to_string(ids[r]) + " outside " + T.shape_string());
    auto src = T.row(ids[r]);
    std::copy(src.begin(), src.end(), y.row(static_cast<int>(r)).begin());
  }
  const int it = table.id();
  std::vector<int> idv(ids.begin(), ids.end());
  return table.tape().push(std::move(y), {table}, [it, idv = std::move(idv)](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& g = t.grad(it);
    for (std::size_t r = 0; r < idv.size(); ++r) {
      auto src = dy.row(static_cast<int>(r));
      auto dst = g.row(idv[r]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var segment_mean(Var table, const std::vector<std::vector<int>>& groups) {
  const Tensor& T = table.value();
  Tensor y(static_cast<int>(groups.size()), T.cols());
  for (std::size_t r = 0; r < groups.size(); ++r) {
    if (groups[r].empty()) continue;
    const Real inv = Real(1) / static_cast<Real>(groups[r].size());
    auto dst = y.row(static_cast<int>(r));
    for (int id : groups[r]) {
      if (id < 0 || id >= T.rows())
        throw ShapeError("segment_mean: id " + std::to_string(id) + " outside " + T.shape_string());
      auto src = T.row(id);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c] * inv;
    }
  }
  const int it = table.id();
  return table.tape().push(std::move(y), {table}, [it, groups](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& g = t.grad(it);
    for (std::size_t r = 0; r < groups.size(); ++r) {
      if (groups[r].empty()) continue;
      const Real inv = Real(1) / static_cast<Real>(groups[r].size());
      auto src = dy.row(static_cast<int>(r));
      for (int id : groups[r]) {
        auto dst = g.row(id);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c] * inv;
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int rows = parts[0].rows();
  int cols = 0;
  std::vector<int> ids, widths;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Tensor y(rows, cols);
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < P.cols(); ++c) y(r, off + c) = P(r, c);
    off += P.cols();
  }
  return parts[0].tape().push(std::move(y), parts, [ids, widths](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    int off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.needs_grad(ids[i])) {
        Tensor& g = t.grad(ids[i]);
        for (int r = 0; r < dy.rows(); ++r)
          for (int c = 0; c < widths[i]; ++c) g(r, c) += dy(r, off + c);
      }
      off += widths[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const int cols = parts[0].cols();
  int rows = 0;
  std::vector<int> ids, heights;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
    ids.push_back(p.id());
    heights.push_back(p.rows());
  }
  Tensor y(rows, cols);
  Real* out = y.data();
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    std::copy(P.data(), P.data() + P.size(), out);
    out += P.size();
  }
  return parts[0].tape().push(std::move(y), parts, [ids, heights](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Real* src = dy.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int n = heights[i] * dy.cols();
      if (t.needs_grad(ids[i])) {
        Tensor& g = t.grad(ids[i]);
        for (int j = 0; j < n; ++j) g[j] += src[j];
      }
      src += n;
    }
  });
}

Var slice_rows(Var x, int start, int count) {
  const Tensor& X = x.value();
  if (start < 0 || count < 0 || start + count > X.rows())
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", +" + std::to_string(count) +
                     ") outside " + X.shape_string());
  Tensor y(count, X.cols());
  std::copy(X.data() + static_cast<std::size_t>(start) * X.cols(),
            X.data() + static_cast<std::size_t>(start + count) * X.cols(), y.data());
  const int ix = x.id();
  return x.tape().push(std::move(y), {x}, [ix, start](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& g = t.grad(ix);
    Real* dst = g.data() + static_cast<std::size_t>(start) * g.cols();
    for (int j = 0; j < dy.size(); ++j) dst[j] += dy[j];
  });
}

Var mean_rows(Var x) {
  const Tensor& X = x.value();
  Tensor y(1, X.cols());
  for (int r = 0; r < X.rows(); ++r)
    for (int c = 0; c < X.cols(); ++c) y[c] += X(r, c);
  const Real inv = Real(1) / static_cast<Real>(X.rows());
  for (int c = 0; c < X.cols(); ++c) y[c] *= inv;
  const int ix = x.id();
  return x.tape().push(std::move(y), {x}, [ix, inv](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& g = t.grad(ix);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) g(r, c) += dy[c] * inv;
  });
}

Var sum_entries(Var x, std::span<const int> cols) {
  const Tensor& X = x.value();
  if (X.rows() != 1) throw ShapeError("sum_entries expects a row, got " + X.shape_string());
  Tensor y(1, 1);
  for (int c : cols) {
    if (c < 0 || c >= X.cols())
      throw ShapeError("sum_entries: column " + std::to_string(c) + " outside " + X.shape_string());
    y[0] += X[c];
  }
  const int ix = x.id();
  std::vector<int> cv(cols.begin(), cols.end());
  return x.tape().push(std::move(y), {x}, [ix, cv = std::move(cv)](Tape& t, int self) {
    const Real dy = t.grad(self)[0];
    Tensor& g = t.grad(ix);
    for (int c : cv) g[c] += dy;
  });
}

Var pick(Var x, int col) {
  const int cols[1] = {col};
  return sum_entries(x, cols);
}

Var neg_log(Var p, Real floor) {
  const Tensor& P = p.value();
  if (P.size() != 1) throw ShapeError("neg_log expects 1 x 1, got " + P.shape_string());
  Tensor y(1, 1, -std::log(P[0] + floor));
  const int ip = p.id();
  return p.tape().push(std::move(y), {p}, [ip, floor](Tape& t, int self) {
    const Real dy = t.grad(self)[0];
    t.grad(ip)[0] += -dy / (t.value(ip)[0] + floor);
  });
}

Var cross_entropy(Var dist, int gold) { return neg_log(pick(dist, gold)); }

Var add_n(std::span<const Var> terms) {
  if (terms.empty()) throw ShapeError("add_n: no inputs");
  Tensor y = terms[0].value();
  std::vector<int> ids{terms[0].id()};
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (!terms[i].value().same_shape(y)) shape_error("add_n", y, terms[i].value());
    y.add_in_place(terms[i].value());
    ids.push_back(terms[i].id());
  }
  return terms[0].tape().push(std::move(y), terms, [ids](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    for (int id : ids)
      if (t.needs_grad(id)) t.grad(id).add_in_place(dy);
  });
}

}  // namespace ag

}  // namespace bfamr

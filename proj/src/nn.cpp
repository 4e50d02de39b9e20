#include "bfamr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bfamr/error.hpp"

namespace bfamr {

Parameter& ParamStore::create(const std::string& name, int rows, int cols, Init init) {
  if (by_name_.count(name)) throw Error("duplicate parameter name " + name);
  if (rows < 1 || cols < 1)
    throw ShapeError("parameter " + name + " needs positive dimensions, got [" +
                     std::to_string(rows) + " x " + std::to_string(cols) + "]");
  Parameter p;
  p.name = name;
  p.index = static_cast<int>(params_.size());
  p.value = Tensor(rows, cols);
  switch (init) {
    case Init::Xavier: {
      const double limit = std::sqrt(6.0 / (rows + cols));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (int i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<Real>(u(rng_));
      break;
    }
    case Init::Embedding: {
      std::normal_distribution<double> n(0.0, 0.02);
      for (int i = 0; i < p.value.size(); ++i) p.value[i] = static_cast<Real>(n(rng_));
      break;
    }
    case Init::Ones:
      p.value.fill(Real(1));
      break;
    case Init::Zeros:
      break;
  }
  p.m = Tensor(rows, cols);
  p.v = Tensor(rows, cols);
  by_name_.emplace(name, p.index);
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw Error("no parameter named " + name);
  return params_[static_cast<std::size_t>(it->second)];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw Error("no parameter named " + name);
  return params_[static_cast<std::size_t>(it->second)];
}

long long ParamStore::scalar_count() const {
  long long n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void accumulate_gradients(Gradients& into, const Gradients& from) {
  if (into.size() != from.size()) throw ShapeError("gradient buffers differ in length");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i].empty()) continue;
    if (into[i].empty())
      into[i] = from[i];
    else
      into[i].add_in_place(from[i]);
  }
}

void scale_gradients(Gradients& grads, Real factor) {
  for (auto& g : grads)
    for (int i = 0; i < g.size(); ++i) g[i] *= factor;
}

Real gradient_norm(const Gradients& grads) {
  Real s = 0;
  for (const auto& g : grads) s += g.squared_norm();
  return std::sqrt(s);
}

Real clip_grad_norm(Gradients& grads, Real max_norm) {
  const Real norm = gradient_norm(grads);
  if (norm > max_norm && norm > 0) scale_gradients(grads, max_norm / norm);
  return norm;
}

void adam_step(ParamStore& params, const Gradients& grads, Real lr, const AdamConfig& cfg,
               int step) {
  if (step < 1) throw Error("adam step counts from 1");
  if (grads.size() != static_cast<std::size_t>(params.size()))
    throw ShapeError("gradient buffer does not match parameter count");
  const Real c1 = Real(1) - std::pow(cfg.beta1, static_cast<Real>(step));
  const Real c2 = Real(1) - std::pow(cfg.beta2, static_cast<Real>(step));
  for (auto& p : params.all()) {
    const Tensor& g = grads[static_cast<std::size_t>(p.index)];
    const bool has = !g.empty();
    for (int i = 0; i < p.value.size(); ++i) {
      const Real gi = has ? g[i] : Real(0);
      p.m[i] = cfg.beta1 * p.m[i] + (Real(1) - cfg.beta1) * gi;
      p.v[i] = cfg.beta2 * p.v[i] + (Real(1) - cfg.beta2) * gi * gi;
      const Real mhat = p.m[i] / c1;
      const Real vhat = p.v[i] / c2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Linear Linear::create(ParamStore& ps, const std::string& name, int in, int out, bool bias) {
  Linear l;
  l.weight = &ps.create(name + ".W", out, in, Init::Xavier);
  if (bias) l.bias = &ps.create(name + ".b", 1, out, Init::Zeros);
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  return ag::linear(x, tape.param(*weight), bias ? tape.param(*bias) : Var());
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, int dim) {
  LayerNorm ln;
  ln.gain = &ps.create(name + ".gain", 1, dim, Init::Ones);
  ln.bias = &ps.create(name + ".bias", 1, dim, Init::Zeros);
  return ln;
}

Var LayerNorm::operator()(Tape& tape, Var x) const {
  return ag::layer_norm(x, tape.param(*gain), tape.param(*bias));
}

FeedForward FeedForward::create(ParamStore& ps, const std::string& name, int dim, int hidden) {
  return {Linear::create(ps, name + ".up", dim, hidden), Linear::create(ps, name + ".down", hidden, dim)};
}

Var FeedForward::operator()(Tape& tape, Var x) const { return down(tape, ag::relu(up(tape, x))); }

MultiHeadAttention MultiHeadAttention::create(ParamStore& ps, const std::string& name, int dim,
                                              int heads) {
  if (heads < 1 || dim % heads != 0)
    throw UserError("hidden size " + std::to_string(dim) + " is not divisible by " +
                    std::to_string(heads) + " heads");
  MultiHeadAttention a;
  a.query = Linear::create(ps, name + ".q", dim, dim);
  a.key = Linear::create(ps, name + ".k", dim, dim, false);
  a.value = Linear::create(ps, name + ".v", dim, dim);
  a.out = Linear::create(ps, name + ".o", dim, dim);
  a.heads = heads;
  return a;
}

Var MultiHeadAttention::operator()(Tape& tape, Var queries, Var kv,
                                   const std::vector<unsigned char>& mask) const {
  Var q = query(tape, queries);
  Var k = key(tape, kv);
  Var v = value(tape, kv);
  return out(tape, ag::attention(q, k, v, heads, mask));
}

Embedding Embedding::create(ParamStore& ps, const std::string& name, int rows, int dim) {
  return {&ps.create(name, rows, dim, Init::Embedding)};
}

Var Embedding::operator()(Tape& tape, std::span<const int> ids) const {
  return ag::gather_rows(tape.param(*table), ids);
}

Var Embedding::operator()(Tape& tape, int id) const {
  const int ids[1] = {id};
  return ag::gather_rows(tape.param(*table), ids);
}

GradCheckReport grad_check(const std::function<Var(Tape&)>& loss,
                           std::span<Parameter* const> params, double h,
                           int max_entries_per_param, std::uint64_t seed) {
  std::size_t slots = 0;
  for (const Parameter* p : params) slots = std::max(slots, static_cast<std::size_t>(p->index) + 1);
  Gradients grads(slots);
  {
    Tape tape(true);
    Var l = loss(tape);
    tape.backward(l, grads);
  }
  auto eval = [&] {
    Tape tape(false);
    return static_cast<double>(loss(tape).scalar());
  };
  GradCheckReport report;
  std::mt19937_64 rng(seed);
  for (Parameter* p : params) {
    std::vector<int> entries(static_cast<std::size_t>(p->value.size()));
    std::iota(entries.begin(), entries.end(), 0);
    if (max_entries_per_param > 0 && static_cast<int>(entries.size()) > max_entries_per_param) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(static_cast<std::size_t>(max_entries_per_param));
    }
    const Tensor& g = grads[static_cast<std::size_t>(p->index)];
    for (int i : entries) {
      const Real saved = p->value[i];
      p->value[i] = static_cast<Real>(saved + h);
      const double up = eval();
      p->value[i] = static_cast<Real>(saved - h);
      const double down = eval();
      p->value[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = g.empty() ? 0.0 : static_cast<double>(g[i]);
      const double rel =
          std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-5);
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_entry = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace bfamr

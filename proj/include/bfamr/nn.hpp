#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bfamr/autograd.hpp"

namespace bfamr {

enum class Init { Xavier, Zeros, Ones, Embedding };

// Owns every trainable tensor of a model. Parameters live in a deque so
// references stay valid as more are created.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : rng_(seed) {}
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Parameter& create(const std::string& name, int rows, int cols, Init init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }
  int size() const { return static_cast<int>(params_.size()); }
  long long scalar_count() const;

  // One empty slot per parameter; Tape::backward fills the touched ones.
  Gradients make_gradients() const { return Gradients(params_.size()); }

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, int> by_name_;
  std::mt19937_64 rng_;
};

// into += from, slot by slot; empty slots count as zero.
void accumulate_gradients(Gradients& into, const Gradients& from);
void scale_gradients(Gradients& grads, Real factor);
Real gradient_norm(const Gradients& grads);
// Rescales so the global norm is at most max_norm; returns the norm before.
Real clip_grad_norm(Gradients& grads, Real max_norm);

struct AdamConfig {
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.98);
  Real eps = Real(1e-9);
};

// One bias-corrected Adam update; step counts from 1.
void adam_step(ParamStore& params, const Gradients& grads, Real lr, const AdamConfig& cfg,
               int step);

struct Linear {
  const Parameter* weight = nullptr;  // out x in
  const Parameter* bias = nullptr;    // 1 x out, optional

  static Linear create(ParamStore& ps, const std::string& name, int in, int out, bool bias = true);
  Var operator()(Tape& tape, Var x) const;
};

struct LayerNorm {
  const Parameter* gain = nullptr;
  const Parameter* bias = nullptr;

  static LayerNorm create(ParamStore& ps, const std::string& name, int dim);
  Var operator()(Tape& tape, Var x) const;
};

// W2 relu(W1 x + b1) + b2
struct FeedForward {
  Linear up;
  Linear down;

  static FeedForward create(ParamStore& ps, const std::string& name, int dim, int hidden);
  Var operator()(Tape& tape, Var x) const;
};

struct MultiHeadAttention {
  Linear query, key, value, out;
  int heads = 1;

  static MultiHeadAttention create(ParamStore& ps, const std::string& name, int dim, int heads);
  // Queries attend over kv rows; mask is queries x keys, nonzero = visible.
  Var operator()(Tape& tape, Var queries, Var kv,
                 const std::vector<unsigned char>& mask = {}) const;
};

struct Embedding {
  const Parameter* table = nullptr;

  static Embedding create(ParamStore& ps, const std::string& name, int rows, int dim);
  Var operator()(Tape& tape, std::span<const int> ids) const;
  Var operator()(Tape& tape, int id) const;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_entry;
  int checked = 0;
};

// Compares reverse-mode gradients of loss(tape) against central differences
// for the given parameters. The relative error of one entry is
// |a - n| / max(|a| + |n|, 1e-5). max_entries_per_param <= 0 checks every
// entry; otherwise a seeded sample is drawn.
GradCheckReport grad_check(const std::function<Var(Tape&)>& loss,
                           std::span<Parameter* const> params, double h = 1e-5,
                           int max_entries_per_param = 0, std::uint64_t seed = 0);

}  // namespace bfamr

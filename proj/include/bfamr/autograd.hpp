#pragma once

// Reverse-mode differentiation over a recorded tape.
//
// Every op appends a node holding its value and a backward closure. A tape
// built with record=false keeps values only (inference). Parameters enter
// as leaf nodes; backward() accumulates their gradients into a caller-owned
// Gradients buffer indexed by Parameter::index, so several tapes can run in
// parallel and be merged afterwards.

#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bfamr/tensor.hpp"

namespace bfamr {

struct Parameter {
  std::string name;
  int index = -1;
  Tensor value;
  Tensor grad;
  // Adam moments.
  Tensor m;
  Tensor v;
};

using Gradients = std::vector<Tensor>;

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  const Tensor& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  // Convenience for 1 x 1 results.
  Real scalar() const { return value()[0]; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  Var param(const Parameter& p);
  // Drops every node from position n on (used to reuse an inference tape).
  void truncate(std::size_t n);
  // Appends a node. The backward closure is dropped when no input needs a
  // gradient or the tape is not recording.
  Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var push(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(int id) const;
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  // Gradient buffer of a node, zero-initialized on first access.
  Tensor& grad(int id);

  void backward(Var loss, Gradients& sink);
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    BackwardFn backward;
    int param = -1;
    bool needs_grad = false;
  };
  std::deque<Node> nodes_;
  std::unordered_map<int, int> param_nodes_;
  bool record_;
};

namespace ag {

// y = a * b
Var matmul(Var a, Var b);
// y = a * b^T
Var matmul_nt(Var a, Var b);
// y = x * W^T + bias; W is out x in, bias 1 x out (optional).
Var linear(Var x, Var w, Var bias = {});
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise product; a 1 x 1 operand broadcasts.
Var mul(Var a, Var b);
Var scale(Var a, Real s);
// Adds a 1 x n row to every row of a.
Var add_row(Var a, Var row);
Var relu(Var x);
// Row-wise layer normalization with gain/bias rows.
Var layer_norm(Var x, Var gain, Var bias, Real eps = Real(1e-5));
// Row-wise softmax; mask (rows x cols, nonzero = keep) may be empty.
Var softmax(Var x, const std::vector<unsigned char>& mask = {});
// Multi-head scaled dot-product attention core on projected inputs:
// q is nq x d, k and v are nk x d, heads split the d columns.
Var attention(Var q, Var k, Var v, int heads, const std::vector<unsigned char>& mask = {});
// Inverted dropout; identity when p == 0.
Var dropout(Var x, Real p, std::mt19937_64& rng);
// Rows of table selected by ids (repeats allowed).
Var gather_rows(Var table, std::span<const int> ids);
// Row i is the mean of table rows groups[i]; empty groups give zero rows.
Var segment_mean(Var table, const std::vector<std::vector<int>>& groups);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var x, int start, int count);
// Mean over rows -> 1 x cols.
Var mean_rows(Var x);
// Sum of the listed entries of a 1 x n row -> 1 x 1.
Var sum_entries(Var x, std::span<const int> cols);
Var pick(Var x, int col);
// -log(x + floor) of a 1 x 1 probability.
Var neg_log(Var p, Real floor = Real(1e-12));
// -log(dist[gold] + 1e-12).
Var cross_entropy(Var dist, int gold);
// Sum of 1 x 1 values.
Var add_n(std::span<const Var> terms);

}  // namespace ag

}  // namespace bfamr

#pragma once

// Smatch: F1 of triple overlap under the best one-to-one variable mapping.

#include <cstdint>
#include <string>
#include <vector>

#include "bfamr/amr.hpp"

namespace bfamr {

struct Triple {
  std::string relation;
  int source = 0;
  // Target variable for relation triples; -1 for instance and attribute
  // triples, whose target is `value`.
  int target = -1;
  std::string value;

  bool operator==(const Triple&) const = default;
};

// Variables are the instance vertices, numbered 0..n-1 in vertex order.
// Instance triples carry the composed concept; the root gets an attribute
// triple (root, "TOP", concept); relation triples run in semantic direction
// with the bare label.
struct TripleSet {
  int variables = 0;
  std::vector<Triple> instances;
  std::vector<Triple> attributes;
  std::vector<Triple> relations;

  int size() const {
    return static_cast<int>(instances.size() + attributes.size() + relations.size());
  }
};

TripleSet graph_to_triples(const AmrGraph& graph);

struct SmatchScore {
  int matched = 0;
  int pred_total = 0;
  int gold_total = 0;

  double precision() const { return pred_total ? double(matched) / pred_total : 0.0; }
  double recall() const { return gold_total ? double(matched) / gold_total : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

// Hill climbing from `restarts` starts: the first is a concept-match
// initialization, the rest are seeded random mappings.
SmatchScore smatch(const AmrGraph& pred, const AmrGraph& gold, int restarts = 4,
                   std::uint64_t seed = 0);

inline constexpr int kExhaustiveLimit = 8;
// Exact optimum over all injective mappings; both graphs must have at most
// kExhaustiveLimit variables.
SmatchScore smatch_exhaustive(const AmrGraph& pred, const AmrGraph& gold);

// Corpus-level score: matched and total counts summed over pairs (parallel
// over pairs, deterministic).
SmatchScore corpus_smatch(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                          int restarts = 4, std::uint64_t seed = 0);

}  // namespace bfamr

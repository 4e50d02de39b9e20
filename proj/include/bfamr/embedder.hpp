#pragma once

// Contextual sub-token embedders standing in for a pretrained encoder.
//
// The stub hashes every sub-token to a fixed Gaussian vector, so it needs no
// data files. FileEmbedder reads precomputed vectors ("subtoken v1 ... vb"
// per line). Neither is ever trained.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bfamr/tensor.hpp"

namespace bfamr {

// Lowercases, splits on spaces and cuts each word into pieces of at most
// three characters; continuation pieces carry a "##" prefix.
// "go back" -> {"go", "bac", "##k"}.
std::vector<std::string> stub_subtokenize(std::string_view unit);

class ContextualEmbedder {
 public:
  virtual ~ContextualEmbedder() = default;

  virtual int dim() const = 0;
  virtual std::vector<std::string> subtokenize(std::string_view unit) const {
    return stub_subtokenize(unit);
  }
  // Context-free vectors, one row per sub-token.
  virtual Tensor encode(const std::vector<std::string>& subtokens) const = 0;

  // Mean of the sub-token vectors of a word or phrase (1 x dim).
  Tensor unit_vector(std::string_view unit) const;
  // Per-token sentence features (m x dim): each sub-token vector gets half of
  // its left neighbour's and a quarter of its right neighbour's, so the
  // features depend on word order; pieces are then averaged per token.
  virtual Tensor encode_sentence(const std::vector<std::string>& tokens) const;
};

class StubEmbedder : public ContextualEmbedder {
 public:
  StubEmbedder(int dim, std::uint64_t seed);

  int dim() const override { return dim_; }
  Tensor encode(const std::vector<std::string>& subtokens) const override;
  std::vector<Real> subtoken_vector(std::string_view subtoken) const;

 private:
  int dim_;
  std::uint64_t seed_;
};

class FileEmbedder : public ContextualEmbedder {
 public:
  explicit FileEmbedder(const std::filesystem::path& path);

  int dim() const override { return dim_; }
  // Unknown sub-tokens map to zero vectors.
  Tensor encode(const std::vector<std::string>& subtokens) const override;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, std::vector<Real>> vectors_;
};

// kind is "stub" or "file"; path is used only for "file".
std::shared_ptr<const ContextualEmbedder> make_embedder(const std::string& kind, int dim,
                                                        std::uint64_t seed,
                                                        const std::filesystem::path& path);

}  // namespace bfamr

#include "bfamr/embedder.hpp"

#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "bfamr/error.hpp"

namespace bfamr {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::vector<std::string> stub_subtokenize(std::string_view unit) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    for (std::size_t i = 0; i < word.size(); i += 3) {
      std::string piece = word.substr(i, 3);
      out.push_back(i == 0 ? piece : "##" + piece);
    }
    word.clear();
  };
  for (char c : unit) {
    if (c == ' ') {
      flush();
    } else {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

Tensor ContextualEmbedder::unit_vector(std::string_view unit) const {
  const auto pieces = subtokenize(unit);
  Tensor out(1, dim());
  if (pieces.empty()) return out;
  const Tensor rows = encode(pieces);
  for (int r = 0; r < rows.rows(); ++r)
    for (int c = 0; c < rows.cols(); ++c) out[c] += rows(r, c);
  const Real inv = Real(1) / static_cast<Real>(rows.rows());
  for (int c = 0; c < out.cols(); ++c) out[c] *= inv;
  return out;
}

Tensor ContextualEmbedder::encode_sentence(const std::vector<std::string>& tokens) const {
  std::vector<std::string> pieces;
  std::vector<int> owner;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto sub = subtokenize(tokens[t]);
    for (auto& s : sub) {
      pieces.push_back(std::move(s));
      owner.push_back(static_cast<int>(t));
    }
  }
  const int b = dim();
  Tensor out(static_cast<int>(tokens.size()), b);
  if (pieces.empty()) return out;
  const Tensor raw = encode(pieces);
  const int n = raw.rows();
  std::vector<int> counts(tokens.size(), 0);
  for (int k = 0; k < n; ++k) {
    auto dst = out.row(owner[static_cast<std::size_t>(k)]);
    for (int c = 0; c < b; ++c) {
      Real v = raw(k, c);
      if (k > 0) v += Real(0.5) * raw(k - 1, c);
      if (k + 1 < n) v += Real(0.25) * raw(k + 1, c);
      dst[static_cast<std::size_t>(c)] += v;
    }
    ++counts[static_cast<std::size_t>(owner[static_cast<std::size_t>(k)])];
  }
  for (int t = 0; t < out.rows(); ++t) {
    if (counts[static_cast<std::size_t>(t)] == 0) continue;
    const Real inv = Real(1) / static_cast<Real>(counts[static_cast<std::size_t>(t)]);
    for (Real& v : out.row(t)) v *= inv;
  }
  return out;
}

StubEmbedder::StubEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 1) throw UserError("contextual dimension must be positive");
}

std::vector<Real> StubEmbedder::subtoken_vector(std::string_view subtoken) const {
  std::mt19937_64 rng(fnv1a(subtoken) ^ (seed_ * 0x9e3779b97f4a7c15ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Real> v(static_cast<std::size_t>(dim_));
  for (auto& x : v) x = static_cast<Real>(normal(rng));
  return v;
}

Tensor StubEmbedder::encode(const std::vector<std::string>& subtokens) const {
  Tensor out(static_cast<int>(subtokens.size()), dim_);
  for (std::size_t i = 0; i < subtokens.size(); ++i) {
    const auto v = subtoken_vector(subtokens[i]);
    std::copy(v.begin(), v.end(), out.row(static_cast<int>(i)).begin());
  }
  return out;
}

FileEmbedder::FileEmbedder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    std::vector<Real> v;
    double x;
    while (fields >> x) v.push_back(static_cast<Real>(x));
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (v.empty() || static_cast<int>(v.size()) != dim_)
      throw UserError(path.string() + ": line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim_) + " values");
    vectors_[key] = std::move(v);
  }
  if (dim_ == 0) throw UserError(path.string() + ": no vectors");
}

Tensor FileEmbedder::encode(const std::vector<std::string>& subtokens) const {
  Tensor out(static_cast<int>(subtokens.size()), dim_);
  for (std::size_t i = 0; i < subtokens.size(); ++i) {
    auto it = vectors_.find(subtokens[i]);
    if (it == vectors_.end()) continue;
    std::copy(it->second.begin(), it->second.end(), out.row(static_cast<int>(i)).begin());
  }
  return out;
}

std::shared_ptr<const ContextualEmbedder> make_embedder(const std::string& kind, int dim,
                                                        std::uint64_t seed,
                                                        const std::filesystem::path& path) {
  if (kind == "stub") return std::make_shared<StubEmbedder>(dim, seed);
  if (kind == "file") {
    auto e = std::make_shared<FileEmbedder>(path);
    if (e->dim() != dim)
      throw UserError("embedding file has dimension " + std::to_string(e->dim()) +
                      " but contextual_dim is " + std::to_string(dim));
    return e;
  }
  throw UserError("unknown embedder kind '" + kind + "'");
}

}  // namespace bfamr

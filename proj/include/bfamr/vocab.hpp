#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bfamr/corpus.hpp"

namespace bfamr {

inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kNoSense = "<no-sense>";
// Content unit of the begin-of-graph vertex and the label of its only edge.
inline constexpr std::string_view kRootSymbol = "<root>";

// Dense string <-> id mapping.
class SymbolTable {
 public:
  SymbolTable() = default;
  explicit SymbolTable(std::vector<std::string> symbols);

  int add(std::string_view s);
  std::optional<int> find(std::string_view s) const;
  // Falls back to the <unk> id; throws if the table has no <unk>.
  int id_or_unk(std::string_view s) const;
  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(symbols_.size()); }
  bool contains(std::string_view s) const { return find(s).has_value(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

struct Vocabulary {
  // Vertex content units (instances and attributes), the output space of the
  // new-content head.
  SymbolTable content;
  // Refinement-row units: tokens, lemmas and content units.
  SymbolTable word;
  SymbolTable sense;
  SymbolTable edge_label;
  SymbolTable pos;
  SymbolTable ner;
  SymbolTable subword;
  std::map<std::string, int> edge_label_frequency;

  int label_frequency(std::string_view label) const;
  int no_sense_id() const { return *sense.find(kNoSense); }
  int root_label_id() const { return *edge_label.find(kRootSymbol); }
};

Vocabulary build_vocab(const std::vector<CorpusExample>& examples, int min_freq = 1);

inline constexpr int kVocabFormatVersion = 1;

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocab(const std::filesystem::path& path);

}  // namespace bfamr

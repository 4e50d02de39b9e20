#include "bfamr/vocab.hpp"

#include <algorithm>
#include <fstream>

#include "bfamr/embedder.hpp"
#include "bfamr/error.hpp"
#include "json.hpp"

namespace bfamr {

SymbolTable::SymbolTable(std::vector<std::string> symbols) {
  for (auto& s : symbols) add(s);
}

int SymbolTable::add(std::string_view s) {
  auto it = ids_.find(std::string(s));
  if (it != ids_.end()) return it->second;
  int id = size();
  symbols_.emplace_back(s);
  ids_.emplace(symbols_.back(), id);
  return id;
}

std::optional<int> SymbolTable::find(std::string_view s) const {
  auto it = ids_.find(std::string(s));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int SymbolTable::id_or_unk(std::string_view s) const {
  if (auto id = find(s)) return *id;
  if (auto unk = find(kUnk)) return *unk;
  throw Error("symbol table has no " + std::string(kUnk) + " entry for '" + std::string(s) + "'");
}

int Vocabulary::label_frequency(std::string_view label) const {
  auto it = edge_label_frequency.find(std::string(label));
  return it == edge_label_frequency.end() ? 0 : it->second;
}

namespace {

using Counts = std::map<std::string, int>;

// Reserved symbols first, then by frequency descending, ties lexicographic.
SymbolTable ranked(std::vector<std::string> reserved, const Counts& counts, int min_freq) {
  std::vector<std::pair<std::string, int>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  SymbolTable t(std::move(reserved));
  for (const auto& [s, c] : items)
    if (c >= min_freq) t.add(s);
  return t;
}

}  // namespace

Vocabulary build_vocab(const std::vector<CorpusExample>& examples, int min_freq) {
  if (examples.empty()) throw UserError("cannot build a vocabulary from an empty corpus");
  Counts content, word, sense, label, pos, ner, subword;
  for (const auto& ex : examples) {
    for (const auto& t : ex.sentence.tokens) {
      ++word[t.token];
      ++word[t.lemma];
      ++pos[t.pos];
      ++ner[t.ner];
      for (auto& s : stub_subtokenize(t.token)) ++subword[s];
    }
    for (const auto& v : ex.graph.vertices()) {
      std::string unit = v.content_unit();
      ++content[unit];
      ++word[unit];
      if (v.is_instance()) ++sense[v.sense.value_or(std::string(kNoSense))];
      for (auto& s : stub_subtokenize(unit)) ++subword[s];
    }
    for (const auto& e : ex.graph.edges()) ++label[e.label];
  }
  Vocabulary v;
  const std::string unk(kUnk);
  v.content = ranked({unk}, content, min_freq);
  v.word = ranked({unk, std::string(kRootSymbol)}, word, min_freq);
  sense.erase(std::string(kNoSense));
  v.sense = ranked({std::string(kNoSense)}, sense, 1);
  v.edge_label = ranked({unk, std::string(kRootSymbol)}, label, 1);
  v.pos = ranked({unk}, pos, 1);
  v.ner = ranked({unk}, ner, 1);
  v.subword = ranked({}, subword, 1);
  v.edge_label_frequency = label;
  return v;
}

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format_version"] = kVocabFormatVersion;
  j["content"] = vocab.content.symbols();
  j["word"] = vocab.word.symbols();
  j["sense"] = vocab.sense.symbols();
  j["edge_label"] = vocab.edge_label.symbols();
  j["pos"] = vocab.pos.symbols();
  j["ner"] = vocab.ner.symbols();
  j["subword"] = vocab.subword.symbols();
  j["edge_label_frequency"] = vocab.edge_label_frequency;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing vocabulary " + path.string());
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UserError("malformed vocabulary " + path.string() + ": " + e.what());
  }
  if (j.value("format_version", 0) != kVocabFormatVersion)
    throw UserError("unsupported vocabulary format version in " + path.string());
  auto table = [&](const char* key) {
    return SymbolTable(j.at(key).get<std::vector<std::string>>());
  };
  Vocabulary v;
  try {
    v.content = table("content");
    v.word = table("word");
    v.sense = table("sense");
    v.edge_label = table("edge_label");
    v.pos = table("pos");
    v.ner = table("ner");
    v.subword = table("subword");
    v.edge_label_frequency = j.at("edge_label_frequency").get<std::map<std::string, int>>();
  } catch (const nlohmann::json::exception& e) {
    throw UserError("malformed vocabulary " + path.string() + ": " + e.what());
  }
  return v;
}

}  // namespace bfamr

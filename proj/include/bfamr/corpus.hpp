#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bfamr/amr.hpp"

namespace bfamr {

struct AnnotatedToken {
  std::string token;
  std::string lemma;
  std::string pos;
  std::string ner;
};

struct AnnotatedSentence {
  std::vector<AnnotatedToken> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  const AnnotatedToken& operator[](int i) const { return tokens[static_cast<std::size_t>(i)]; }
};

struct CorpusExample {
  AnnotatedSentence sentence;
  AmrGraph graph;
};

// One JSON-lines record: {"tokens": [...], "lemmas": [...], "pos": [...],
// "ner": [...], "amr": "(...)"}. When require_amr is false a missing "amr"
// field is allowed and the graph is left empty.
CorpusExample parse_corpus_record(std::string_view line, bool require_amr = true);

// Throws UserError("line N: ...") for malformed records, IoError when the
// file cannot be opened. Blank lines are skipped.
std::vector<CorpusExample> load_corpus(const std::filesystem::path& path);

// Whitespace/punctuation tokenization with lowercase suffix-stripped lemmas;
// pos "X", ner "O".
AnnotatedSentence naive_annotate(std::string_view raw);

}  // namespace bfamr

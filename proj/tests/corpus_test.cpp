#include <filesystem>
#include <fstream>

#include "bfamr/corpus.hpp"
#include "bfamr/error.hpp"
#include "bfamr/vocab.hpp"
#include "doctest.h"

using namespace bfamr;
namespace fs = std::filesystem;

namespace {

const char* kRecord =
    R"j({"tokens":["The","boy","sleeps"],"lemmas":["the","boy","sleep"],)j"
    R"j("pos":["DT","NN","VBZ"],"ner":["O","O","O"],"amr":"(s / sleep-01 :ARG0 (b / boy))"})j";

fs::path temp_file(const std::string& name, const std::string& body) {
  fs::path p = fs::temp_directory_path() / ("bfamr_corpus_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("parse_corpus_record reads an annotated sentence and its graph") {
  CorpusExample ex = parse_corpus_record(kRecord);
  REQUIRE(ex.sentence.size() == 3);
  CHECK(ex.sentence[2].token == "sleeps");
  CHECK(ex.sentence[2].lemma == "sleep");
  CHECK(ex.sentence[0].pos == "DT");
  CHECK(ex.graph.size() == 2);
  CHECK(ex.graph.vertex(0).sense == "01");
}

TEST_CASE("parse_corpus_record rejects malformed records") {
  CHECK_THROWS_AS(parse_corpus_record("{not json"), UserError);
  CHECK_THROWS_AS(parse_corpus_record("[1,2]"), UserError);
  CHECK_THROWS_AS(parse_corpus_record(R"j({"tokens":["a"],"lemmas":["a","b"],"pos":["X"],"ner":["O"],"amr":"(a / a)"})j"),
                  UserError);
  CHECK_THROWS_AS(parse_corpus_record(R"j({"tokens":["a"],"lemmas":["a"],"pos":["X"],"ner":["O"]})j"),
                  UserError);
  CHECK_THROWS_AS(parse_corpus_record(R"j({"tokens":[],"lemmas":[],"pos":[],"ner":[],"amr":"(a / a)"})j"),
                  UserError);
  CHECK_THROWS_AS(parse_corpus_record(R"j({"tokens":["a"],"lemmas":["a"],"pos":["X"],"ner":["O"],"amr":"(a / "})j"),
                  ParseError);
  CorpusExample no_graph =
      parse_corpus_record(R"j({"tokens":["a"],"lemmas":["a"],"pos":["X"],"ner":["O"]})j", false);
  CHECK(no_graph.graph.size() == 0);
}

TEST_CASE("load_corpus reports line numbers and missing files") {
  const fs::path good = temp_file("good.jsonl", std::string(kRecord) + "\n\n" + kRecord + "\n");
  CHECK(load_corpus(good).size() == 2);
  const fs::path bad = temp_file("bad.jsonl", std::string(kRecord) + "\n{\n");
  try {
    load_corpus(bad);
    FAIL("expected an error");
  } catch (const UserError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}

TEST_CASE("bundled toy corpus") {
  const auto corpus = load_corpus(fs::path(BFAMR_DATA_DIR) / "toy.jsonl");
  CHECK(corpus.size() == 50);
  int reentrant = 0, attributes = 0, multiword = 0, reversed = 0;
  for (const auto& ex : corpus) {
    ex.graph.validate();
    std::vector<int> parents(static_cast<std::size_t>(ex.graph.size()));
    for (const auto& e : ex.graph.edges()) {
      ++parents[static_cast<std::size_t>(e.dst)];
      reversed += e.reverse;
    }
    for (int v = 0; v < ex.graph.size(); ++v) {
      reentrant += parents[static_cast<std::size_t>(v)] > 1;
      attributes += !ex.graph.vertex(v).is_instance();
      multiword += ex.graph.vertex(v).content.size() > 1;
    }
  }
  CHECK(reentrant > 0);
  CHECK(attributes > 0);
  CHECK(multiword > 0);
  CHECK(reversed > 0);
}

TEST_CASE("naive_annotate splits punctuation and lowercases lemmas") {
  AnnotatedSentence s = naive_annotate("The boy sleeps.");
  REQUIRE(s.size() == 4);
  CHECK(s[0].token == "The");
  CHECK(s[0].lemma == "the");
  CHECK(s[3].token == ".");
  CHECK(s[1].pos == "X");
  CHECK(s[1].ner == "O");
  CHECK_THROWS_AS(naive_annotate("   "), UserError);
}

TEST_CASE("vocabulary reserves special entries and round-trips through JSON") {
  const auto corpus = load_corpus(fs::path(BFAMR_DATA_DIR) / "toy.jsonl");
  const Vocabulary v = build_vocab(corpus);
  CHECK(v.content.symbol(0) == kUnk);
  CHECK(v.word.symbol(0) == kUnk);
  CHECK(v.word.symbol(1) == kRootSymbol);
  CHECK(v.sense.symbol(v.no_sense_id()) == kNoSense);
  CHECK(v.edge_label.symbol(v.root_label_id()) == kRootSymbol);
  CHECK(v.content.contains("give up"));
  CHECK(v.content.contains("-"));
  CHECK(v.sense.contains("01"));
  CHECK(v.label_frequency("ARG0") > v.label_frequency("day"));
  CHECK(v.content.id_or_unk("never-seen") == 0);

  const fs::path p = fs::temp_directory_path() / "bfamr_vocab_roundtrip.json";
  save_vocab(v, p);
  const Vocabulary w = load_vocab(p);
  CHECK(w.content.symbols() == v.content.symbols());
  CHECK(w.word.symbols() == v.word.symbols());
  CHECK(w.sense.symbols() == v.sense.symbols());
  CHECK(w.edge_label.symbols() == v.edge_label.symbols());
  CHECK(w.subword.symbols() == v.subword.symbols());
  CHECK(w.edge_label_frequency == v.edge_label_frequency);
  CHECK_THROWS_AS(load_vocab("/nonexistent/vocab.json"), IoError);
  CHECK_THROWS_AS(build_vocab({}), UserError);
}

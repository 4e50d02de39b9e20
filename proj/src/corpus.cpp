#include "bfamr/corpus.hpp"

#include <cctype>
#include <fstream>

#include "bfamr/error.hpp"
#include "bfamr/penman.hpp"
#include "json.hpp"

namespace bfamr {

namespace {

std::vector<std::string> string_array(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key)) throw UserError(std::string("missing field \"") + key + "\"");
  const auto& arr = obj.at(key);
  if (!arr.is_array()) throw UserError(std::string("field \"") + key + "\" is not an array");
  std::vector<std::string> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw UserError(std::string("field \"") + key + "\" holds a non-string");
    out.push_back(v.get<std::string>());
    if (out.back().empty()) throw UserError(std::string("field \"") + key + "\" holds an empty string");
  }
  return out;
}

}  // namespace

CorpusExample parse_corpus_record(std::string_view line, bool require_amr) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw UserError(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw UserError("record is not a JSON object");
  auto tokens = string_array(obj, "tokens");
  auto lemmas = string_array(obj, "lemmas");
  auto pos = string_array(obj, "pos");
  auto ner = string_array(obj, "ner");
  if (tokens.empty()) throw UserError("record has no tokens");
  if (lemmas.size() != tokens.size() || pos.size() != tokens.size() || ner.size() != tokens.size())
    throw UserError("tokens/lemmas/pos/ner arrays differ in length");
  CorpusExample ex;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    ex.sentence.tokens.push_back({tokens[i], lemmas[i], pos[i], ner[i]});
  if (obj.contains("amr")) {
    if (!obj.at("amr").is_string()) throw UserError("field \"amr\" is not a string");
    ex.graph = parse_penman(obj.at("amr").get<std::string>());
  } else if (require_amr) {
    throw UserError("missing field \"amr\"");
  }
  return ex;
}

std::vector<CorpusExample> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  std::vector<CorpusExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_corpus_record(line));
    } catch (const UserError& e) {
      throw UserError(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) && c != '-' && c != '\'';
}

std::string naive_lemma(const std::string& token) {
  std::string w;
  for (char c : token) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  auto strip = [&](std::string_view suffix, std::size_t min_len) {
    if (w.size() >= min_len && w.ends_with(suffix)) {
      w.resize(w.size() - suffix.size());
      return true;
    }
    return false;
  };
  if (strip("ing", 5) || strip("ed", 4) || strip("es", 4)) return w;
  if (!w.ends_with("ss")) strip("s", 3);
  return w;
}

}  // namespace

AnnotatedSentence naive_annotate(std::string_view raw) {
  AnnotatedSentence s;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    s.tokens.push_back({cur, naive_lemma(cur), "X", "O"});
    cur.clear();
  };
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (is_punct(c)) {
      flush();
      cur.push_back(c);
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  if (s.tokens.empty()) throw UserError("cannot annotate an empty sentence");
  return s;
}

}  // namespace bfamr

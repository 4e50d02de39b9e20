#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bfamr/checkpoint.hpp"
#include "bfamr/config.hpp"
#include "bfamr/corpus.hpp"
#include "bfamr/decode.hpp"
#include "bfamr/error.hpp"
#include "bfamr/oracle.hpp"
#include "bfamr/penman.hpp"
#include "bfamr/smatch.hpp"
#include "bfamr/train.hpp"
#include "bfamr/vocab.hpp"

namespace fs = std::filesystem;
using namespace bfamr;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::vector<AmrGraph> read_penman_file(const fs::path& path) {
  std::vector<AmrGraph> graphs;
  for (const auto& block : split_penman_blocks(read_file(path))) graphs.push_back(parse_penman(block));
  return graphs;
}

// JSON-lines records are used as annotated; any other file is one raw
// sentence per line.
std::vector<AnnotatedSentence> read_sentences(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<AnnotatedSentence> out;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.front() == '{') {
      try {
        out.push_back(parse_corpus_record(line, false).sentence);
      } catch (const UserError& e) {
        throw UserError("line " + std::to_string(lineno) + ": " + e.what());
      }
    } else {
      out.push_back(naive_annotate(line));
    }
  }
  return out;
}

int cmd_preprocess(const fs::path& corpus_path, const fs::path& vocab_path, int min_freq) {
  const auto corpus = load_corpus(corpus_path);
  const Vocabulary vocab = build_vocab(corpus, min_freq);
  save_vocab(vocab, vocab_path);
  long tokens = 0, vertices = 0, edges = 0, attributes = 0, reentrant = 0;
  for (const auto& ex : corpus) {
    tokens += ex.sentence.size();
    vertices += ex.graph.size();
    edges += static_cast<long>(ex.graph.edges().size());
    std::vector<int> parents(static_cast<std::size_t>(ex.graph.size()), 0);
    for (const auto& e : ex.graph.edges()) ++parents[static_cast<std::size_t>(e.dst)];
    for (int v = 0; v < ex.graph.size(); ++v) {
      if (!ex.graph.vertex(v).is_instance()) ++attributes;
      if (parents[static_cast<std::size_t>(v)] > 1) ++reentrant;
    }
  }
  std::cout << "examples " << corpus.size() << "\n"
            << "tokens " << tokens << "\n"
            << "vertices " << vertices << " (attributes " << attributes << ")\n"
            << "edges " << edges << "\n"
            << "reentrant vertices " << reentrant << "\n"
            << "vocab content " << vocab.content.size() << ", word " << vocab.word.size()
            << ", sense " << vocab.sense.size() << ", edge_label " << vocab.edge_label.size()
            << ", pos " << vocab.pos.size() << ", ner " << vocab.ner.size() << "\n"
            << "wrote " << vocab_path.string() << "\n";
  return 0;
}

int cmd_oracle_check(const fs::path& corpus_path, std::uint64_t seed, const fs::path& trace_path) {
  const auto corpus = load_corpus(corpus_path);
  const Vocabulary vocab = build_vocab(corpus);
  std::ofstream trace;
  if (!trace_path.empty()) trace = open_output(trace_path);
  long sequences = 0, failures = 0, bfs = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (OrderMode mode : {OrderMode::Deterministic, OrderMode::Random}) {
      const auto steps = linearize(corpus[i].graph, vocab, mode, seed + i);
      ++sequences;
      bool ok = false;
      try {
        ok = is_isomorphic(reconstruct(actions_of(steps)), corpus[i].graph);
      } catch (const Error& e) {
        std::cerr << "example " << i + 1 << ": " << e.what() << "\n";
      }
      if (!ok) {
        ++failures;
        std::cerr << "example " << i + 1 << ": round trip failed\n";
      }
      const auto tr = trace_of(steps);
      if (is_breadth_first(tr)) ++bfs;
      if (trace) {
        for (const auto& step : tr) {
          auto j = nlohmann::json::parse(trace_step_to_json(step));
          j["example"] = i;
          j["mode"] = mode == OrderMode::Deterministic ? "deterministic" : "random";
          trace << j.dump() << "\n";
        }
      }
    }
  }
  std::cout << corpus.size() << " graphs, " << sequences << " sequences\n";
  std::cout << failures << " failures, ";
  if (bfs == sequences) std::cout << "100% breadth-first\n";
  else std::cout << (100.0 * static_cast<double>(bfs) / static_cast<double>(sequences)) << "% breadth-first\n";
  return failures == 0 && bfs == sequences ? 0 : 1;
}

int cmd_train(const fs::path& config_path, const CLI::Option* seed_opt, std::uint64_t seed) {
  RunConfig config = load_run_config(config_path, process_env_overrides());
  if (seed_opt->count() > 0) config.train.seed = seed;
  config.validate();
  config.validate_paths();

  const auto train_set = load_corpus(config.train_corpus);
  std::vector<CorpusExample> dev_set;
  if (!config.dev_corpus.empty()) dev_set = load_corpus(config.dev_corpus);
  Vocabulary vocab = config.vocab.empty() ? build_vocab(train_set, config.min_freq)
                                          : load_vocab(config.vocab);
  save_vocab(vocab, config.out_dir / "vocab.json");
  write_kv_file(config.out_dir / "run.txt", config.to_kv());

  Model model(config.model, std::move(vocab), config.train.seed);
  TrainConfig tc = config.train;
  tc.checkpoint_dir = config.checkpoint_dir();
  tc.metrics_path = config.metrics_path();
  std::cout << "parameters " << model.params().scalar_count() << ", examples "
            << train_set.size() << "\n";
  const auto result = train(model, train_set, dev_set, tc, [](const EpochReport& r) {
    std::printf("epoch %d step %d loss %.6f", r.epoch, r.step, r.mean_loss);
    if (r.dev_smatch) std::printf(" dev_smatch %.4f", *r.dev_smatch);
    std::printf(" (%.1fs)\n", r.seconds);
    std::fflush(stdout);
  });
  if (result.best_dev_smatch) std::printf("best dev smatch %.4f\n", *result.best_dev_smatch);
  std::cout << "checkpoints in " << tc.checkpoint_dir.string() << "\n";
  return 0;
}

int cmd_parse(const fs::path& checkpoint, const fs::path& input, const fs::path& output,
              const fs::path& trace_path, const DecodeOptions& options) {
  const auto model = Model::load(checkpoint);
  const auto sentences = read_sentences(input);
  std::ofstream out_file, trace;
  if (!output.empty()) out_file = open_output(output);
  if (!trace_path.empty()) trace = open_output(trace_path);
  std::ostream& out = output.empty() ? std::cout : out_file;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const ParseResult r = parse(*model, sentences[i], options);
    out << write_penman(r.graph) << "\n\n";
    if (trace) {
      for (const auto& step : r.best.trace) {
        auto j = nlohmann::json::parse(trace_step_to_json(step));
        j["sentence"] = i;
        trace << j.dump() << "\n";
      }
    }
  }
  return 0;
}

int cmd_score(const fs::path& pred_path, const fs::path& gold_path, int restarts,
              std::uint64_t seed) {
  const auto pred = read_penman_file(pred_path);
  const auto gold = read_penman_file(gold_path);
  if (pred.size() != gold.size())
    throw UserError("graph count mismatch: " + std::to_string(pred.size()) + " predicted vs " +
                    std::to_string(gold.size()) + " gold");
  const SmatchScore s = corpus_smatch(pred, gold, restarts, seed);
  std::printf("Precision: %.4f\nRecall: %.4f\nF1: %.4f\n", s.precision(), s.recall(), s.f1());
  return 0;
}

int cmd_inspect(const fs::path& checkpoint) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  for (const auto& [k, v] : ck.config) std::cout << k << " = " << v << "\n";
  std::cout << "\n";
  long total = 0;
  for (const auto& t : ck.tensors) {
    total += t.value.size();
    std::printf("%-40s %-14s norm %.6g\n", t.name.c_str(), t.value.shape_string().c_str(),
                std::sqrt(static_cast<double>(t.value.squared_norm())));
  }
  std::cout << ck.tensors.size() << " tensors, " << total << " scalars\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Breadth-first AMR parser"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int beam = 8, restarts = 4, min_freq = 1;
  bool no_length_norm = false;
  std::string corpus, vocab_out, config, checkpoint, input, output, trace, pred, gold;

  auto* pre = app.add_subcommand("preprocess", "Build a vocabulary and report corpus statistics");
  pre->add_option("corpus", corpus, "JSON-lines corpus")->required();
  pre->add_option("vocab_out", vocab_out, "Vocabulary output path")->required();
  pre->add_option("--min-freq", min_freq, "Minimum count for vocabulary entries");

  auto* oc = app.add_subcommand("oracle-check", "Round-trip every gold graph through the oracle");
  oc->add_option("corpus", corpus, "JSON-lines corpus")->required();
  oc->add_option("--seed", seed, "Seed for random child orders");
  oc->add_option("--trace", trace, "Write action sequences as JSON lines");

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", config, "Key-value run configuration")->required();
  auto* train_seed = tr->add_option("--seed", seed, "Override the configured seed");

  auto* pa = app.add_subcommand("parse", "Parse sentences into PENMAN");
  pa->add_option("checkpoint", checkpoint, "Checkpoint directory")->required();
  pa->add_option("input", input, "Sentences, raw lines or JSON-lines")->required();
  pa->add_option("-o,--output", output, "Output file (default stdout)");
  pa->add_option("--beam", beam, "Beam width")->check(CLI::PositiveNumber);
  pa->add_option("--trace", trace, "Write decoded actions as JSON lines");
  pa->add_flag("--no-length-norm", no_length_norm, "Rank finished hypotheses by raw log-probability");
  pa->add_option("--seed", seed, "Accepted for uniformity; decoding is deterministic");

  auto* sc = app.add_subcommand("score", "Corpus Smatch of predicted against gold PENMAN");
  sc->add_option("pred", pred, "Predicted PENMAN file")->required();
  sc->add_option("gold", gold, "Gold PENMAN file")->required();
  sc->add_option("--restarts", restarts, "Hill-climbing restarts")->check(CLI::PositiveNumber);
  sc->add_option("--seed", seed, "Seed for random restarts");

  auto* in = app.add_subcommand("inspect", "List checkpoint parameters");
  in->add_option("checkpoint", checkpoint, "Checkpoint directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*pre) return cmd_preprocess(corpus, vocab_out, min_freq);
    if (*oc) return cmd_oracle_check(corpus, seed, trace);
    if (*tr) return cmd_train(config, train_seed, seed);
    if (*pa) {
      DecodeOptions options;
      options.beam = beam;
      options.length_norm = !no_length_norm;
      return cmd_parse(checkpoint, input, output, trace, options);
    }
    if (*sc) return cmd_score(pred, gold, restarts, seed);
    if (*in) return cmd_inspect(checkpoint);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "../test_graphs.hpp"
#include "bfamr/corpus.hpp"
#include "bfamr/decode.hpp"
#include "bfamr/embedder.hpp"
#include "bfamr/model.hpp"
#include "bfamr/oracle.hpp"
#include "bfamr/penman.hpp"
#include "bfamr/smatch.hpp"
#include "bfamr/train.hpp"
#include "bfamr/vocab.hpp"

using namespace bfamr;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %-22s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Reduced configuration for the overfit, ablation and decoding checks.
ModelConfig reduced_config() {
  ModelConfig c;
  c.graph_hidden = 64;
  c.refinement_emb = 32;
  c.sent_layers = c.graph_layers = c.interact_layers = 2;
  c.heads = 4;
  c.ffn_hidden = 128;
  c.contextual_dim = 64;
  c.dropout = 0.0;
  return c;
}

TrainConfig overfit_train_config() {
  TrainConfig t;
  t.batch_size = 8;
  t.epochs = 100;
  t.warmup = 100;
  t.lr_scale = 0.1;
  t.seed = 1;
  t.eval_every = 0;
  return t;
}

const std::vector<CorpusExample>& toy() {
  static const auto corpus = load_corpus(std::string(BFAMR_DATA_DIR) + "/toy.jsonl");
  return corpus;
}

std::vector<AmrGraph> toy_graphs() {
  std::vector<AmrGraph> g;
  for (const auto& ex : toy()) g.push_back(ex.graph);
  return g;
}

bool has_reentrancy(const AmrGraph& g) {
  std::vector<int> parents(static_cast<std::size_t>(g.size()));
  for (const auto& e : g.edges()) ++parents[static_cast<std::size_t>(e.reverse ? e.src : e.dst)];
  return std::any_of(parents.begin(), parents.end(), [](int p) { return p > 1; });
}

void oracle_round_trip() {
  const auto start = Clock::now();
  const Vocabulary vocab = build_vocab(toy());
  std::vector<AmrGraph> graphs = toy_graphs();
  const std::size_t n_toy = graphs.size();
  std::mt19937_64 rng(20240611);
  int reentrant = 0, with_attributes = 0, max_vertices = 0;
  for (int i = 0; i < 1000; ++i) {
    AmrGraph g = testdata::random_graph(rng, 20, 0.25, 2);
    reentrant += has_reentrancy(g);
    with_attributes += g.instance_count() < g.size();
    max_vertices = std::max(max_vertices, g.size());
    graphs.push_back(std::move(g));
  }
  long checked = 0, failed = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    for (OrderMode mode : {OrderMode::Deterministic, OrderMode::Random})
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ++checked;
        try {
          const auto steps = linearize(graphs[i], vocab, mode, seed * 7919 + i);
          failed += !is_isomorphic(reconstruct(actions_of(steps)), graphs[i]);
        } catch (const std::exception&) {
          ++failed;
        }
      }
  const double secs = seconds_since(start);
  const double reentrancy_rate = reentrant / 1000.0;
  const bool pass = failed == 0 && reentrancy_rate >= 0.2 && with_attributes > 0 &&
                    max_vertices <= 20 && secs < 30.0;
  report("oracle-round-trip", pass,
         std::to_string(n_toy) + " toy + 1000 random graphs, " + std::to_string(checked) +
             " sequences, " + std::to_string(failed) + " failures, reentrancy " +
             fmt("%.0f%%, %.1fs", 100 * reentrancy_rate, secs));
}

void action_count_identity() {
  const Vocabulary vocab = build_vocab(toy());
  int bad = 0;
  for (const auto& ex : toy()) {
    for (OrderMode mode : {OrderMode::Deterministic, OrderMode::Random}) {
      const auto steps = linearize(ex.graph, vocab, mode, 3);
      int stops = 0;
      for (const auto& s : steps) stops += s.gold.kind == ActionKind::NoMoreChildren;
      const int children = static_cast<int>(steps.size()) - stops;
      // One child action per gold edge plus the root attachment.
      bad += children != static_cast<int>(ex.graph.edges().size()) + 1;
      bad += stops != ex.graph.instance_count() + 1;
    }
  }
  report("action-count-identity", bad == 0,
         std::to_string(toy().size()) + " graphs, " + std::to_string(bad) + " mismatches");
}

void smatch_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(99);
  int disagreements = 0, pairs = 0, max_vars = 0;
  while (pairs < 100) {
    const AmrGraph a = testdata::random_graph(rng, 6, 0.3);
    const AmrGraph b = pairs % 2 == 0 ? testdata::random_graph(rng, 6, 0.3)
                                      : parse_penman(write_penman(a));
    if (graph_to_triples(a).variables > 6 || graph_to_triples(b).variables > 6) continue;
    max_vars = std::max({max_vars, graph_to_triples(a).variables, graph_to_triples(b).variables});
    disagreements += smatch(a, b, 4, static_cast<std::uint64_t>(pairs)).f1() != smatch_exhaustive(a, b).f1();
    ++pairs;
  }
  int self_fail = 0;
  for (const auto& g : toy_graphs()) self_fail += smatch(g, g).f1() != 1.0;
  report("smatch-correctness", disagreements == 0 && self_fail == 0,
         std::to_string(pairs) + " random pairs (<= " + std::to_string(max_vars) + " variables), " +
             std::to_string(disagreements) + " disagreements; " + std::to_string(self_fail) +
             " toy self-scores below 1" + fmt(", %.1fs", seconds_since(start)));
}

// Every sub-token listed twice.
class DuplicatingEmbedder : public StubEmbedder {
 public:
  using StubEmbedder::StubEmbedder;
  std::vector<std::string> subtokenize(std::string_view unit) const override {
    auto p = StubEmbedder::subtokenize(unit);
    auto twice = p;
    twice.insert(twice.end(), p.begin(), p.end());
    return twice;
  }
};

void word_embedding_properties() {
  const ModelConfig c = reduced_config();
  const Vocabulary vocab = build_vocab(toy());
  Model plain(c, vocab, 5, std::make_shared<StubEmbedder>(c.contextual_dim, 17));
  Model doubled(c, vocab, 5, std::make_shared<DuplicatingEmbedder>(c.contextual_dim, 17));
  Model other(c, vocab, 5, std::make_shared<StubEmbedder>(c.contextual_dim, 18));
  const AnnotatedSentence s = toy()[0].sentence;
  std::vector<std::string> units;
  for (const auto& t : s.tokens) units.push_back(t.token);
  units.insert(units.end(), {"give up", "date entity", "never-seen"});

  double dup_diff = 0;
  {
    Tape t1(false), t2(false);
    ForwardPass p1(plain, t1, s), p2(doubled, t2, s);
    for (const auto& u : units) {
      const Tensor a = p1.bert_based_embed(u).value(), b = p2.bert_based_embed(u).value();
      for (int i = 0; i < a.size(); ++i) dup_diff = std::max(dup_diff, std::abs(double(a[i] - b[i])));
    }
  }
  plain.params().get("embed.bert_proj.W").value.fill(0);
  other.params().get("embed.bert_proj.W").value.fill(0);
  double zero_diff = 0;
  {
    Tape t1(false), t2(false);
    ForwardPass p1(plain, t1, s), p2(other, t2, s);
    for (const auto& u : units) {
      const Tensor a = p1.bert_based_embed(u).value(), b = p2.bert_based_embed(u).value();
      for (int i = 0; i < a.size(); ++i) zero_diff = std::max(zero_diff, std::abs(double(a[i] - b[i])));
    }
  }
  report("word-embedding", dup_diff <= 1e-12 && zero_diff == 0.0,
         fmt("duplicated sub-tokens max diff %.2g; zero projection, different embedders max diff %.2g",
             dup_diff, zero_diff));
}

void gradient_correctness() {
  const auto start = Clock::now();
  const AnnotatedSentence s = {
      {{"boy", "boy", "NN", "O"}, {"wants", "want", "VBZ", "O"}, {"go", "go", "VB", "O"}}};
  const AmrGraph g =
      parse_penman("(b / boy :ARG0-of (w / want-01 :ARG1 (g / go-02 :ARG0 b :polarity -)))");
  const Vocabulary vocab = build_vocab(toy());
  const auto steps_for = [&](const Model& m) {
    return linearize(g, m.vocab(), OrderMode::Deterministic);
  };
  // Every head must carry loss: status, existing, instance content and
  // sense, attribute content, edge label and reverse flag.
  bool connect = false, attribute = false, reverse = false, instance = false;
  for (const auto& r : linearize(g, vocab, OrderMode::Deterministic)) {
    connect |= r.gold.kind == ActionKind::ConnectExisting;
    attribute |= r.gold.kind == ActionKind::NewAttribute;
    instance |= r.gold.kind == ActionKind::NewInstance && r.gold.sense.has_value();
    reverse |= r.gold.reverse;
  }

  // Small model: every parameter entry. Reduced model: sampled entries.
  ModelConfig small;
  small.graph_hidden = 8;
  small.refinement_emb = 6;
  small.contextual_dim = 4;
  small.sent_layers = small.graph_layers = small.interact_layers = 2;
  small.ffn_hidden = 12;
  small.heads = 2;
  small.dropout = 0.0;
  double worst = 0;
  int checked = 0;
  std::string worst_entry;
  for (int variant = 0; variant < 2; ++variant) {
    Model model(variant == 0 ? small : reduced_config(), vocab, 31);
    const auto steps = steps_for(model);
    std::vector<Parameter*> params;
    for (auto& p : model.params().all()) params.push_back(&p);
    const GradCheckReport r = grad_check(
        [&](Tape& tape) { return sequence_loss(model, tape, s, steps).loss; }, params, 1e-5,
        variant == 0 ? 0 : 6, 5);
    checked += r.checked;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_entry = r.worst_entry;
    }
  }
  const double secs = seconds_since(start);
  const bool covered = connect && attribute && reverse && instance;
  report("gradient-check", covered && worst <= 1e-4 && secs < 300,
         std::to_string(checked) + " entries, max relative error " + fmt("%.2e", worst) + " at " +
             worst_entry + (covered ? "" : ", some head uncovered") + fmt(", %.1fs", secs));
}

std::unique_ptr<Model> overfit() {
  const auto start = Clock::now();
  auto model = std::make_unique<Model>(reduced_config(), build_vocab(toy()), 1);
  TrainConfig t = overfit_train_config();
  t.eval_every = 10;
  t.dev_beam = 1;
  std::string progress;
  const TrainResult r = train(*model, toy(), toy(), t, [&](const EpochReport& e) {
    if (e.dev_smatch) progress += fmt(" %.0f:%.3f", e.epoch, *e.dev_smatch);
  });
  const double final_f1 = evaluate(*model, toy(), DecodeOptions{}).f1();
  const double secs = seconds_since(start);
  report("overfit-toy", final_f1 >= 0.95 && secs < 900,
         fmt("train Smatch %.4f after %.0f epochs (beam 8), loss %.3f -> %.3f", final_f1,
             t.epochs, r.epoch_losses.front(), r.epoch_losses.back()) +
             fmt(", %.0fs; greedy by epoch:", secs) + progress);
  return model;
}

void breadth_first_decoding(const Model& trained) {
  const auto start = Clock::now();
  const Model untrained(reduced_config(), build_vocab(toy()), 2);
  int parses = 0, violations = 0, over_budget = 0;
  for (const Model* model : {&untrained, &trained})
    for (int beam : {1, 4, 8})
      for (std::size_t i = 0; i < toy().size(); i += 1) {
        if (model == &untrained && i % 2 == 1) continue;
        DecodeOptions o;
        o.beam = beam;
        const auto& s = toy()[i].sentence;
        const ParseResult r = parse(*model, s, o);
        ++parses;
        violations += !is_breadth_first(r.best.trace);
        over_budget += static_cast<int>(r.best.trace.size()) > default_max_actions(s.size());
      }
  const double secs = seconds_since(start);
  report("breadth-first-decoding", parses >= 200 && violations == 0 && over_budget == 0 && secs < 120,
         std::to_string(parses) + " parses (beams 1, 4, 8; untrained and trained), " +
             std::to_string(violations) + " order violations, " + std::to_string(over_budget) +
             fmt(" over budget, %.1fs", secs));
}

void edge_ablation() {
  const auto start = Clock::now();
  std::vector<CorpusExample> data(toy().begin(), toy().begin() + 20);
  TrainConfig t = overfit_train_config();
  t.epochs = 3;
  std::vector<std::vector<double>> trajectories;
  int parsed = 0;
  for (bool use_edges : {true, false}) {
    ModelConfig c = reduced_config();
    c.use_edges = use_edges;
    Model model(c, build_vocab(toy()), 3);
    trajectories.push_back(train(model, data, {}, t).epoch_losses);
    DecodeOptions o;
    o.beam = 2;
    for (std::size_t i = 0; i < 3; ++i) parsed += parse(model, data[i].sentence, o).graph.size() > 0;
  }
  const bool differ = trajectories[0] != trajectories[1];
  report("edge-ablation", differ && parsed == 6,
         fmt("final loss with edges %.4f, without %.4f", trajectories[0].back(), trajectories[1].back()) +
             (differ ? ", trajectories differ" : ", trajectories identical") +
             fmt(", %.0f/6 parses, %.1fs", parsed, seconds_since(start)));
}

}  // namespace

int main() {
  oracle_round_trip();
  action_count_identity();
  smatch_correctness();
  word_embedding_properties();
  gradient_correctness();
  edge_ablation();
  const auto trained = overfit();
  breadth_first_decoding(*trained);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

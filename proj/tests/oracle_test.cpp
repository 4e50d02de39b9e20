#include <algorithm>
#include <random>

#include "bfamr/corpus.hpp"
#include "bfamr/error.hpp"
#include "bfamr/oracle.hpp"
#include "bfamr/penman.hpp"
#include "bfamr/vocab.hpp"
#include "doctest.h"
#include "test_graphs.hpp"

using namespace bfamr;

namespace {

const std::map<std::string, int> kFreq = {{"ARG0", 3}, {"ARG1", 2}, {"degree", 1}, {"ARG4", 1}};

// Hand-derived breadth-first sequence for the reentrant want/boy/go graph.
std::vector<TraceStep> fig1_expected() {
  return {
      {0, Action::new_instance({"want"}, "01", "<root>", false)},
      {0, Action::stop()},
      {1, Action::new_instance({"boy"}, std::nullopt, "ARG0", false)},
      {1, Action::new_instance({"go"}, "02", "ARG1", false)},
      {1, Action::new_instance({"really"}, std::nullopt, "degree", false)},
      {1, Action::stop()},
      {2, Action::stop()},
      {3, Action::connect(2, "ARG0", false)},
      {3, Action::new_instance({"school"}, std::nullopt, "ARG4", false)},
      {3, Action::stop()},
      {4, Action::stop()},
      {5, Action::stop()},
  };
}

int count_kind(const std::vector<StepRecord>& steps, ActionKind k) {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                        [&](const StepRecord& r) { return r.gold.kind == k; }));
}

}  // namespace

TEST_CASE("deterministic linearization of the reentrant example") {
  const AmrGraph g = parse_penman(testdata::kWantGraph);
  const auto steps = linearize(g, kFreq, OrderMode::Deterministic);
  CHECK(trace_of(steps) == fig1_expected());
  for (std::size_t i = 0; i < steps.size(); ++i) CHECK(steps[i].state_index == static_cast<int>(i));
  CHECK(is_isomorphic(reconstruct(actions_of(steps)), g));
}

TEST_CASE("replaying the hand-derived sequence rebuilds the graph") {
  DecoderState s = initial_state();
  for (const auto& step : fig1_expected()) {
    CHECK(s.focused == step.focus);
    apply_in_place(s, step.action);
  }
  CHECK(s.terminal);
  CHECK(s.step_count == 12);
  const AmrGraph g = strip_bog(s);
  CHECK(is_isomorphic(g, parse_penman(testdata::kWantGraph)));
  CHECK(g.vertex(g.root()).content == std::vector<std::string>{"want"});
}

TEST_CASE("apply rejects invalid actions") {
  DecoderState s = initial_state();
  CHECK_THROWS_AS(apply(s, Action::connect(0, "ARG0", false)), UserError);
  s = apply(s, Action::new_instance({"want"}, "01", "<root>", false));
  s = apply(s, Action::stop());
  s = apply(s, Action::new_instance({"boy"}, std::nullopt, "ARG0", false));
  CHECK_THROWS_AS(apply(s, Action::connect(0, "ARG1", false)), UserError);
  CHECK_THROWS_AS(apply(s, Action::connect(2, "ARG0", false)), UserError);
  CHECK_THROWS_AS(apply(s, Action::connect(99, "ARG1", false)), UserError);
  s = apply(s, Action::stop());
  s = apply(s, Action::stop());
  CHECK(s.terminal);
  CHECK_THROWS_AS(apply(s, Action::stop()), UserError);
  CHECK_THROWS_AS(apply(s, Action::new_instance({"x"}, std::nullopt, "ARG0", false)), UserError);
}

TEST_CASE("apply is pure") {
  const DecoderState s = initial_state();
  const DecoderState t = apply(s, Action::new_instance({"want"}, "01", "<root>", false));
  CHECK(s.partial.size() == 1);
  CHECK(s.step_count == 0);
  CHECK(t.partial.size() == 2);
  CHECK(t.step_count == 1);
}

TEST_CASE("reconstruct rejects incomplete sequences") {
  CHECK_THROWS_AS(reconstruct({}), UserError);
  CHECK_THROWS_AS(reconstruct({Action::new_instance({"a"}, std::nullopt, "<root>", false)}),
                  UserError);
  CHECK_THROWS_AS(reconstruct({Action::stop()}), UserError);
}

TEST_CASE("random order permutes children but reconstructs the same graph") {
  const AmrGraph g = parse_penman(testdata::kWantGraph);
  bool differs = false;
  const auto base = actions_of(linearize(g, kFreq, OrderMode::Random, 1));
  for (std::uint64_t seed = 2; seed < 12; ++seed) {
    const auto steps = linearize(g, kFreq, OrderMode::Random, seed);
    differs |= actions_of(steps) != base;
    CHECK(steps.size() == base.size());
    CHECK(is_isomorphic(reconstruct(actions_of(steps)), g));
    CHECK(is_breadth_first(trace_of(steps)));
  }
  CHECK(differs);
  CHECK(actions_of(linearize(g, kFreq, OrderMode::Random, 5)) ==
        actions_of(linearize(g, kFreq, OrderMode::Random, 5)));
}

TEST_CASE("attributes, quoting and reverse edges survive the round trip") {
  const AmrGraph g = parse_penman(testdata::kMeetingGraph);
  const auto steps = linearize(g, kFreq, OrderMode::Deterministic);
  const AmrGraph back = reconstruct(actions_of(steps));
  CHECK(is_isomorphic(back, g));
  CHECK(write_penman(back) == write_penman(g));
  const AmrGraph named = parse_penman("(p / person :name (n / name :op1 \"Obama\" :op2 \"Jr\"))");
  CHECK(is_isomorphic(reconstruct(actions_of(linearize(named, kFreq, OrderMode::Random, 3))), named));
}

TEST_CASE("property: random graphs round-trip, stay breadth-first and obey the action count") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const AmrGraph g = testdata::random_graph(rng, 14, 0.25);
    for (OrderMode mode : {OrderMode::Deterministic, OrderMode::Random}) {
      const auto steps = linearize(g, kFreq, mode, static_cast<std::uint64_t>(i));
      CHECK(is_isomorphic(reconstruct(actions_of(steps)), g));
      CHECK(is_breadth_first(trace_of(steps)));
      const int children = static_cast<int>(steps.size()) - count_kind(steps, ActionKind::NoMoreChildren);
      CHECK(children == static_cast<int>(g.edges().size()) + 1);
      CHECK(count_kind(steps, ActionKind::NoMoreChildren) == g.instance_count() + 1);
    }
  }
}

TEST_CASE("is_breadth_first rejects traces with a wrong focus or invalid action") {
  const AmrGraph g = parse_penman(testdata::kWantGraph);
  auto trace = trace_of(linearize(g, kFreq, OrderMode::Deterministic));
  CHECK(is_breadth_first(trace));

  auto wrong_focus = trace;
  wrong_focus[7].focus = 2;
  CHECK_FALSE(is_breadth_first(wrong_focus));

  auto swapped = trace;
  std::swap(swapped[5], swapped[7]);
  CHECK_FALSE(is_breadth_first(swapped));

  auto bad_target = trace;
  bad_target[7].action.target = 0;
  CHECK_FALSE(is_breadth_first(bad_target));

  auto truncated = trace;
  truncated.pop_back();
  CHECK(is_breadth_first(truncated));
}

TEST_CASE("trace steps serialize as JSON lines") {
  const AmrGraph g = parse_penman(testdata::kMeetingGraph);
  for (const auto& step : trace_of(linearize(g, kFreq, OrderMode::Deterministic))) {
    const std::string line = trace_step_to_json(step);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(trace_step_from_json(line) == step);
  }
  CHECK(trace_step_to_json({0, Action::new_instance({"want"}, "01", "<root>", false)}) ==
        R"({"focus":0,"action":"instance","content":["want"],"sense":"01","label":"<root>","reverse":false})");
  CHECK_THROWS_AS(trace_step_from_json("{\"focus\":0}"), UserError);
}

TEST_CASE("vocabulary-driven linearization uses corpus label frequencies") {
  const auto corpus = load_corpus(std::string(BFAMR_DATA_DIR) + "/toy.jsonl");
  const Vocabulary vocab = build_vocab(corpus);
  for (const auto& ex : corpus) {
    const auto a = linearize(ex.graph, vocab, OrderMode::Deterministic);
    const auto b = linearize(ex.graph, vocab.edge_label_frequency, OrderMode::Deterministic);
    CHECK(actions_of(a) == actions_of(b));
  }
}

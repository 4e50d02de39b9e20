#include <cmath>
#include <map>

#include "bfamr/corpus.hpp"
#include "bfamr/decode.hpp"
#include "bfamr/error.hpp"
#include "bfamr/oracle.hpp"
#include "doctest.h"
#include "test_models.hpp"

using namespace bfamr;

namespace {

std::vector<AnnotatedSentence> sentences() {
  std::vector<AnnotatedSentence> out;
  for (const auto& ex : testdata::toy_corpus()) {
    out.push_back(ex.sentence);
    if (out.size() == 6) break;
  }
  out.push_back(naive_annotate("Unknown words appear here"));
  return out;
}

// Independent greedy decoder: best candidate at every step under the same
// action budget.
Hypothesis greedy(const Model& model, const AnnotatedSentence& s) {
  const int max_actions = default_max_actions(s.size());
  Tape tape(false);
  ForwardPass pass(model, tape, s);
  Hypothesis h;
  h.state = initial_state();
  while (!h.state.terminal) {
    const int remaining = max_actions - h.state.step_count;
    const int queued = static_cast<int>(h.state.focus_queue.size());
    Candidate best{Action::stop(), 0.0};
    if (remaining > queued) {
      const auto cands = expand(pass, h, 1);
      bool found = false;
      for (const auto& c : cands) {
        const int cost = c.action.kind == ActionKind::NewInstance ? 2
                         : c.action.kind == ActionKind::NoMoreChildren ? 0 : 1;
        if (remaining < queued + cost) continue;
        if (!found || c.score > best.score) best = c;
        found = true;
      }
    }
    h.log_prob += best.score;
    h.trace.push_back({h.state.focused, best.action});
    apply_in_place(h.state, best.action);
  }
  return h;
}

}  // namespace

TEST_CASE("decode defaults") {
  const DecodeOptions o;
  CHECK(o.beam == 8);
  CHECK(o.length_norm);
  CHECK(default_max_actions(5) == 80);
}

TEST_CASE("attribute quoting heuristic") {
  CHECK_FALSE(attribute_needs_quotes("-"));
  CHECK_FALSE(attribute_needs_quotes("+"));
  CHECK_FALSE(attribute_needs_quotes("13"));
  CHECK_FALSE(attribute_needs_quotes("-2.5"));
  CHECK(attribute_needs_quotes("Paris"));
  CHECK(attribute_needs_quotes("1.2.3"));
  CHECK(attribute_needs_quotes("."));
}

TEST_CASE("expand: candidates, bounds and probability accounting") {
  auto model = testdata::tiny_model(2);
  const AnnotatedSentence s = sentences()[0];
  Tape tape(false);
  ForwardPass pass(*model, tape, s);
  Hypothesis h;
  h.state = initial_state();

  // At BOG the only move is the root.
  auto first = expand(pass, h, 4);
  REQUIRE_FALSE(first.empty());
  for (const auto& c : first) {
    CHECK(c.action.kind == ActionKind::NewInstance);
    CHECK(c.action.label == "<root>");
  }
  apply_in_place(h.state, first.front().action);
  auto second = expand(pass, h, 4);
  REQUIRE(second.size() == 1);
  CHECK(second[0].action.kind == ActionKind::NoMoreChildren);
  apply_in_place(h.state, second[0].action);

  for (int k : {1, 3, 6}) {
    Hypothesis cur = h;
    for (int step = 0; step < 4 && !cur.state.terminal; ++step) {
      const StepDistributions d = pass.step(cur.state).values();
      const auto cands = expand(pass, cur, k);
      const int t = cur.state.partial.size();
      CHECK(static_cast<int>(cands.size()) <= 3 * k + 1 + t);
      std::map<int, double> mass;
      bool has_stop = false;
      for (const auto& c : cands) {
        mass[c.action.status()] += std::exp(c.score);
        has_stop |= c.action.kind == ActionKind::NoMoreChildren;
        CHECK(c.action.label != "<unk>");
        CHECK(c.action.label != "<root>");
        if (c.action.kind == ActionKind::NewAttribute) CHECK_FALSE(c.action.reverse);
        CHECK_NOTHROW(apply(cur.state, c.action));
      }
      CHECK(has_stop);
      double total = 0;
      for (const auto& [status, m] : mass) {
        CHECK(m <= d.status[status] + 1e-9);
        total += m;
      }
      CHECK(total <= 1.0 + 1e-9);
      // Walk on with the best non-stop candidate to reach richer states.
      const Candidate* next = &cands.front();
      for (const auto& c : cands)
        if (c.action.kind != ActionKind::NoMoreChildren &&
            (next->action.kind == ActionKind::NoMoreChildren || c.score > next->score))
          next = &c;
      apply_in_place(cur.state, next->action);
    }
  }
  Hypothesis done = h;
  done.finished = true;
  CHECK_THROWS_AS(expand(pass, done, 2), UserError);
  CHECK_THROWS_AS(expand(pass, h, 0), UserError);
}

TEST_CASE("beam 1 equals greedy decoding") {
  auto model = testdata::tiny_model(4);
  DecodeOptions o;
  o.beam = 1;
  for (const auto& s : sentences()) {
    const ParseResult r = parse(*model, s, o);
    const Hypothesis g = greedy(*model, s);
    CHECK(r.best.trace == g.trace);
    CHECK(r.best.log_prob == doctest::Approx(g.log_prob).epsilon(1e-12));
  }
}

TEST_CASE("parses are breadth-first, bounded and no worse than greedy") {
  for (std::uint64_t seed : {1, 2}) {
    auto model = testdata::tiny_model(seed);
    for (const auto& s : sentences()) {
      DecodeOptions greedy_opts;
      greedy_opts.beam = 1;
      const double greedy_score = parse(*model, s, greedy_opts).score;
      for (int beam : {1, 4, 8}) {
        DecodeOptions o;
        o.beam = beam;
        const ParseResult r = parse(*model, s, o);
        CHECK(is_breadth_first(r.best.trace));
        CHECK(static_cast<int>(r.best.trace.size()) <= default_max_actions(s.size()));
        CHECK(r.best.state.terminal);
        CHECK(r.score >= greedy_score - 1e-12);
        CHECK_NOTHROW(r.graph.validate());
        CHECK(is_isomorphic(reconstruct([&] {
                std::vector<Action> a;
                for (const auto& st : r.best.trace) a.push_back(st.action);
                return a;
              }()),
              r.graph));
      }
    }
  }
}

TEST_CASE("tight action budgets still terminate") {
  auto model = testdata::tiny_model(6);
  const AnnotatedSentence s = sentences()[1];
  for (int max_actions : {3, 4, 7, 12}) {
    for (int beam : {1, 3}) {
      DecodeOptions o;
      o.beam = beam;
      o.max_actions = max_actions;
      const ParseResult r = beam_search(*model, s, o);
      CHECK(static_cast<int>(r.best.trace.size()) <= max_actions);
      CHECK(is_breadth_first(r.best.trace));
      CHECK(r.graph.size() >= 1);
    }
  }
  DecodeOptions o;
  o.max_actions = 2;
  CHECK_THROWS_AS(beam_search(*model, s, o), UserError);
  o.max_actions = 0;
  o.beam = 0;
  CHECK_THROWS_AS(parse(*model, s, o), UserError);
}

TEST_CASE("length normalization changes only the ranking score") {
  auto model = testdata::tiny_model(7);
  const AnnotatedSentence s = sentences()[2];
  DecodeOptions norm, raw;
  raw.length_norm = false;
  const ParseResult a = beam_search(*model, s, norm);
  const ParseResult b = beam_search(*model, s, raw);
  CHECK(a.score == doctest::Approx(a.best.log_prob / static_cast<double>(a.best.trace.size())));
  CHECK(b.score == doctest::Approx(b.best.log_prob));
}

TEST_CASE("decoding is deterministic") {
  auto model = testdata::tiny_model(9);
  const AnnotatedSentence s = sentences()[3];
  const ParseResult a = parse(*model, s, {});
  const ParseResult b = parse(*model, s, {});
  CHECK(a.best.trace == b.best.trace);
  CHECK(a.score == b.score);
}

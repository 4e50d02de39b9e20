#include "bfamr/decode.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "bfamr/error.hpp"

namespace bfamr {

namespace {

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

std::vector<std::string> content_words(const std::string& unit) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : unit) {
    if (c == ' ' || c == '-') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

// Ids sorted by descending probability.
std::vector<int> ranked_ids(const Tensor& dist) {
  std::vector<int> ids(static_cast<std::size_t>(dist.size()));
  for (int i = 0; i < dist.size(); ++i) ids[static_cast<std::size_t>(i)] = i;
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) { return dist[a] > dist[b]; });
  return ids;
}

std::vector<std::pair<std::string, double>> ranked_units(const std::map<std::string, double>& dist) {
  std::vector<std::pair<std::string, double>> items;
  for (const auto& [unit, p] : dist) {
    if (unit == kUnk || unit == kRootSymbol || p <= 0.0) continue;
    items.emplace_back(unit, p);
  }
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return items;
}

bool admissible(const DecoderState& state, const Action& action) {
  try {
    apply(state, action);
    return true;
  } catch (const UserError&) {
    return false;
  }
}

struct EdgeChoice {
  int label = 0;
  bool reverse = false;
  double log_prob = 0.0;
};

// Edge labels in descending probability, skipping the reserved ones.
std::vector<int> usable_labels(const Tensor& dist, const Vocabulary& vocab) {
  const int unk = vocab.edge_label.id_or_unk(kUnk);
  const int root = vocab.root_label_id();
  std::vector<int> out;
  for (int id : ranked_ids(dist))
    if (id != unk && id != root) out.push_back(id);
  return out;
}

}  // namespace

int default_max_actions(int sentence_length) { return 4 * (2 * sentence_length + 10); }

bool attribute_needs_quotes(const std::string& literal) {
  if (literal == "-" || literal == "+") return false;
  std::size_t i = 0;
  if (i < literal.size() && (literal[i] == '-' || literal[i] == '+')) ++i;
  bool digits = false, dot = false;
  for (; i < literal.size(); ++i) {
    const char c = literal[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      return true;
    }
  }
  return !digits;
}

std::vector<Candidate> expand(ForwardPass& pass, const Hypothesis& hyp, int k) {
  if (hyp.finished || hyp.state.terminal) throw UserError("cannot expand a finished hypothesis");
  if (k < 1) throw UserError("beam width must be at least 1");
  const DecoderState& s = hyp.state;
  const Vocabulary& vocab = pass.model().vocab();
  const AnnotatedSentence& sentence = pass.sentence();
  const StepOutput out = pass.step(s);
  const StepDistributions d = out.values();
  const double log_status[4] = {safe_log(d.status[0]), safe_log(d.status[1]),
                                safe_log(d.status[2]), safe_log(d.status[3])};
  std::vector<Candidate> cands;

  const bool at_bog = s.focused == kBogVertex;
  const bool needs_root = at_bog && s.partial.edges().empty();
  if (!needs_root) cands.push_back({Action::stop(), log_status[0]});
  if (at_bog && !needs_root) return cands;

  auto edge_for = [&](Var vertex, bool allow_reverse) {
    std::vector<EdgeChoice> choices;
    const Tensor labels = pass.edge_label(out, vertex).value();
    if (needs_root) {
      const int root = vocab.root_label_id();
      const Tensor rev = pass.edge_reverse(out, vertex, root).value();
      choices.push_back({root, false, safe_log(labels[root]) + safe_log(rev[0])});
      return choices;
    }
    const auto ranked = usable_labels(labels, vocab);
    for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
      const int l = ranked[i];
      const Tensor rev = pass.edge_reverse(out, vertex, l).value();
      const bool first = allow_reverse && rev[1] > rev[0];
      choices.push_back({l, first, safe_log(labels[l]) + safe_log(rev[first ? 1 : 0])});
      if (allow_reverse)
        choices.push_back({l, !first, safe_log(labels[l]) + safe_log(rev[first ? 0 : 1])});
    }
    return choices;
  };

  // Previously produced vertices.
  if (!needs_root) {
    std::vector<int> targets;
    for (int v = 1; v < s.partial.size(); ++v)
      if (v != s.focused && s.partial.vertex(v).is_instance()) targets.push_back(v);
    std::stable_sort(targets.begin(), targets.end(),
                     [&](int a, int b) { return d.existing[a] > d.existing[b]; });
    if (static_cast<int>(targets.size()) > k) targets.resize(static_cast<std::size_t>(k));
    for (int v : targets) {
      Var vertex = ag::slice_rows(out.gp, v, 1);
      for (const auto& e : edge_for(vertex, true)) {
        Action a = Action::connect(v, vocab.edge_label.symbol(e.label), e.reverse);
        if (!admissible(s, a)) continue;
        cands.push_back({std::move(a), log_status[1] + safe_log(d.existing[v]) + e.log_prob});
        break;
      }
    }
  }

  // New instances.
  {
    int taken = 0;
    for (const auto& [raw, p] : ranked_units(content_distribution(d, vocab, sentence, false))) {
      if (taken == k) break;
      auto words = content_words(raw);
      if (words.empty()) continue;
      const std::string unit = join_words(words);
      const Tensor senses = pass.sense(out, unit).value();
      const int sid = ranked_ids(senses).front();
      std::optional<std::string> sense;
      if (sid != vocab.no_sense_id()) sense = vocab.sense.symbol(sid);
      Var vertex = pass.bert_based_embed(unit);
      const auto edges = edge_for(vertex, true);
      const EdgeChoice& e = edges.front();
      Action a = Action::new_instance(std::move(words), std::move(sense),
                                      vocab.edge_label.symbol(e.label), e.reverse);
      cands.push_back(
          {std::move(a), log_status[2] + safe_log(p) + safe_log(senses[sid]) + e.log_prob});
      ++taken;
    }
  }

  // New attributes.
  if (!needs_root) {
    int taken = 0;
    for (const auto& [unit, p] : ranked_units(content_distribution(d, vocab, sentence, true))) {
      if (taken == k) break;
      Var vertex = pass.bert_based_embed(unit);
      const auto edges = edge_for(vertex, false);
      const EdgeChoice& e = edges.front();
      Action a = Action::new_attribute({unit}, vocab.edge_label.symbol(e.label),
                                       attribute_needs_quotes(unit));
      if (!admissible(s, a)) continue;
      cands.push_back({std::move(a), log_status[3] + safe_log(p) + e.log_prob});
      ++taken;
    }
  }
  return cands;
}

namespace {

double rank_score(const Hypothesis& h, bool length_norm) {
  if (!length_norm) return h.log_prob;
  return h.log_prob / std::max(1, static_cast<int>(h.trace.size()));
}

// Actions still needed to finish: one NoMoreChildren per queued vertex.
int actions_to_finish(const DecoderState& s) { return static_cast<int>(s.focus_queue.size()); }

int budget_cost(const Action& a) {
  if (a.kind == ActionKind::NewInstance) return 2;
  if (a.kind == ActionKind::NoMoreChildren) return 0;
  return 1;
}

}  // namespace

ParseResult beam_search(const Model& model, const AnnotatedSentence& sentence,
                        const DecodeOptions& options) {
  if (options.beam < 1) throw UserError("beam width must be at least 1");
  const int max_actions =
      options.max_actions > 0 ? options.max_actions : default_max_actions(sentence.size());
  if (max_actions < 3) throw UserError("max_actions must allow at least 3 actions");

  Tape tape(false);
  ForwardPass pass(model, tape, sentence);
  const std::size_t base = pass.mark();

  Hypothesis start;
  start.state = initial_state();
  std::vector<Hypothesis> active{start};
  std::vector<Hypothesis> finished;

  while (!active.empty() && static_cast<int>(finished.size()) < options.beam) {
    std::vector<Hypothesis> next;
    for (const Hypothesis& h : active) {
      const int remaining = max_actions - h.state.step_count;
      std::vector<Candidate> cands;
      if (remaining <= actions_to_finish(h.state)) {
        cands.push_back({Action::stop(), 0.0});
      } else {
        cands = expand(pass, h, options.beam);
        pass.rewind(base);
        std::erase_if(cands, [&](const Candidate& c) {
          return remaining < actions_to_finish(h.state) + budget_cost(c.action);
        });
      }
      for (auto& c : cands) {
        Hypothesis n = h;
        apply_in_place(n.state, c.action);
        n.log_prob += c.score;
        n.trace.push_back({h.state.focused, std::move(c.action)});
        n.finished = n.state.terminal;
        next.push_back(std::move(n));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Hypothesis& a, const Hypothesis& b) {
      return a.log_prob > b.log_prob;
    });
    if (static_cast<int>(next.size()) > options.beam) next.resize(static_cast<std::size_t>(options.beam));
    active.clear();
    for (auto& n : next) (n.finished ? finished : active).push_back(std::move(n));
  }
  if (finished.empty()) throw Error("beam search finished without a complete hypothesis");

  std::size_t best = 0;
  for (std::size_t i = 1; i < finished.size(); ++i)
    if (rank_score(finished[i], options.length_norm) >
        rank_score(finished[best], options.length_norm))
      best = i;
  ParseResult r;
  r.best = std::move(finished[best]);
  r.score = rank_score(r.best, options.length_norm);
  r.graph = strip_bog(r.best.state);
  return r;
}

ParseResult parse(const Model& model, const AnnotatedSentence& sentence,
                  const DecodeOptions& options) {
  ParseResult beam = beam_search(model, sentence, options);
  if (options.beam == 1) return beam;
  DecodeOptions greedy_options = options;
  greedy_options.beam = 1;
  ParseResult greedy = beam_search(model, sentence, greedy_options);
  return greedy.score > beam.score ? greedy : beam;
}

}  // namespace bfamr

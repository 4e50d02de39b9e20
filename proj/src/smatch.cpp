#include "bfamr/smatch.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "bfamr/error.hpp"

namespace bfamr {

TripleSet graph_to_triples(const AmrGraph& graph) {
  TripleSet ts;
  std::vector<int> var(static_cast<std::size_t>(graph.size()), -1);
  for (const auto& v : graph.vertices()) {
    if (!v.is_instance()) continue;
    var[static_cast<std::size_t>(v.id)] = ts.variables++;
  }
  auto var_of = [&](int id) { return var[static_cast<std::size_t>(id)]; };
  std::set<std::tuple<std::string, int, int, std::string>> seen;
  auto push = [&](std::vector<Triple>& into, Triple t) {
    if (seen.emplace(t.relation, t.source, t.target, t.value).second) into.push_back(std::move(t));
  };
  for (const auto& v : graph.vertices()) {
    if (!v.is_instance()) continue;
    push(ts.instances, {"instance", var_of(v.id), -1, compose_vertex(v.content, v.sense)});
  }
  if (graph.size() > 0) {
    const Vertex& root = graph.vertex(graph.root());
    if (root.is_instance())
      push(ts.attributes, {"TOP", var_of(root.id), -1, compose_vertex(root.content, root.sense)});
  }
  for (const auto& e : graph.edges()) {
    const Vertex& src = graph.vertex(e.semantic_src());
    const Vertex& dst = graph.vertex(e.semantic_dst());
    if (!src.is_instance()) continue;
    if (dst.is_instance())
      push(ts.relations, {e.label, var_of(src.id), var_of(dst.id), {}});
    else
      push(ts.attributes, {e.label, var_of(src.id), -1, dst.content_unit()});
  }
  return ts;
}

namespace {

// Precomputed match structure between one pred and one gold triple set.
class Matcher {
 public:
  Matcher(const TripleSet& pred, const TripleSet& gold)
      : n_(pred.variables), m_(gold.variables),
        single_(static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_), 0),
        touching_(static_cast<std::size_t>(n_)) {
    std::map<std::pair<std::string, int>, std::vector<std::string>> gold_values;
    for (const auto* list : {&gold.instances, &gold.attributes})
      for (const auto& t : *list) gold_values[{t.relation, t.source}].push_back(t.value);
    for (const auto* list : {&pred.instances, &pred.attributes})
      for (const auto& t : *list)
        for (int u = 0; u < m_; ++u) {
          auto it = gold_values.find({t.relation, u});
          if (it == gold_values.end()) continue;
          if (std::find(it->second.begin(), it->second.end(), t.value) != it->second.end())
            ++single_[idx(t.source, u)];
        }
    for (const auto& t : gold.relations) gold_rel_.insert({t.relation, t.source, t.target});
    for (const auto& t : pred.relations) {
      const int r = static_cast<int>(pred_rel_.size());
      pred_rel_.push_back({t.relation, t.source, t.target});
      touching_[static_cast<std::size_t>(t.source)].push_back(r);
      if (t.target != t.source) touching_[static_cast<std::size_t>(t.target)].push_back(r);
    }
  }

  int pred_vars() const { return n_; }
  int gold_vars() const { return m_; }

  int single(int v, int u) const { return u < 0 ? 0 : single_[idx(v, u)]; }

  bool relation_matches(int r, const std::vector<int>& map) const {
    const auto& [rel, a, b] = pred_rel_[static_cast<std::size_t>(r)];
    const int ma = map[static_cast<std::size_t>(a)], mb = map[static_cast<std::size_t>(b)];
    if (ma < 0 || mb < 0) return false;
    return gold_rel_.count({rel, ma, mb}) != 0;
  }

  int score(const std::vector<int>& map) const {
    int s = 0;
    for (int v = 0; v < n_; ++v) s += single(v, map[static_cast<std::size_t>(v)]);
    for (int r = 0; r < static_cast<int>(pred_rel_.size()); ++r)
      if (relation_matches(r, map)) ++s;
    return s;
  }

  // Score restricted to the triples touching the given variables.
  int local_score(const std::vector<int>& map, int v1, int v2) const {
    int s = single(v1, map[static_cast<std::size_t>(v1)]);
    if (v2 >= 0) s += single(v2, map[static_cast<std::size_t>(v2)]);
    for (int r : touching_[static_cast<std::size_t>(v1)])
      if (relation_matches(r, map)) ++s;
    if (v2 >= 0)
      for (int r : touching_[static_cast<std::size_t>(v2)]) {
        const auto& t = pred_rel_[static_cast<std::size_t>(r)];
        if (std::get<1>(t) == v1 || std::get<2>(t) == v1) continue;
        if (relation_matches(r, map)) ++s;
      }
    return s;
  }

 private:
  std::size_t idx(int v, int u) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(u);
  }

  int n_, m_;
  std::vector<int> single_;
  std::vector<std::tuple<std::string, int, int>> pred_rel_;
  std::set<std::tuple<std::string, int, int>> gold_rel_;
  std::vector<std::vector<int>> touching_;
};

int hill_climb(const Matcher& mt, std::vector<int> map) {
  const int n = mt.pred_vars(), m = mt.gold_vars();
  std::vector<int> owner(static_cast<std::size_t>(m), -1);
  for (int v = 0; v < n; ++v)
    if (map[static_cast<std::size_t>(v)] >= 0)
      owner[static_cast<std::size_t>(map[static_cast<std::size_t>(v)])] = v;
  int current = mt.score(map);
  while (true) {
    int best_delta = 0, best_v1 = -1, best_v2 = -1, best_u = -2;
    for (int v = 0; v < n; ++v) {
      const int old = map[static_cast<std::size_t>(v)];
      const int before = mt.local_score(map, v, -1);
      for (int u = -1; u < m; ++u) {
        if (u == old) continue;
        if (u >= 0 && owner[static_cast<std::size_t>(u)] >= 0) continue;
        map[static_cast<std::size_t>(v)] = u;
        const int delta = mt.local_score(map, v, -1) - before;
        map[static_cast<std::size_t>(v)] = old;
        if (delta > best_delta) {
          best_delta = delta;
          best_v1 = v;
          best_v2 = -1;
          best_u = u;
        }
      }
    }
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        auto& ma = map[static_cast<std::size_t>(a)];
        auto& mb = map[static_cast<std::size_t>(b)];
        if (ma == mb) continue;
        const int before = mt.local_score(map, a, b);
        std::swap(ma, mb);
        const int delta = mt.local_score(map, a, b) - before;
        std::swap(ma, mb);
        if (delta > best_delta) {
          best_delta = delta;
          best_v1 = a;
          best_v2 = b;
        }
      }
    if (best_delta <= 0) break;
    if (best_v2 < 0) {
      const int old = map[static_cast<std::size_t>(best_v1)];
      if (old >= 0) owner[static_cast<std::size_t>(old)] = -1;
      map[static_cast<std::size_t>(best_v1)] = best_u;
      if (best_u >= 0) owner[static_cast<std::size_t>(best_u)] = best_v1;
    } else {
      auto& ma = map[static_cast<std::size_t>(best_v1)];
      auto& mb = map[static_cast<std::size_t>(best_v2)];
      std::swap(ma, mb);
      if (ma >= 0) owner[static_cast<std::size_t>(ma)] = best_v1;
      if (mb >= 0) owner[static_cast<std::size_t>(mb)] = best_v2;
    }
    current += best_delta;
  }
  return current;
}

std::vector<int> concept_start(const TripleSet& pred, const TripleSet& gold) {
  std::vector<int> map(static_cast<std::size_t>(pred.variables), -1);
  std::vector<bool> used(static_cast<std::size_t>(gold.variables), false);
  for (const auto& p : pred.instances)
    for (const auto& g : gold.instances)
      if (!used[static_cast<std::size_t>(g.source)] && p.value == g.value) {
        map[static_cast<std::size_t>(p.source)] = g.source;
        used[static_cast<std::size_t>(g.source)] = true;
        break;
      }
  return map;
}

std::vector<int> random_start(int n, int m, std::mt19937_64& rng) {
  std::vector<int> targets(static_cast<std::size_t>(std::max(n, m)));
  std::iota(targets.begin(), targets.end(), 0);
  std::shuffle(targets.begin(), targets.end(), rng);
  std::vector<int> map(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const int u = targets[static_cast<std::size_t>(v)];
    map[static_cast<std::size_t>(v)] = u < m ? u : -1;
  }
  return map;
}

SmatchScore make_score(int matched, const TripleSet& pred, const TripleSet& gold) {
  return {matched, pred.size(), gold.size()};
}

}  // namespace

SmatchScore smatch(const AmrGraph& pred, const AmrGraph& gold, int restarts, std::uint64_t seed) {
  if (restarts < 1) throw UserError("smatch needs at least one restart");
  const TripleSet tp = graph_to_triples(pred);
  const TripleSet tg = graph_to_triples(gold);
  const Matcher mt(tp, tg);
  std::mt19937_64 rng(seed);
  int best = hill_climb(mt, concept_start(tp, tg));
  for (int r = 1; r < restarts; ++r)
    best = std::max(best, hill_climb(mt, random_start(tp.variables, tg.variables, rng)));
  return make_score(best, tp, tg);
}

SmatchScore smatch_exhaustive(const AmrGraph& pred, const AmrGraph& gold) {
  const TripleSet tp = graph_to_triples(pred);
  const TripleSet tg = graph_to_triples(gold);
  if (tp.variables > kExhaustiveLimit || tg.variables > kExhaustiveLimit)
    throw UserError("exhaustive smatch is limited to " + std::to_string(kExhaustiveLimit) +
                    " variables per graph");
  const Matcher mt(tp, tg);
  const int n = tp.variables, m = tg.variables;
  int best = 0;
  // Injective maps of the smaller side into the larger; unmapped variables
  // can never add matches, so full injections of the smaller side suffice.
  std::vector<int> map(static_cast<std::size_t>(n), -1);
  std::vector<bool> used(static_cast<std::size_t>(std::max(n, m)), false);
  if (n <= m) {
    std::function<void(int)> rec = [&](int v) {
      if (v == n) {
        best = std::max(best, mt.score(map));
        return;
      }
      for (int u = 0; u < m; ++u) {
        if (used[static_cast<std::size_t>(u)]) continue;
        used[static_cast<std::size_t>(u)] = true;
        map[static_cast<std::size_t>(v)] = u;
        rec(v + 1);
        used[static_cast<std::size_t>(u)] = false;
      }
      map[static_cast<std::size_t>(v)] = -1;
    };
    rec(0);
  } else {
    std::function<void(int)> rec = [&](int u) {
      if (u == m) {
        best = std::max(best, mt.score(map));
        return;
      }
      for (int v = 0; v < n; ++v) {
        if (used[static_cast<std::size_t>(v)]) continue;
        used[static_cast<std::size_t>(v)] = true;
        map[static_cast<std::size_t>(v)] = u;
        rec(u + 1);
        map[static_cast<std::size_t>(v)] = -1;
        used[static_cast<std::size_t>(v)] = false;
      }
    };
    rec(0);
  }
  return make_score(best, tp, tg);
}

SmatchScore corpus_smatch(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                          int restarts, std::uint64_t seed) {
  if (pred.size() != gold.size())
    throw UserError("corpus smatch needs aligned lists: " + std::to_string(pred.size()) +
                    " predictions vs " + std::to_string(gold.size()) + " references");
  if (restarts < 1) throw UserError("smatch needs at least one restart");
  const int n = static_cast<int>(pred.size());
  std::vector<SmatchScore> scores(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i)
    scores[static_cast<std::size_t>(i)] =
        smatch(pred[static_cast<std::size_t>(i)], gold[static_cast<std::size_t>(i)], restarts,
               seed + static_cast<std::uint64_t>(i));
  SmatchScore total;
  for (const auto& s : scores) {
    total.matched += s.matched;
    total.pred_total += s.pred_total;
    total.gold_total += s.gold_total;
  }
  return total;
}

}  // namespace bfamr

#include "bfamr/amr.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <tuple>

#include "bfamr/error.hpp"

namespace bfamr {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

std::vector<std::string> split_hyphens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '-') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string Vertex::content_unit() const {
  std::string out;
  for (std::size_t i = 0; i < content.size(); ++i) {
    if (i) out.push_back(' ');
    out += content[i];
  }
  return out;
}

int AmrGraph::add_vertex(VertexType type, std::vector<std::string> content,
                         std::optional<std::string> sense, bool quoted) {
  Vertex v;
  v.id = static_cast<int>(vertices_.size());
  v.type = type;
  v.content = std::move(content);
  v.sense = std::move(sense);
  v.quoted = quoted;
  vertices_.push_back(std::move(v));
  return vertices_.back().id;
}

void AmrGraph::add_edge(int src, int dst, std::string label, bool reverse) {
  edges_.push_back(Edge{src, dst, std::move(label), reverse});
}

bool AmrGraph::has_edge(int src, int dst, std::string_view label) const {
  return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) {
    return e.src == src && e.dst == dst && e.label == label;
  });
}

bool AmrGraph::has_semantic_edge(int sem_src, int sem_dst, std::string_view label) const {
  return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) {
    return e.semantic_src() == sem_src && e.semantic_dst() == sem_dst && e.label == label;
  });
}

int AmrGraph::instance_count() const {
  return static_cast<int>(std::count_if(vertices_.begin(), vertices_.end(),
                                        [](const Vertex& v) { return v.is_instance(); }));
}

void AmrGraph::validate() const {
  const int n = size();
  if (n == 0) throw UserError("graph has no vertices");
  if (root_ < 0 || root_ >= n) throw UserError("root id out of range");
  for (const auto& v : vertices_) {
    if (v.content.empty()) throw UserError("vertex " + std::to_string(v.id) + " has empty content");
    for (const auto& w : v.content) {
      if (w.empty()) throw UserError("vertex " + std::to_string(v.id) + " has an empty content word");
      if (v.is_instance() && w.find('-') != std::string::npos)
        throw UserError("instance content word '" + w + "' contains a hyphen");
    }
    if (!v.is_instance() && v.sense)
      throw UserError("attribute vertex " + std::to_string(v.id) + " carries a sense");
  }
  std::set<std::tuple<int, int, std::string>> seen;
  for (const auto& e : edges_) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      throw UserError("edge endpoint out of range");
    if (e.src == e.dst) throw UserError("self-loop on vertex " + std::to_string(e.src));
    if (e.label.empty()) throw UserError("edge with empty label");
    if (e.label.size() >= kReverseSuffix.size() &&
        e.label.compare(e.label.size() - kReverseSuffix.size(), kReverseSuffix.size(),
                        kReverseSuffix) == 0)
      throw UserError("edge label '" + e.label + "' still carries the reverse suffix");
    if (!vertices_[static_cast<std::size_t>(e.semantic_src())].is_instance())
      throw UserError("attribute vertex " + std::to_string(e.semantic_src()) +
                      " has an outgoing edge");
    if (!seen.emplace(e.semantic_src(), e.semantic_dst(), e.label).second)
      throw UserError("duplicate edge :" + e.label);
  }
  // Undirected reachability from the root.
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : edges_) {
    adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
    adj[static_cast<std::size_t>(e.dst)].push_back(e.src);
  }
  std::vector<char> seen_v(static_cast<std::size_t>(n), 0);
  std::queue<int> q;
  q.push(root_);
  seen_v[static_cast<std::size_t>(root_)] = 1;
  int reached = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (!seen_v[static_cast<std::size_t>(w)]) {
        seen_v[static_cast<std::size_t>(w)] = 1;
        ++reached;
        q.push(w);
      }
    }
  }
  if (reached != n) throw UserError("graph is disconnected");
}

std::pair<std::vector<std::string>, std::optional<std::string>> decompose_vertex(
    std::string_view raw, bool is_attribute) {
  if (raw.empty()) throw UserError("empty concept");
  if (is_attribute) return {{std::string(raw)}, std::nullopt};
  std::string unit = lowercase(raw);
  std::optional<std::string> sense;
  auto pos = unit.rfind('-');
  if (pos != std::string::npos && pos > 0 && all_digits(std::string_view(unit).substr(pos + 1))) {
    sense = unit.substr(pos + 1);
    unit.resize(pos);
  }
  auto words = split_hyphens(unit);
  if (words.empty()) throw UserError("concept '" + std::string(raw) + "' has no content");
  return {std::move(words), std::move(sense)};
}

std::string compose_vertex(const std::vector<std::string>& content,
                           const std::optional<std::string>& sense) {
  std::string out;
  for (std::size_t i = 0; i < content.size(); ++i) {
    if (i) out.push_back('-');
    out += content[i];
  }
  if (sense) {
    out.push_back('-');
    out += *sense;
  }
  return out;
}

std::pair<std::string, bool> decompose_edge(std::string_view raw) {
  if (raw.empty()) throw UserError("empty edge label");
  if (raw.size() > kReverseSuffix.size() && raw.ends_with(kReverseSuffix))
    return {std::string(raw.substr(0, raw.size() - kReverseSuffix.size())), true};
  return {std::string(raw), false};
}

std::string compose_edge(std::string_view label, bool reverse) {
  std::string out(label);
  if (reverse) out += kReverseSuffix;
  return out;
}

NeighbourSet neighbour_sets(const AmrGraph& graph) {
  NeighbourSet out(static_cast<std::size_t>(graph.size()));
  for (const auto& e : graph.edges()) {
    out[static_cast<std::size_t>(e.src)].push_back(Neighbour{e.dst, e.label, e.reverse});
    out[static_cast<std::size_t>(e.dst)].push_back(Neighbour{e.src, e.label, !e.reverse});
  }
  return out;
}

namespace {

// Semantic adjacency: (source, target) -> sorted labels.
using PairLabels = std::map<std::pair<int, int>, std::vector<std::string>>;

PairLabels semantic_pairs(const AmrGraph& g) {
  PairLabels out;
  for (const auto& e : g.edges()) out[{e.semantic_src(), e.semantic_dst()}].push_back(e.label);
  for (auto& [k, v] : out) std::sort(v.begin(), v.end());
  return out;
}

std::string vertex_signature(const AmrGraph& g, const Vertex& v) {
  std::string s = v.is_instance() ? "I|" : "A|";
  s += v.content_unit();
  s += '|';
  s += v.sense.value_or("");
  s += v.quoted ? "|q" : "|u";
  if (v.id == g.root()) s += "|root";
  return s;
}

// Colour refinement over both graphs with a shared palette so colours are
// comparable across them.
std::pair<std::vector<int>, std::vector<int>> refine_colours(const AmrGraph& a, const AmrGraph& b) {
  std::map<std::string, int> palette;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = palette.emplace(s, static_cast<int>(palette.size()));
    return it->second;
  };
  auto initial = [&](const AmrGraph& g) {
    std::vector<int> c;
    for (const auto& v : g.vertices()) c.push_back(intern(vertex_signature(g, v)));
    return c;
  };
  std::vector<int> ca = initial(a), cb = initial(b);
  auto step = [&](const AmrGraph& g, const std::vector<int>& col) {
    std::vector<std::vector<std::string>> parts(static_cast<std::size_t>(g.size()));
    for (const auto& e : g.edges()) {
      int s = e.semantic_src(), d = e.semantic_dst();
      parts[static_cast<std::size_t>(s)].push_back(">" + e.label + ":" +
                                                   std::to_string(col[static_cast<std::size_t>(d)]));
      parts[static_cast<std::size_t>(d)].push_back("<" + e.label + ":" +
                                                   std::to_string(col[static_cast<std::size_t>(s)]));
    }
    std::vector<int> next;
    for (int i = 0; i < g.size(); ++i) {
      auto& p = parts[static_cast<std::size_t>(i)];
      std::sort(p.begin(), p.end());
      std::string key = std::to_string(col[static_cast<std::size_t>(i)]);
      for (const auto& x : p) key += "," + x;
      next.push_back(intern(key));
    }
    return next;
  };
  const int rounds = std::max(a.size(), b.size());
  for (int r = 0; r < rounds; ++r) {
    auto na = step(a, ca), nb = step(b, cb);
    std::set<int> before_a(ca.begin(), ca.end()), after_a(na.begin(), na.end());
    ca = std::move(na);
    cb = std::move(nb);
    if (after_a.size() == before_a.size()) break;
  }
  return {ca, cb};
}

}  // namespace

bool is_isomorphic(const AmrGraph& a, const AmrGraph& b) {
  if (a.size() != b.size() || a.edges().size() != b.edges().size()) return false;
  auto [ca, cb] = refine_colours(a, b);
  {
    auto sa = ca, sb = cb;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return false;
  }
  const PairLabels pa = semantic_pairs(a), pb = semantic_pairs(b);
  static const std::vector<std::string> kNone;
  auto labels = [](const PairLabels& p, int s, int d) -> const std::vector<std::string>& {
    auto it = p.find({s, d});
    return it == p.end() ? kNone : it->second;
  };

  const int n = a.size();
  // Map a's vertices in BFS order from the root so each step is constrained
  // by an already mapped neighbour.
  std::vector<int> order;
  {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& e : a.edges()) {
      adj[static_cast<std::size_t>(e.src)].push_back(e.dst);
      adj[static_cast<std::size_t>(e.dst)].push_back(e.src);
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int start : {a.root()}) {
      std::queue<int> q;
      q.push(start);
      seen[static_cast<std::size_t>(start)] = 1;
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        order.push_back(u);
        for (int w : adj[static_cast<std::size_t>(u)])
          if (!seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = 1;
            q.push(w);
          }
      }
    }
    for (int i = 0; i < n; ++i)
      if (!seen[static_cast<std::size_t>(i)]) order.push_back(i);
  }

  std::vector<int> map_ab(static_cast<std::size_t>(n), -1), map_ba(static_cast<std::size_t>(n), -1);
  std::function<bool(std::size_t)> search = [&](std::size_t k) -> bool {
    if (k == order.size()) return true;
    const int u = order[k];
    for (int v = 0; v < n; ++v) {
      if (map_ba[static_cast<std::size_t>(v)] != -1) continue;
      if (ca[static_cast<std::size_t>(u)] != cb[static_cast<std::size_t>(v)]) continue;
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) {
        const int w = order[j];
        const int mw = map_ab[static_cast<std::size_t>(w)];
        ok = labels(pa, u, w) == labels(pb, v, mw) && labels(pa, w, u) == labels(pb, mw, v);
      }
      if (!ok) continue;
      map_ab[static_cast<std::size_t>(u)] = v;
      map_ba[static_cast<std::size_t>(v)] = u;
      if (search(k + 1)) return true;
      map_ab[static_cast<std::size_t>(u)] = -1;
      map_ba[static_cast<std::size_t>(v)] = -1;
    }
    return false;
  };
  return search(0);
}

}  // namespace bfamr

#pragma once

// Shared fixtures: reference graphs and a random valid-AMR generator.

#include <random>
#include <string>
#include <vector>

#include "bfamr/amr.hpp"

namespace testdata {

// Reentrant instance plus a degree modifier.
inline constexpr const char* kWantGraph =
    "(w / want-01\n"
    "   :ARG0 (b / boy)\n"
    "   :ARG1 (g / go-02\n"
    "      :ARG0 b\n"
    "      :ARG4 (s / school))\n"
    "   :degree (r / really))";

// Date entity, polarity and two inverse roles.
inline constexpr const char* kMeetingGraph =
    "(e / end-01\n"
    "   :ARG1 (m / meet-03\n"
    "      :time (d / date-entity :day 13 :month 11 :year 2008))\n"
    "   :manner (m2 / measure-02 :polarity -\n"
    "      :ARG1-of (n / new-01)\n"
    "      :ARG1-of (a / announce-01)))";

inline const std::vector<std::string>& words() {
  static const std::vector<std::string> w = {"want", "boy", "go",    "school", "really", "girl",
                                             "eat",  "see", "teach", "city",   "date",   "entity",
                                             "name", "back", "new",  "meet"};
  return w;
}

inline const std::vector<std::string>& labels() {
  static const std::vector<std::string> l = {"ARG0", "ARG1", "ARG2", "mod", "time", "location",
                                             "degree", "op1"};
  return l;
}

// Random connected AMR graph with up to max_vertices vertices. Extra
// instance-to-instance edges are added at reentrancy_rate per vertex;
// instance children are written reversed with probability 0.3.
template <typename Rng>
bfamr::AmrGraph random_graph(Rng& rng, int max_vertices, double reentrancy_rate,
                             int min_vertices = 1) {
  using namespace bfamr;
  std::uniform_int_distribution<int> nd(min_vertices, max_vertices);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  auto instance_content = [&]() {
    std::vector<std::string> c{pick(words())};
    if (u01(rng) < 0.15) c.push_back(pick(words()));
    std::optional<std::string> s;
    if (u01(rng) < 0.5) s = "0" + std::to_string(std::uniform_int_distribution<int>(1, 3)(rng));
    return std::make_pair(c, s);
  };

  const int n = nd(rng);
  AmrGraph g;
  std::vector<int> instances;
  auto [c0, s0] = instance_content();
  instances.push_back(g.add_vertex(VertexType::Instance, c0, s0));
  for (int k = 1; k < n; ++k) {
    int parent = instances[std::uniform_int_distribution<std::size_t>(0, instances.size() - 1)(rng)];
    std::string label = pick(labels());
    if (u01(rng) < 0.25) {
      double r = u01(rng);
      int v;
      if (r < 0.4)
        v = g.add_vertex(VertexType::Attribute,
                         {std::to_string(std::uniform_int_distribution<int>(1, 2020)(rng))});
      else if (r < 0.6)
        v = g.add_vertex(VertexType::Attribute, {"-"});
      else
        v = g.add_vertex(VertexType::Attribute, {pick({"Obama", "Paris", "Ada"})}, std::nullopt,
                         true);
      if (!g.has_semantic_edge(parent, v, label)) g.add_edge(parent, v, label, false);
      continue;
    }
    auto [c, s] = instance_content();
    int v = g.add_vertex(VertexType::Instance, c, s);
    instances.push_back(v);
    if (u01(rng) < 0.3)
      g.add_edge(parent, v, label, true);  // semantic v -> parent
    else
      g.add_edge(parent, v, label, false);
  }
  const int extra = static_cast<int>(reentrancy_rate * n + u01(rng));
  for (int k = 0; k < extra && instances.size() > 1; ++k) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      int a = instances[std::uniform_int_distribution<std::size_t>(0, instances.size() - 1)(rng)];
      int b = instances[std::uniform_int_distribution<std::size_t>(0, instances.size() - 1)(rng)];
      std::string label = pick(labels());
      if (a == b || g.has_semantic_edge(a, b, label) || g.has_semantic_edge(b, a, label)) continue;
      bool rev = u01(rng) < 0.3;
      if (rev)
        g.add_edge(b, a, label, true);
      else
        g.add_edge(a, b, label, false);
      break;
    }
  }
  g.set_root(0);
  return g;
}

}  // namespace testdata

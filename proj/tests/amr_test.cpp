#include <random>

#include "bfamr/amr.hpp"
#include "bfamr/error.hpp"
#include "bfamr/penman.hpp"
#include "doctest.h"
#include "test_graphs.hpp"

using namespace bfamr;

TEST_CASE("parse_penman: two instances with senses") {
  AmrGraph g = parse_penman("(e / end-01 :ARG1 (m / meet-03))");
  REQUIRE(g.size() == 2);
  CHECK(g.vertex(0).content == std::vector<std::string>{"end"});
  CHECK(g.vertex(0).sense == "01");
  CHECK(g.vertex(1).content == std::vector<std::string>{"meet"});
  CHECK(g.vertex(1).sense == "03");
  REQUIRE(g.edges().size() == 1);
  CHECK(g.edges()[0].label == "ARG1");
  CHECK_FALSE(g.edges()[0].reverse);
  CHECK(g.root() == 0);
}

TEST_CASE("parse_penman: attribute child") {
  AmrGraph g = parse_penman("(d / date-entity :day 13)");
  REQUIRE(g.size() == 2);
  CHECK(g.vertex(0).content == std::vector<std::string>{"date", "entity"});
  CHECK_FALSE(g.vertex(0).sense.has_value());
  CHECK(g.vertex(1).type == VertexType::Attribute);
  CHECK(g.vertex(1).content == std::vector<std::string>{"13"});
  CHECK(g.edges()[0].label == "day");
}

TEST_CASE("parse_penman: errors") {
  CHECK_THROWS_AS(parse_penman("(a / a"), ParseError);
  try {
    parse_penman("(a / a");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unbalanced") != std::string::npos);
    CHECK(e.offset() == 6);
  }
  CHECK_THROWS_AS(parse_penman("(a / x :ARG0 (a / y))"), ParseError);
  CHECK_THROWS_AS(parse_penman("(a / x :ARG0 b)"), ParseError);
  CHECK_THROWS_AS(parse_penman(""), ParseError);
  CHECK_THROWS_AS(parse_penman("(a / x) (b / y)"), ParseError);
}

TEST_CASE("parse_penman: reentrancy, comments, quoted and reverse") {
  AmrGraph g = parse_penman(testdata::kWantGraph);
  CHECK(g.size() == 5);
  CHECK(g.edges().size() == 5);
  AmrGraph h = parse_penman(
      "# ::snt Obama\n(p / person :name (n / name :op1 \"Obama\") :ARG0-of (l / lead-02))");
  CHECK(h.vertex(2).quoted);
  CHECK(h.vertex(2).content == std::vector<std::string>{"Obama"});
  CHECK(h.edges().back().reverse);
  CHECK(h.edges().back().label == "ARG0");
  // A reference may precede its definition.
  AmrGraph f = parse_penman("(a / x :ARG0 b :ARG1 (c / y :ARG2 (b / z)))");
  CHECK(f.size() == 3);
  CHECK(f.edges().size() == 3);
}

TEST_CASE("write_penman") {
  AmrGraph boy;
  boy.add_vertex(VertexType::Instance, {"boy"});
  CHECK(write_penman(boy) == "(b / boy)");

  AmrGraph m;
  int a = m.add_vertex(VertexType::Instance, {"measure"}, "02");
  int b = m.add_vertex(VertexType::Instance, {"new"}, "01");
  m.add_edge(a, b, "ARG1", true);
  CHECK(write_penman(m, {false}) == "(m / measure-02 :ARG1-of (n / new-01))");

  AmrGraph meeting_graph = parse_penman(testdata::kMeetingGraph);
  AmrGraph back = parse_penman(write_penman(meeting_graph));
  CHECK(is_isomorphic(meeting_graph, back));
  CHECK(write_penman(meeting_graph).find(":ARG1-of") != std::string::npos);

  AmrGraph want_graph = parse_penman(testdata::kWantGraph);
  CHECK(is_isomorphic(want_graph, parse_penman(write_penman(want_graph))));
  CHECK(is_isomorphic(want_graph, parse_penman(write_penman(want_graph, {false}))));
}

TEST_CASE("write_penman rejects invalid graphs") {
  AmrGraph g;
  g.add_vertex(VertexType::Instance, {"a"});
  g.add_vertex(VertexType::Instance, {"b"});
  CHECK_THROWS_AS(write_penman(g), UserError);  // disconnected
  AmrGraph h;
  h.add_vertex(VertexType::Attribute, {"13"});
  CHECK_THROWS_AS(write_penman(h), UserError);
}

TEST_CASE("decompose_vertex / compose_vertex") {
  using V = std::vector<std::string>;
  auto [c1, s1] = decompose_vertex("end-01", false);
  CHECK(c1 == V{"end"});
  CHECK(s1 == "01");
  auto [c2, s2] = decompose_vertex("go-back-19", false);
  CHECK(c2 == V{"go", "back"});
  CHECK(s2 == "19");
  auto [c3, s3] = decompose_vertex("date-entity", false);
  CHECK(c3 == V{"date", "entity"});
  CHECK_FALSE(s3.has_value());
  auto [c4, s4] = decompose_vertex("2008", true);
  CHECK(c4 == V{"2008"});
  CHECK_FALSE(s4.has_value());
  CHECK_THROWS_AS(decompose_vertex("", false), UserError);

  CHECK(compose_vertex({"end"}, "01") == "end-01");
  CHECK(compose_vertex({"boy"}, std::nullopt) == "boy");
  CHECK(compose_vertex({"date", "entity"}, std::nullopt) == "date-entity");

  for (const char* raw : {"end-01", "go-back-19", "date-entity", "have-org-role-91", "boy"}) {
    auto [c, s] = decompose_vertex(raw, false);
    CHECK(compose_vertex(c, s) == raw);
  }
}

TEST_CASE("decompose_edge") {
  CHECK(decompose_edge("ARG1-of") == std::pair<std::string, bool>{"ARG1", true});
  CHECK(decompose_edge("degree") == std::pair<std::string, bool>{"degree", false});
  CHECK(decompose_edge("consist-of") == std::pair<std::string, bool>{"consist", true});
  CHECK_THROWS_AS(decompose_edge(""), UserError);
  CHECK(compose_edge("ARG1", true) == "ARG1-of");
}

TEST_CASE("neighbour_sets") {
  AmrGraph g;
  int i = g.add_vertex(VertexType::Instance, {"x"});
  int j = g.add_vertex(VertexType::Instance, {"y"});
  g.add_edge(i, j, "ARG0", false);
  auto ns = neighbour_sets(g);
  REQUIRE(ns[0].size() == 1);
  CHECK(ns[0][0].vertex == 1);
  CHECK(ns[0][0].label == "ARG0");
  CHECK_FALSE(ns[0][0].reverse);
  CHECK(ns[1][0].vertex == 0);
  CHECK(ns[1][0].reverse);

  AmrGraph lone;
  lone.add_vertex(VertexType::Instance, {"z"});
  CHECK(neighbour_sets(lone)[0].empty());

  AmrGraph want_graph = parse_penman(testdata::kWantGraph);
  auto nf = neighbour_sets(want_graph);
  // want: three children, no parents; boy: two parents.
  CHECK(nf[0].size() == 3);
  for (const auto& n : nf[0]) CHECK_FALSE(n.reverse);
  int boy = 1;
  CHECK(want_graph.vertex(boy).content == std::vector<std::string>{"boy"});
  CHECK(nf[boy].size() == 2);
  for (const auto& n : nf[boy]) CHECK(n.reverse);
}

TEST_CASE("neighbour_sets symmetry on random graphs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    AmrGraph g = testdata::random_graph(rng, 12, 0.3);
    auto ns = neighbour_sets(g);
    std::size_t total = 0;
    for (int v = 0; v < g.size(); ++v) {
      total += ns[v].size();
      for (const auto& n : ns[v]) {
        int matches = 0;
        for (const auto& back : ns[n.vertex])
          if (back.vertex == v && back.label == n.label && back.reverse == !n.reverse) ++matches;
        CHECK(matches >= 1);
      }
    }
    CHECK(total == 2 * g.edges().size());
  }
}

TEST_CASE("round trip on random graphs") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    AmrGraph g = testdata::random_graph(rng, 15, 0.3);
    CHECK(is_isomorphic(g, parse_penman(write_penman(g))));
  }
}

TEST_CASE("is_isomorphic distinguishes") {
  AmrGraph a = parse_penman("(a / x :ARG0 (b / y) :ARG1 (c / z))");
  AmrGraph b = parse_penman("(c / x :ARG1 (d / z) :ARG0 (e / y))");
  AmrGraph c = parse_penman("(a / x :ARG0 (b / z) :ARG1 (c / y))");
  AmrGraph d = parse_penman("(b / y :ARG0-of (a / x :ARG1 (c / z)))");
  CHECK(is_isomorphic(a, b));
  CHECK_FALSE(is_isomorphic(a, c));
  // Same semantic edges, different root.
  CHECK_FALSE(is_isomorphic(a, d));
  AmrGraph e = parse_penman("(a / x :ARG0 (b / y) :ARG1 b)");
  AmrGraph f = parse_penman("(a / x :ARG0 (b / y) :ARG1 (c / y))");
  CHECK_FALSE(is_isomorphic(e, f));
}

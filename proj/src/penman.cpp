#include "bfamr/penman.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>

#include "bfamr/error.hpp"

namespace bfamr {

namespace {

struct RawNode;

// A child is either a nested node or a bare/quoted token resolved later.
struct RawChild {
  std::string role;
  std::size_t offset = 0;
  std::unique_ptr<RawNode> node;
  std::string token;
  bool quoted = false;
};

struct RawNode {
  std::string var;
  std::string concept_name;
  std::size_t offset = 0;
  std::vector<RawChild> children;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::unique_ptr<RawNode> read_top() {
    skip_space();
    if (at_end()) throw ParseError("empty PENMAN input", pos_);
    auto node = read_node();
    skip_space();
    if (!at_end()) throw ParseError("trailing content after expression", pos_);
    return node;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (c == '#' && (pos_ == 0 || text_[pos_ - 1] == '\n' || line_is_blank_before())) {
        while (!at_end() && peek() != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool line_is_blank_before() const {
    std::size_t i = pos_;
    while (i > 0 && text_[i - 1] != '\n') {
      if (!std::isspace(static_cast<unsigned char>(text_[i - 1]))) return false;
      --i;
    }
    return true;
  }

  static bool is_delim(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ':' ||
           c == '"';
  }

  std::string read_symbol() {
    std::size_t start = pos_;
    while (!at_end() && !is_delim(peek()) && peek() != '/') ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string read_quoted() {
    std::size_t start = pos_;
    ++pos_;
    std::string out;
    while (!at_end() && peek() != '"') {
      if (peek() == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out.push_back(peek());
      ++pos_;
    }
    if (at_end()) throw ParseError("unterminated string literal", start);
    ++pos_;
    return out;
  }

  std::unique_ptr<RawNode> read_node() {
    auto node = std::make_unique<RawNode>();
    node->offset = pos_;
    if (at_end() || peek() != '(') throw ParseError("expected '('", pos_);
    ++pos_;
    skip_space();
    node->var = read_symbol();
    if (node->var.empty()) throw ParseError("expected variable name", pos_);
    skip_space();
    if (at_end()) throw ParseError("unbalanced parentheses", pos_);
    if (peek() != '/') throw ParseError("expected '/' after variable '" + node->var + "'", pos_);
    ++pos_;
    skip_space();
    if (!at_end() && peek() == '"') {
      node->concept_name = read_quoted();
    } else {
      node->concept_name = read_symbol();
    }
    if (node->concept_name.empty()) {
      if (at_end()) throw ParseError("unbalanced parentheses", pos_);
      throw ParseError("expected concept", pos_);
    }
    for (;;) {
      skip_space();
      if (at_end()) throw ParseError("unbalanced parentheses", pos_);
      char c = peek();
      if (c == ')') {
        ++pos_;
        return node;
      }
      if (c != ':') throw ParseError("expected role or ')'", pos_);
      RawChild child;
      child.offset = pos_;
      ++pos_;
      child.role = read_symbol();
      if (child.role.empty()) throw ParseError("empty role name", pos_);
      skip_space();
      if (at_end()) throw ParseError("unbalanced parentheses", pos_);
      child.offset = pos_;
      if (peek() == '(') {
        child.node = read_node();
      } else if (peek() == '"') {
        child.token = read_quoted();
        child.quoted = true;
      } else {
        child.token = read_symbol();
        if (child.token.empty()) throw ParseError("missing value for role :" + child.role, pos_);
      }
      node->children.push_back(std::move(child));
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// Variables look like "b", "x2", "b_1": a letter followed by digits or
// underscores. Anything else unquoted is a constant.
bool looks_like_variable(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin() + 1, s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0 || c == '_';
  });
}

class Builder {
 public:
  AmrGraph build(const RawNode& top) {
    collect(top);
    graph_.set_root(emit(top));
    // References that appeared before their variable's definition.
    for (auto& d : deferred_)
      graph_.add_edge(d.from, vars_.at(d.var), std::move(d.label), d.reverse);
    return std::move(graph_);
  }

 private:
  void collect(const RawNode& n) {
    if (!vars_.emplace(n.var, -1).second)
      throw ParseError("duplicate variable definition '" + n.var + "'", n.offset);
    for (const auto& c : n.children)
      if (c.node) collect(*c.node);
  }

  int emit(const RawNode& n) {
    auto [content, sense] = decompose_vertex(n.concept_name, false);
    int id = graph_.add_vertex(VertexType::Instance, std::move(content), std::move(sense));
    vars_[n.var] = id;
    for (const auto& c : n.children) {
      auto [label, reverse] = decompose_edge(c.role);
      int child;
      if (c.node) {
        child = emit(*c.node);
      } else if (!c.quoted && vars_.count(c.token)) {
        child = vars_.at(c.token);
        if (child < 0) {
          deferred_.push_back({id, c.token, std::move(label), reverse});
          continue;
        }
      } else if (!c.quoted && looks_like_variable(c.token)) {
        throw ParseError("reference to undefined variable '" + c.token + "'", c.offset);
      } else {
        auto words = decompose_vertex(c.token, true).first;
        child = graph_.add_vertex(VertexType::Attribute, std::move(words), std::nullopt, c.quoted);
      }
      graph_.add_edge(id, child, std::move(label), reverse);
    }
    return id;
  }

  struct Deferred {
    int from;
    std::string var;
    std::string label;
    bool reverse;
  };

  AmrGraph graph_;
  std::map<std::string, int> vars_;
  std::vector<Deferred> deferred_;
};

}  // namespace

AmrGraph parse_penman(std::string_view text) {
  Reader reader(text);
  auto top = reader.read_top();
  Builder builder;
  AmrGraph g = builder.build(*top);
  try {
    g.validate();
  } catch (const UserError& e) {
    throw ParseError(std::string("invalid graph: ") + e.what(), 0);
  }
  return g;
}

std::vector<std::string> split_penman_blocks(std::string_view text) {
  std::vector<std::string> blocks;
  std::string cur;
  int depth = 0;
  bool in_string = false;
  bool has_content = false;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t eol = text.find('\n', i);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(i, eol - i);
    i = eol + 1;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
      if (has_content && depth == 0) {
        blocks.push_back(std::move(cur));
        cur.clear();
        has_content = false;
      }
      continue;
    }
    if (line[first] == '#') continue;
    for (char c : line) {
      if (c == '"') in_string = !in_string;
      if (in_string) continue;
      if (c == '(') ++depth;
      if (c == ')') --depth;
    }
    cur += line;
    cur += '\n';
    has_content = true;
    if (depth == 0) {
      blocks.push_back(std::move(cur));
      cur.clear();
      has_content = false;
    }
  }
  if (has_content) blocks.push_back(std::move(cur));
  return blocks;
}

namespace {

class Writer {
 public:
  Writer(const AmrGraph& g, PenmanStyle style) : g_(g), style_(style) {
    incident_.resize(g.size());
    for (std::size_t k = 0; k < g.edges().size(); ++k) {
      const Edge& e = g.edges()[k];
      incident_[e.src].push_back(static_cast<int>(k));
      incident_[e.dst].push_back(static_cast<int>(k));
    }
    assign_variables();
  }

  std::string write() {
    const Vertex& root = g_.vertex(g_.root());
    if (!root.is_instance()) throw UserError("cannot serialize a graph rooted at an attribute");
    for (const auto& v : g_.vertices())
      if (!v.is_instance() && incident_[v.id].size() != 1)
        throw UserError("attribute vertex " + std::to_string(v.id) +
                        " must have exactly one incident edge");
    visited_.assign(g_.size(), 0);
    used_edge_.assign(g_.edges().size(), 0);
    std::string out;
    write_instance(g_.root(), 0, out);
    for (char v : visited_)
      if (!v) throw UserError("graph is disconnected");
    return out;
  }

 private:
  void assign_variables() {
    std::map<char, int> counts;
    vars_.resize(g_.size());
    for (const auto& v : g_.vertices()) {
      if (!v.is_instance()) continue;
      char c = v.content.front().empty() ? 'x' : v.content.front()[0];
      if (!std::isalpha(static_cast<unsigned char>(c))) c = 'x';
      int n = ++counts[c];
      vars_[v.id] = n == 1 ? std::string(1, c) : std::string(1, c) + std::to_string(n);
    }
  }

  struct Child {
    std::string label;
    bool reverse;
    int vertex;
    int edge;
  };

  void write_instance(int id, int depth, std::string& out) {
    visited_[id] = 1;
    const Vertex& v = g_.vertex(id);
    out += '(';
    out += vars_[id];
    out += " / ";
    out += compose_vertex(v.content, v.sense);

    std::vector<Child> children;
    for (int k : incident_[id]) {
      if (used_edge_[k]) continue;
      const Edge& e = g_.edges()[k];
      if (e.src == id)
        children.push_back({e.label, e.reverse, e.dst, k});
      else
        children.push_back({e.label, !e.reverse, e.src, k});
    }
    std::sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
      if (a.label != b.label) return a.label < b.label;
      if (a.reverse != b.reverse) return a.reverse < b.reverse;
      return a.vertex < b.vertex;
    });
    for (const auto& c : children) {
      if (used_edge_[c.edge]) continue;
      used_edge_[c.edge] = 1;
      if (style_.indent) {
        out += '\n';
        out.append(static_cast<std::size_t>(depth + 1) * 6, ' ');
      } else {
        out += ' ';
      }
      out += ':';
      out += compose_edge(c.label, c.reverse);
      out += ' ';
      const Vertex& child = g_.vertex(c.vertex);
      if (!child.is_instance()) {
        visited_[c.vertex] = 1;
        write_literal(child, out);
      } else if (visited_[c.vertex]) {
        out += vars_[c.vertex];
      } else {
        write_instance(c.vertex, depth + 1, out);
      }
    }
    out += ')';
  }

  static void write_literal(const Vertex& v, std::string& out) {
    const std::string& lit = v.content.front();
    if (v.quoted) {
      out += '"';
      for (char c : lit) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      out += '"';
    } else {
      out += lit;
    }
  }

  const AmrGraph& g_;
  PenmanStyle style_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::string> vars_;
  std::vector<char> visited_;
  std::vector<char> used_edge_;
};

}  // namespace

std::string write_penman(const AmrGraph& graph, PenmanStyle style) {
  graph.validate();
  return Writer(graph, style).write();
}

}  // namespace bfamr

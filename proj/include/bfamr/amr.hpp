#pragma once

// AMR graph data model.
//
// A vertex is split into type, content and sense ("end-01" -> content
// ["end"], sense "01"); an edge into a bare label and a reverse flag
// ("ARG1-of" -> label "ARG1", reverse). Edges are stored in the orientation
// they were read in: src is the vertex the relation was written under. The
// semantic direction of a reversed edge is dst -> src.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bfamr {

enum class VertexType { Instance, Attribute };

struct Vertex {
  int id = 0;
  VertexType type = VertexType::Instance;
  std::vector<std::string> content;
  std::optional<std::string> sense;
  // Attribute literal was written in double quotes.
  bool quoted = false;

  bool is_instance() const { return type == VertexType::Instance; }
  // Content words joined by a single space; one refinement unit.
  std::string content_unit() const;
};

struct Edge {
  int src = 0;
  int dst = 0;
  std::string label;
  bool reverse = false;

  // (source, target) of the relation as it reads semantically.
  int semantic_src() const { return reverse ? dst : src; }
  int semantic_dst() const { return reverse ? src : dst; }
};

struct Neighbour {
  int vertex = 0;
  std::string label;
  bool reverse = false;
};

// Per-vertex incident edges, both directions, reverse flag relative to the
// listing vertex.
using NeighbourSet = std::vector<std::vector<Neighbour>>;

inline constexpr std::string_view kReverseSuffix = "-of";

class AmrGraph {
 public:
  AmrGraph() = default;

  int add_vertex(VertexType type, std::vector<std::string> content,
                 std::optional<std::string> sense = std::nullopt,
                 bool quoted = false);
  void add_edge(int src, int dst, std::string label, bool reverse);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vertex& vertex(int id) const { return vertices_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(vertices_.size()); }
  int root() const { return root_; }
  void set_root(int r) { root_ = r; }

  bool has_edge(int src, int dst, std::string_view label) const;
  // True when any stored edge joins a and b under the same semantic
  // (source, target, label) as the given one.
  bool has_semantic_edge(int sem_src, int sem_dst, std::string_view label) const;

  int instance_count() const;

  // Throws UserError naming the violated invariant.
  void validate() const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  int root_ = 0;
};

// "go-back-19" -> (["go","back"], "19"). Attributes are kept whole.
std::pair<std::vector<std::string>, std::optional<std::string>> decompose_vertex(
    std::string_view raw, bool is_attribute);
std::string compose_vertex(const std::vector<std::string>& content,
                           const std::optional<std::string>& sense);

// "ARG1-of" -> ("ARG1", true).
std::pair<std::string, bool> decompose_edge(std::string_view raw);
std::string compose_edge(std::string_view label, bool reverse);

NeighbourSet neighbour_sets(const AmrGraph& graph);

// Exact isomorphism up to vertex renumbering, comparing vertex type, content,
// sense, root, and semantic edges (a reversed edge equals its forward twin).
bool is_isomorphic(const AmrGraph& a, const AmrGraph& b);

}  // namespace bfamr

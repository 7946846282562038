#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace pcsym {

using VertexId = std::uint32_t;

/// Thrown on malformed inputs: bad graph edges, bad JSON, bad programs.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Directed graph over dense vertex ids 0..vertex_count-1.
/// Duplicate edges and self-loops are rejected at insertion.
class Graph {
public:
  Graph() = default;
  explicit Graph(VertexId vertex_count) : succ_(vertex_count), pred_(vertex_count) {}

  VertexId vertex_count() const { return static_cast<VertexId>(succ_.size()); }
  std::size_t edge_count() const { return edge_count_; }

  VertexId add_vertex();
  void add_edge(VertexId u, VertexId v);
  bool has_edge(VertexId u, VertexId v) const;

  /// Successor/predecessor lists are kept sorted ascending so every
  /// traversal in the library is deterministic without extra sorting.
  const std::vector<VertexId>& successors(VertexId v) const { return succ_.at(v); }
  const std::vector<VertexId>& predecessors(VertexId v) const { return pred_.at(v); }

  std::vector<std::pair<VertexId, VertexId>> edges() const;

  void set_label(VertexId v, std::string label);
  std::optional<std::string> label(VertexId v) const;
  const std::unordered_map<VertexId, std::string>& labels() const { return labels_; }

  bool operator==(const Graph& other) const;

private:
  void check_vertex(VertexId v) const;

  std::vector<std::vector<VertexId>> succ_;
  std::vector<std::vector<VertexId>> pred_;
  std::unordered_map<VertexId, std::string> labels_;
  std::size_t edge_count_ = 0;
};

/// Boolean reachability relation; reaches(i,j) means a nonempty path i -> j.
/// On a DAG the relation is irreflexive and transitive; on a cyclic graph
/// reaches(i,i) holds exactly when i lies on a cycle.
class ReachabilityMatrix {
public:
  ReachabilityMatrix() = default;
  explicit ReachabilityMatrix(VertexId n) : n_(n), bits_(std::size_t{n} * n, false) {}

  VertexId vertex_count() const { return n_; }
  bool reaches(VertexId i, VertexId j) const { return bits_[std::size_t{i} * n_ + j]; }
  void set(VertexId i, VertexId j) { bits_[std::size_t{i} * n_ + j] = true; }

private:
  VertexId n_ = 0;
  std::vector<bool> bits_;
};

/// Per-source BFS over successor lists.
ReachabilityMatrix reachability(const Graph& g);

bool is_dag(const Graph& g);

/// Topological order (Kahn, min-vertex-id first). Throws ValidationError on cycles.
std::vector<VertexId> topological_order(const Graph& g);

struct InducedSubgraph {
  Graph graph;                         // vertices renumbered 0..|vs|-1
  std::vector<VertexId> to_original;   // new id -> original id
  std::unordered_map<VertexId, VertexId> to_local;  // original id -> new id
};

/// Subgraph induced by `vs`; vertices renumbered in ascending original order.
InducedSubgraph induced_subgraph(const Graph& g, const std::vector<VertexId>& vs);

/// Shortest path u -> v over edges (BFS, ties broken by smallest predecessor
/// id), inclusive of endpoints. Empty when v is unreachable from u.
std::vector<VertexId> shortest_path(const Graph& g, VertexId u, VertexId v);

}  // namespace pcsym

#pragma once

#include <cstdint>
#include <vector>

#include "pcsym/graph.hpp"

namespace pcsym {

/// Bipartite graph with dense left ids 0..left_count-1 and right ids
/// 0..right_count-1. Adjacency kept sorted for deterministic traversal.
class BipartiteGraph {
public:
  BipartiteGraph() = default;
  BipartiteGraph(VertexId left_count, VertexId right_count)
      : left_adj_(left_count), right_count_(right_count) {}

  VertexId left_count() const { return static_cast<VertexId>(left_adj_.size()); }
  VertexId right_count() const { return right_count_; }
  std::size_t edge_count() const { return edge_count_; }

  void add_edge(VertexId left, VertexId right);
  bool has_edge(VertexId left, VertexId right) const;
  const std::vector<VertexId>& right_neighbors(VertexId left) const { return left_adj_.at(left); }

  bool operator==(const BipartiteGraph& other) const {
    return left_adj_ == other.left_adj_ && right_count_ == other.right_count_;
  }

private:
  std::vector<std::vector<VertexId>> left_adj_;
  VertexId right_count_ = 0;
  std::size_t edge_count_ = 0;
};

/// Matching as sorted (left, right) pairs; no index repeats on either side.
struct Matching {
  std::vector<std::pair<VertexId, VertexId>> pairs;

  std::size_t size() const { return pairs.size(); }
  bool operator==(const Matching& other) const { return pairs == other.pairs; }
  bool operator<(const Matching& other) const { return pairs < other.pairs; }
};

/// Validates the matching constraint against `b`; throws ValidationError.
void check_matching(const BipartiteGraph& b, const Matching& m);

/// Maximum bipartite matching, O(E * sqrt(V)) layered augmentation.
/// The seed permutes the order left vertices are taken as augmentation
/// starts, which selects among equal-size maximum matchings deterministically.
Matching hopcroft_karp(const BipartiteGraph& b, std::uint64_t seed = 0);

}  // namespace pcsym

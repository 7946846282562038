#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcsym/bipartite.hpp"
#include "pcsym/graph.hpp"

namespace pcsym {

/// A set of paths covering every vertex of a DAG at least once. Paths in
/// expanded form: consecutive vertices are connected by concrete edges.
/// Paths may share vertices (the cover is reachability-based, not
/// vertex-disjoint).
struct PathCover {
  std::vector<std::vector<VertexId>> paths;

  std::size_t size() const { return paths.size(); }
  bool operator==(const PathCover& other) const { return paths == other.paths; }
};

/// Validates `p` as an expanded cover of g: paths nonempty, consecutive
/// pairs are edges, every vertex covered. Throws ValidationError.
void check_path_cover(const Graph& g, const PathCover& p);

/// PathCover JSON: {"paths": [[v0,v1,...],...], "size": k}.
PathCover path_cover_from_json(const std::string& text);
std::string path_cover_to_json(const PathCover& p);

/// Bipartite graph with one left and one right copy per vertex; edge (i,j)
/// exactly when a nonempty path i -> j exists (i != j on a DAG).
BipartiteGraph to_bipartite(const Graph& g);

/// Merges matched pairs into chains, expands non-edge pairs through shortest
/// concrete paths (ties by smallest vertex id), and adds one path per vertex
/// that no pair touches. No source/sink completion, so distinct matchings
/// keep distinguishable covers. |paths| = |V| - |m.pairs|.
PathCover matching_to_chains(const Matching& m, const Graph& g);

/// Extends `path` in place to run source-to-sink: prepends the shortest route
/// from the nearest zero-in-degree vertex and appends the shortest route to
/// the nearest zero-out-degree vertex (nearest by edge count, ties by
/// smallest vertex id).
void complete_path(const Graph& g, std::vector<VertexId>& path);

/// matching_to_chains with every chain completed to run source-to-sink.
/// |paths| = |V| - |m.pairs|.
PathCover matching_to_mpc(const Matching& m, const Graph& g);

/// One minimum path cover: to_bipartite -> hopcroft_karp -> matching_to_mpc.
/// |result| = |V| - |maximum matching|, which is the minimum (Ntafos/Dilworth).
PathCover compute_mpc(const Graph& g, std::uint64_t seed = 0);

struct BruteForceMpcResult {
  std::size_t min_size = 0;
  /// All minimum covers, as reachability-path (chain) covers, deduplicated up
  /// to path-set equality; paths and covers in canonical sorted order.
  std::vector<PathCover> all_covers;
};

/// Exhaustive minimum-cover search, independent of the matching pipeline:
/// reachability by per-pair DFS probing, covers by branch-and-bound over all
/// chains. Guards: |V| <= limit (default 12).
BruteForceMpcResult brute_force_mpc(const Graph& g, std::size_t limit = 12);

/// Thins each path to its first-occurrence vertices, then maps consecutive
/// pairs of the thinned sequences to matching pairs. For a minimum cover the
/// result has |V| - |paths| pairs and is a maximum matching of to_bipartite(g).
Matching mpc_to_matching(const PathCover& p, const Graph& g);

}  // namespace pcsym

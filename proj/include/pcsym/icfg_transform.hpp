#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pcsym/icfg.hpp"

namespace pcsym {

/// A natural loop: back edges (latch, header) where the header dominates the
/// latch, body = header plus every vertex that reaches a latch without
/// passing the header. Loops sharing a header are merged. Exiting edges
/// leave the body; exit nodes are their targets, outside the body.
struct LoopInfo {
  VertexId header = kNoVertex;
  std::vector<VertexId> body;        // ascending, includes header
  EdgeSet back_edges;                // may describe edges already removed
  EdgeSet exiting_edges;
  std::vector<VertexId> exit_nodes;  // ascending, distinct
};

/// Outcome of carving a region out of a graph. Both output graphs use fresh
/// dense ids: the subgraph keeps region vertices ascending (loop extraction
/// appends one virtual exit copy per exit node), the remainder keeps
/// surviving vertices ascending with the merged virtual vertex appended
/// last. sub_to_orig/rem_to_orig map back to the input graph's ids
/// (kNoVertex for synthesized vertices; a virtual exit copy maps to the exit
/// node it mirrors). orig_to_sub maps region vertices in, and exit nodes to
/// their copies; orig_to_rem maps surviving vertices, and the merged-away
/// entry/exit to merged_vertex.
struct SplitResult {
  Graph subgraph;
  Graph remainder;
  VertexId merged_vertex = kNoVertex;  // in remainder
  VertexId entry = kNoVertex;          // in subgraph
  std::vector<VertexId> exits;         // in subgraph, ascending
  std::vector<VertexId> sub_to_orig;
  std::vector<VertexId> rem_to_orig;
  std::map<VertexId, VertexId> orig_to_sub;
  std::map<VertexId, VertexId> orig_to_rem;
};

/// Immediate dominators from root; idom[root] = root, kNoVertex for
/// vertices unreachable from root. Successors are visited ascending, so the
/// result is deterministic.
std::vector<VertexId> immediate_dominators(const Graph& g, VertexId root);

/// True when a dominates b under the given idom chain (reflexive).
bool dominates(const std::vector<VertexId>& idom, VertexId a, VertexId b);

/// Natural loops of every function, on the intraprocedural view: edges
/// within one function minus call/return edges, plus a local summary edge
/// from each call vertex to its paired return site. Returned ascending by
/// function, then header. Ids are icfg vertex ids. Exiting edges are
/// computed on the same view, so call and return edges never count as
/// leaving a loop, while other loops' back edges do count as given.
std::vector<LoopInfo> find_loops(const ICfg& icfg);

/// Strongly connected components (per function, on the same view as
/// find_loops) that are entered at two or more distinct vertices; such
/// regions are excluded from loop transformation. Each set is ascending;
/// the list is ordered by smallest member.
std::vector<std::vector<VertexId>> detect_extraordinary_loops(const ICfg& icfg);

/// Checks the one-entry-one-exit shape on a standalone graph: acyclic, the
/// only zero-in-degree vertex is entry, the only zero-out-degree vertex is
/// exit. Returns an empty string when the shape holds, else a description
/// naming the violating vertex.
std::string check_one_entry_one_exit(const Graph& sub, VertexId entry, VertexId exit);

/// Checks the loop-subgraph shape: acyclic, the only zero-in-degree vertex
/// is the entry (header), zero-out-degree vertices are exactly the virtual
/// exits plus possibly latches (back-edge sources whose only successor was
/// the removed back edge's header). Returns "" or a description.
std::string check_loop_subgraph(const Graph& sub, VertexId entry,
                                const std::vector<VertexId>& exits,
                                const std::vector<VertexId>& latches);

/// Carves out {v : entry reaches v and v reaches exit} plus entry and exit
/// from an acyclic graph, merging entry and exit into one virtual vertex in
/// the remainder. Refuses (naming the vertex) when the region has a border
/// violation: an interior vertex with an external predecessor, or any
/// non-exit region vertex with an external successor.
SplitResult split_one_entry_one_exit(const Graph& g, VertexId entry, VertexId exit);

/// Extracts a loop body plus one virtual exit copy per exit node; the
/// remainder replaces the body with a merged virtual vertex wired to every
/// exit node. The loop's back edges must already be removed from g; a body
/// entered anywhere besides the header is refused as extraordinary.
SplitResult transform_loop(const Graph& g, const LoopInfo& li);

struct CallerCalleeResult {
  ICfg remainder;
  std::vector<SplitResult> subgraphs;            // one per extracted function
  std::vector<std::uint32_t> subgraph_functions; // function id per subgraph
  std::vector<std::uint32_t> skipped_functions;  // no exit block, or region refused

  /// Extractions renumber the working graph, so each SplitResult's own maps
  /// refer to the previous step's remainder. These map straight back to the
  /// input icfg: one entry per subgraph/remainder vertex, kNoVertex for
  /// synthesized (virtual) vertices.
  std::vector<std::vector<VertexId>> subgraph_to_input;
  std::vector<VertexId> remainder_to_input;
};

/// Eliminates caller-callee cycles in two passes. First every non-entry
/// function is rewired: a virtual return vertex is placed behind its exits,
/// the lowest-id call site whose caller lies outside the function's
/// call-graph cycle keeps its call/return edges (the connecting edges), and
/// every other site's edges are dropped as cycle edges and replaced by a
/// virtual bypass vertex between the call vertex and its return site. Then
/// the rewired functions are carved out callees-first, each region being
/// the function's own vertices (body, stand-ins, virtual return); dead
/// blocks and forward-dead latch vertices are carved along with their
/// function. Functions without an exit block, with a body that is not yet
/// acyclic (remove loop back edges first), or with a border violation (for
/// example a call into a function that could not be carved) are skipped and
/// reported; their bodies stay in the remainder. Function 0 is the program
/// entry and is never extracted. The remainder is a transformed shape, not
/// a valid input icfg: stand-ins absorb entries and return sites.
CallerCalleeResult transform_caller_callee(const ICfg& icfg);

/// Theorem arithmetic for splicing a subgraph cover back into the remainder
/// cover: size_remainder - k + max(size_sub, k). Requires k <= size_remainder.
std::size_t combined_mpc_size(std::size_t size_remainder, std::size_t k, std::size_t size_sub);

enum class KThroughMode {
  kVertex,    // paths that contain (or can be routed through) the merged vertex
  kOutEdges,  // paths that also traverse one of the merged vertex's out-edges
};

/// Brute-force maximum, over every minimum path cover of the remainder, of
/// the number of cover paths through the merged vertex. Counting considers
/// the best realization of each cover: a chain counts when some realization
/// or extension of it passes through the merged vertex (kVertex), or leaves
/// it along an out-edge (kOutEdges). Exhaustive: refuses graphs larger than
/// limit (and limit > 20).
std::size_t max_k_through(const Graph& remainder, VertexId merged, std::size_t limit,
                          KThroughMode mode = KThroughMode::kVertex);

/// One acyclic guided region of a decomposed program.
struct Region {
  enum class Kind { kRoot, kFunction, kLoop };

  Kind kind = Kind::kRoot;
  std::string name;
  Graph graph;
  VertexId entry = kNoVertex;
  std::vector<VertexId> exits;     // virtual return / loop exit copies / program exits
  std::vector<VertexId> to_icfg;   // per vertex: source icfg vertex, or kNoVertex
  std::vector<bool> is_virtual;    // synthesized vertices, excluded from coverage
  std::map<VertexId, std::size_t> descend;  // vertex -> region entered there
  std::vector<VertexId> latches;   // loop regions: back-edge sources (sinks allowed)
};

/// Full decomposition: the root region (entry function) plus one region per
/// extracted function and loop. descend links a merged or bypass vertex to
/// the region a state enters there. Every region graph is acyclic.
struct Decomposition {
  std::vector<Region> regions;
  std::size_t root = 0;
  EdgeSet removed_back_edges;    // icfg edge ids
  EdgeSet unguided_cycle_edges;  // irreducible-region edges removed, left unguided
  std::vector<std::uint32_t> skipped_functions;
};

/// Whole pipeline: natural-loop back edges removed (irreducible regions
/// acyclified along depth-first back edges and reported), caller-callee
/// cycles transformed bottom-up over the call graph, then loops extracted
/// innermost-first within every region.
Decomposition decompose_icfg(const ICfg& icfg);

std::string decomposition_to_json(const Decomposition& d);

}  // namespace pcsym

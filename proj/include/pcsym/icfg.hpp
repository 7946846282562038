#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pcsym/graph.hpp"

namespace pcsym {

/// Sentinel for "no vertex" in id maps and dominator chains.
inline constexpr VertexId kNoVertex = static_cast<VertexId>(-1);

using Edge = std::pair<VertexId, VertexId>;
using EdgeSet = std::set<Edge>;

/// Role a basic-block vertex plays in an interprocedural CFG.
enum class NodeKind : std::uint8_t {
  kEntry,       // function entry block
  kExit,        // block ending in a return
  kCall,        // block segment ending in a call
  kReturnSite,  // block segment entered when a call returns
  kBranch,      // block with two or more intraprocedural successors
  kPlain,       // any other block
  kVirtual,     // synthesized by transformations; carries no program semantics
};

std::string to_string(NodeKind k);
NodeKind node_kind_from_string(const std::string& text);

/// Interprocedural control-flow graph: one vertex per basic-block segment,
/// with the interprocedural structure layered over the plain digraph.
///
/// Conventions enforced by check_icfg:
///  - call_edges / return_edges / back_edges are disjoint subsets of the
///    graph's edges; back edges are intraprocedural;
///  - a call edge goes from a kCall vertex to a kEntry vertex, and the call
///    vertex has no other out-edge;
///  - a return edge ends at a kReturnSite vertex, and return sites have no
///    other in-edges; a kExit vertex has only return-edge out-edges;
///  - every function present has exactly one kEntry vertex;
///  - a callee's call vertices and return-site vertices pair up in ascending
///    vertex-id order (the i-th lowest call vertex resumes at the i-th
///    lowest return site), so both lists must have equal length.
///
/// Function ids are arbitrary except that id 0 names the program entry
/// function wherever a whole program is decomposed or executed.
struct ICfg {
  Graph graph;
  std::vector<NodeKind> kinds;             // one per vertex
  EdgeSet call_edges;
  EdgeSet return_edges;
  EdgeSet back_edges;
  std::vector<std::uint32_t> function_of;  // one per vertex

  VertexId vertex_count() const { return graph.vertex_count(); }
};

/// Validates the conventions above; throws ValidationError on the first
/// violation found.
void check_icfg(const ICfg& icfg);

/// Function ids that own at least one vertex, ascending.
std::vector<std::uint32_t> function_ids(const ICfg& icfg);

/// The unique kEntry vertex of a function; throws if missing or duplicated.
VertexId function_entry(const ICfg& icfg, std::uint32_t function);

/// All kExit vertices of a function, ascending (possibly empty).
std::vector<VertexId> function_exits(const ICfg& icfg, std::uint32_t function);

/// Call sites of a callee as (call vertex, paired return site), ascending by
/// call vertex. Pairing follows the ascending-id convention.
std::vector<Edge> call_sites_of(const ICfg& icfg, std::uint32_t callee);

/// JSON io. The format extends the graph JSON ("vertices", "edges",
/// "labels") with "kinds" (array of kind names), "call_edges" and
/// "return_edges" (arrays of [u,v] pairs) and "functions" (array of
/// per-vertex function ids). "back_edges" is emitted when nonempty and
/// accepted on input. icfg_from_json validates the result.
ICfg icfg_from_json(const std::string& text);
std::string icfg_to_json(const ICfg& icfg);

}  // namespace pcsym

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pcsym/mini_ir.hpp"

namespace pcsym {

/// (function index, block index) into a MiniProgram, ordered for map keys.
using BlockRef = std::pair<std::uint32_t, VertexId>;

/// Dependence relations between branches and the program points that can
/// influence their conditions. Both maps key on the block whose terminator
/// is the branch; keys with empty sets are omitted.
///
/// Scope and semantics (fixed for analysis and oracle alike):
///  - Everything is computed per function over its block-level CFG with
///    loop back edges removed, which must leave a DAG.
///  - A block's effective definition of a variable is its last one: an
///    assignment targets the block itself; a call result targets the block
///    plus the callee's (reachable) return blocks — return values traced
///    one level, with no context sensitivity.
///  - A parameter is defined by the binding at function entry; its targets
///    are every caller's call block, again one level only.
///  - data_dep maps a branch to the defining blocks of its condition
///    variables that reach the branch along some definition-clear path.
///  - potential_dep maps a branch br_i to the earlier branches br_j, in the
///    same function, with one br_j->br_i path on which a condition variable
///    of br_i is never (re)defined and another on which it is. Definitions
///    in br_j's own block precede its fork and do not count; definitions in
///    br_i's block precede the condition and do.
struct DependenceMap {
  std::map<BlockRef, std::set<BlockRef>> data_dep;
  std::map<BlockRef, std::set<BlockRef>> potential_dep;
};

/// Condition variables of a terminator, sorted and deduplicated.
std::vector<std::string> condition_variables(const Terminator& t);

std::map<BlockRef, std::set<BlockRef>> data_dependence(const MiniProgram& p);
std::map<BlockRef, std::set<BlockRef>> potential_dependence(const MiniProgram& p);
DependenceMap analyze_dependence(const MiniProgram& p);

/// JSON object {"data_dep": [...], "potential_dep": [...]}, each entry
/// {"branch": [fn, block], "targets": [[fn, block], ...]}, sorted.
std::string dependence_to_json(const DependenceMap& deps);

}  // namespace pcsym

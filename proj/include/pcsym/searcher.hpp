#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pcsym/dependence.hpp"
#include "pcsym/icfg_transform.hpp"
#include "pcsym/mini_ir.hpp"
#include "pcsym/mpc_enum.hpp"

namespace pcsym {

/// State-selection strategies for the symbolic engine. kEmpc follows
/// minimum-path-cover guidance; the others are classic baselines.
enum class Strategy { kEmpc, kBfs, kDfs, kRandomState, kRandomPath };

Strategy strategy_from_string(const std::string& name);  // ValidationError
std::string to_string(Strategy s);
extern const std::vector<Strategy> kAllStrategies;

enum class StateStatus : std::uint8_t { kActive, kIgnored, kCompleted, kInfeasible };

/// One symbolic execution state: a path prefix plus the machinery to resume
/// it. Forks reuse the parent for the then-arm (its id survives) and spawn a
/// fresh state for the else-arm, whose fork_parent records the lineage. An
/// ignored state keeps a valid prefix and may be revived later; infeasible
/// and completed states are terminal.
struct SymState {
  std::uint64_t id = 0;
  PathPrefix prefix;
  StateStatus status = StateStatus::kActive;
  std::optional<std::uint64_t> fork_parent;

  /// Call stack for resumption: (function, block, next statement, segment).
  struct Frame {
    std::uint32_t fn = 0;
    VertexId block = 0;
    std::size_t stmt = 0;
    std::uint32_t seg = 0;  // increments at each wired-call resumption
  };
  std::vector<Frame> stack;

  /// Cover-guidance position: one entry per region the state is inside.
  struct RegionPos {
    std::size_t region = 0;
    VertexId vertex = kNoVertex;
    std::vector<VertexId> subpath;     // region vertices since this entry
    std::vector<VertexId> designated;  // cover path this entry follows; empty = none
    std::size_t designated_index = 0;  // rank of the designated path
  };
  std::vector<RegionPos> rstack;
  bool untracked = false;   // region tracking lost; matches nothing
  std::uint8_t last_move = 0;  // transient: what the last tracking advance did

  /// A concrete input assignment whose run realizes this prefix, plus its
  /// full trace; lets one fork child inherit feasibility without an oracle
  /// call. Absent when feasibility came back unknown.
  std::optional<std::map<std::string, long long>> witness;
  PathPrefix witness_trace;
  bool witness_truncated = false;
};

/// Per-region group of minimum path covers guiding selection. Covers that
/// stop matching committed subpaths are pruned, but never below one: a
/// prune that would empty the group is skipped and flags it exhausted.
struct MpcGroup {
  std::vector<PathCover> covers;  // live covers, first is the primary
  bool exhausted = false;
  std::size_t cursor = 0;  // next designated path (per-entry consumption)
  std::vector<std::vector<VertexId>> designable;  // cursor targets (loop body paths only, for loops)
  std::vector<std::vector<VertexId>> committed;   // pruning evidence, for inspection
};

/// Deterministic run record. Wall-clock samples are informational only:
/// equality and canonical serialization cover the step-indexed fields, so
/// identical (program, strategy, budget, seed) runs compare equal.
struct RunMetrics {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::size_t completed_paths = 0;
  std::size_t solver_calls = 0;
  std::size_t handler_invocations = 0;
  std::size_t handler_fallbacks = 0;
  std::size_t reachable_blocks = 0;
  std::set<std::pair<std::uint32_t, VertexId>> covered;
  std::vector<std::size_t> covered_series;  // per step, cumulative block count
  std::vector<std::size_t> live_series;     // per step, active + ignored states
  std::vector<std::string> warnings;        // e.g. feasibility oracle unknowns
  std::vector<std::pair<double, std::size_t>> covered_wall;  // (ms, count), informational

  bool operator==(const RunMetrics& o) const;
  bool operator!=(const RunMetrics& o) const { return !(*this == o); }
};

/// JSON object of the deterministic fields; include_wall adds the wall-time
/// samples (off for anything that must be replay-identical). CSV holds the
/// per-step time series: step,covered_blocks,live_states.
std::string metrics_to_json(const RunMetrics& m, bool include_wall = false);
std::string metrics_to_csv(const RunMetrics& m);

/// Node of the fork tree: parent is the state an else-arm was spawned from.
struct ForkNode {
  std::uint64_t id = 0;
  std::optional<std::uint64_t> parent;
  bool selectable = false;
};

/// Uniform root-to-leaf walk: at each node, one option per child subtree
/// that holds a selectable state, plus the node itself when selectable;
/// descends until the node itself is chosen. Requires one root and at least
/// one selectable node.
std::uint64_t random_path_select(const std::vector<ForkNode>& nodes, std::mt19937_64& rng);

struct EngineOptions {
  std::size_t cover_cap = 32;          // max enumerated covers per region
  bool handle_infeasible = true;       // dependence-guided recovery on/off
  FeasibilityBudget feasibility = {};  // forwarded to the fork-time oracle
};

/// The engine: repeatedly selects a state, runs it until the next block
/// entry, fork, or completion, and checks both fork children against the
/// feasibility oracle. One run is single-threaded. Deterministic for a
/// given (program, strategy, seed, options).
///
/// Cover guidance (kEmpc): the program's interprocedural CFG is decomposed
/// into acyclic regions; each region carries a group of enumerated minimum
/// path covers. Entering a region (calls, loop iterations) consumes the next
/// designated cover path; states whose subpath leaves both the designated
/// path and every live cover are ignored at forks in favor of the matching
/// sibling; committed subpaths prune the group (never below one cover). A
/// designated or matched arm that proves infeasible records the blocked
/// branch; selection falls back to the dependence-guided handler, which
/// revives the nearest state that reached a block the branch depends on.
/// The engine stops when no active state matches, no recovery is pending,
/// and coverage is complete — or when nothing is left to run.
class Engine {
 public:
  Engine(const MiniProgram& p, Strategy strategy, std::uint64_t seed,
         EngineOptions options = {});

  /// One select-and-execute step; false when the run is over.
  bool step();
  void run(std::size_t budget);

  const RunMetrics& metrics() const { return metrics_; }
  const std::vector<SymState>& states() const { return states_; }
  const std::vector<MpcGroup>& groups() const { return groups_; }
  const Decomposition& decomposition() const { return dec_; }
  const std::vector<std::uint64_t>& selection_trace() const { return selected_; }

 private:
  struct BlockedBranch {
    std::uint32_t fn = 0;
    VertexId branch_block = 0;
    VertexId target_block = 0;
  };

  SymState* select();
  SymState* select_empc();
  SymState* select_baseline();
  // States are addressed by index: forking appends to states_ and would
  // invalidate references held across the call.
  void execute(std::size_t idx);
  void fork(std::size_t idx);
  void enter_block(SymState& s, std::uint32_t fn, VertexId block);
  void resume_caller(SymState& s);
  bool check_feasible(SymState& child);
  void record_coverage(std::uint32_t fn, VertexId block);

  // Region tracking (kEmpc).
  void init_region_stack(SymState& s);
  void advance_region(SymState& s, VertexId icfg_vertex);
  bool hop_search(SymState& s, VertexId target);
  void begin_instance(SymState& s, std::size_t region, VertexId at);
  std::optional<std::size_t> match_rank(const SymState& s) const;
  void commit(SymState& s);
  SymState* handle_infeasible();
  std::uint64_t pick_uniform(std::uint64_t n);

  const MiniProgram p_;
  Strategy strategy_;
  EngineOptions opt_;
  std::mt19937_64 rng_;
  LoweredProgram low_;
  std::vector<std::vector<std::vector<VertexId>>> seg_vertex_;  // [fn][block] -> segment vertices
  std::vector<bool> fn_returns_;
  Decomposition dec_;
  std::vector<MpcGroup> groups_;
  std::vector<std::map<VertexId, VertexId>> region_vertex_of_;  // icfg id -> region vertex
  DependenceMap deps_;
  std::map<BlockRef, std::vector<BlockRef>> backward_;  // block-level reverse edges
  std::vector<SymState> states_;
  std::uint64_t next_id_ = 0;
  std::optional<BlockedBranch> blocked_;
  RunMetrics metrics_;
  std::vector<std::uint64_t> selected_;
  std::chrono::steady_clock::time_point start_;
};

/// Convenience wrapper: construct, run `budget` steps, return the metrics.
RunMetrics engine_run(const MiniProgram& p, Strategy strategy, std::size_t budget,
                      std::uint64_t seed, EngineOptions options = {});

}  // namespace pcsym

#include "pcsym/searcher.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pcsym/path_cover.hpp"

namespace pcsym {

namespace {

using Json = nlohmann::json;

/// True when `sub` occurs as a contiguous run inside `path`.
bool contains_run(const std::vector<VertexId>& path, const std::vector<VertexId>& sub) {
  if (sub.empty()) return true;
  if (sub.size() > path.size()) return false;
  for (std::size_t i = 0; i + sub.size() <= path.size(); ++i) {
    if (std::equal(sub.begin(), sub.end(), path.begin() + i)) return true;
  }
  return false;
}

bool is_prefix(const std::vector<VertexId>& shorter, const std::vector<VertexId>& longer) {
  return shorter.size() <= longer.size() &&
         std::equal(shorter.begin(), shorter.end(), longer.begin());
}

}  // namespace

const std::vector<Strategy> kAllStrategies = {
    Strategy::kEmpc, Strategy::kBfs, Strategy::kDfs, Strategy::kRandomState,
    Strategy::kRandomPath};

Strategy strategy_from_string(const std::string& name) {
  if (name == "empc") return Strategy::kEmpc;
  if (name == "bfs") return Strategy::kBfs;
  if (name == "dfs") return Strategy::kDfs;
  if (name == "random-state") return Strategy::kRandomState;
  if (name == "random-path") return Strategy::kRandomPath;
  throw ValidationError("unknown strategy: " + name);
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kEmpc: return "empc";
    case Strategy::kBfs: return "bfs";
    case Strategy::kDfs: return "dfs";
    case Strategy::kRandomState: return "random-state";
    case Strategy::kRandomPath: return "random-path";
  }
  throw ValidationError("bad strategy value");
}

bool RunMetrics::operator==(const RunMetrics& o) const {
  return strategy == o.strategy && seed == o.seed && steps == o.steps &&
         completed_paths == o.completed_paths && solver_calls == o.solver_calls &&
         handler_invocations == o.handler_invocations &&
         handler_fallbacks == o.handler_fallbacks &&
         reachable_blocks == o.reachable_blocks && covered == o.covered &&
         covered_series == o.covered_series && live_series == o.live_series &&
         warnings == o.warnings;
}

std::string metrics_to_json(const RunMetrics& m, bool include_wall) {
  Json j;
  j["strategy"] = m.strategy;
  j["seed"] = m.seed;
  j["steps"] = m.steps;
  j["completed_paths"] = m.completed_paths;
  j["solver_calls"] = m.solver_calls;
  j["handler_invocations"] = m.handler_invocations;
  j["handler_fallbacks"] = m.handler_fallbacks;
  j["reachable_blocks"] = m.reachable_blocks;
  j["covered_blocks"] = m.covered.size();
  Json covered = Json::array();
  for (const auto& [fn, block] : m.covered) covered.push_back({fn, block});
  j["covered"] = std::move(covered);
  j["covered_series"] = m.covered_series;
  j["live_series"] = m.live_series;
  j["warnings"] = m.warnings;
  if (include_wall) {
    Json wall = Json::array();
    for (const auto& [ms, count] : m.covered_wall) wall.push_back({ms, count});
    j["covered_wall"] = std::move(wall);
  }
  return j.dump(2) + "\n";
}

std::string metrics_to_csv(const RunMetrics& m) {
  std::ostringstream out;
  out << "step,covered_blocks,live_states\n";
  for (std::size_t i = 0; i < m.covered_series.size(); ++i) {
    out << (i + 1) << ',' << m.covered_series[i] << ','
        << (i < m.live_series.size() ? m.live_series[i] : 0) << '\n';
  }
  return out.str();
}

std::uint64_t random_path_select(const std::vector<ForkNode>& nodes, std::mt19937_64& rng) {
  std::map<std::uint64_t, std::vector<std::uint64_t>> children;
  std::map<std::uint64_t, const ForkNode*> by_id;
  std::optional<std::uint64_t> root;
  for (const ForkNode& n : nodes) {
    by_id[n.id] = &n;
    if (n.parent) {
      children[*n.parent].push_back(n.id);
    } else {
      if (root) throw ValidationError("random_path_select: more than one root");
      root = n.id;
    }
  }
  if (!root) throw ValidationError("random_path_select: no root");
  // has_selectable[id]: the subtree rooted at id holds a selectable node.
  std::map<std::uint64_t, bool> has_selectable;
  std::function<bool(std::uint64_t)> mark = [&](std::uint64_t id) {
    bool any = by_id.at(id)->selectable;
    for (std::uint64_t c : children[id]) any = mark(c) || any;
    has_selectable[id] = any;
    return any;
  };
  if (!mark(*root)) throw ValidationError("random_path_select: nothing selectable");
  std::uint64_t cur = *root;
  for (;;) {
    std::vector<std::optional<std::uint64_t>> options;  // nullopt = stop here
    if (by_id.at(cur)->selectable) options.push_back(std::nullopt);
    for (std::uint64_t c : children[cur]) {
      if (has_selectable.at(c)) options.push_back(c);
    }
    const auto& pick = options[static_cast<std::size_t>(rng() % options.size())];
    if (!pick) return cur;
    cur = *pick;
  }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

namespace {

/// What the last region-tracking advance did; drives loop-boundary logic.
enum class Move : std::uint8_t { kNone, kLocal, kPush, kPop, kRestart, kReset, kLost };

/// One tracking hop found by the search: advance within the region, descend
/// into a sub-region, or pop back out of one.
struct HopOp {
  enum class Kind : std::uint8_t { kLocal, kPush, kPop } kind;
  VertexId vertex = kNoVertex;   // kLocal: vertex moved to
  std::size_t region = 0;        // kPush: region entered
};

}  // namespace

Engine::Engine(const MiniProgram& p, Strategy strategy, std::uint64_t seed,
               EngineOptions options)
    : p_(p), strategy_(strategy), opt_(options), rng_(seed), low_(build_icfg(p)) {
  if (opt_.cover_cap == 0) opt_.cover_cap = 1;
  metrics_.strategy = to_string(strategy);
  metrics_.seed = seed;
  start_ = std::chrono::steady_clock::now();

  // Per-(function, block) segment vertices, in segment order.
  seg_vertex_.resize(p_.functions.size());
  for (std::size_t f = 0; f < p_.functions.size(); ++f) {
    seg_vertex_[f].resize(p_.functions[f].blocks.size());
  }
  for (VertexId v = 0; v < low_.icfg.vertex_count(); ++v) {
    const VertexOrigin& o = low_.origin[v];
    if (o.block == kNoVertex) continue;  // synthetic function entry
    auto& segs = seg_vertex_[low_.fn_from_icfg[o.function]][o.block];
    if (segs.size() <= o.segment) segs.resize(o.segment + 1, kNoVertex);
    segs[o.segment] = v;
  }
  fn_returns_.resize(p_.functions.size(), false);
  for (std::size_t f = 0; f < p_.functions.size(); ++f) {
    fn_returns_[f] = !function_exits(low_.icfg, low_.fn_to_icfg[f]).empty();
  }

  // Reachable-block denominator: blocks alive in the lowering, restricted to
  // functions reachable through call statements from the entry function.
  {
    std::vector<bool> fn_seen(p_.functions.size(), false);
    std::vector<std::size_t> work = {p_.entry_function};
    fn_seen[p_.entry_function] = true;
    while (!work.empty()) {
      const std::size_t f = work.back();
      work.pop_back();
      const Function& fn = p_.functions[f];
      for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        if (low_.block_vertex[f][b] == kNoVertex) continue;
        metrics_.reachable_blocks++;
        for (const Statement& st : fn.blocks[b].statements) {
          if (st.kind != Statement::Kind::kCall) continue;
          const std::size_t callee = p_.function_index(st.callee);
          if (!fn_seen[callee]) {
            fn_seen[callee] = true;
            work.push_back(callee);
          }
        }
      }
    }
  }

  if (strategy_ == Strategy::kEmpc) {
    dec_ = decompose_icfg(low_.icfg);
    deps_ = analyze_dependence(p_);

    // Cover groups: enumerate minimum path covers per region and complete
    // every chain to run source-to-sink so designated paths are walkable.
    groups_.resize(dec_.regions.size());
    region_vertex_of_.resize(dec_.regions.size());
    for (std::size_t r = 0; r < dec_.regions.size(); ++r) {
      const Region& region = dec_.regions[r];
      MpcSet ms = enumerate_mpcs(region.graph, opt_.cover_cap, 0);
      std::vector<PathCover> covers;
      std::set<std::vector<std::vector<VertexId>>> seen;
      for (PathCover& c : ms.covers) {
        for (auto& path : c.paths) complete_path(region.graph, path);
        if (seen.insert(c.paths).second) covers.push_back(std::move(c));
      }
      if (covers.empty()) covers.push_back(compute_mpc(region.graph, 0));
      MpcGroup& g = groups_[r];
      g.covers = std::move(covers);
      // Designated (cursor-consumed) paths: for loops only the iterating
      // paths, i.e. those ending at a latch; pure exit paths are taken when
      // iteration guidance runs out.
      const std::set<VertexId> latches(region.latches.begin(), region.latches.end());
      for (const auto& path : g.covers.front().paths) {
        if (region.kind == Region::Kind::kLoop && !latches.count(path.back())) continue;
        g.designable.push_back(path);
      }
      for (VertexId v = 0; v < region.graph.vertex_count(); ++v) {
        if (region.is_virtual[v] || region.to_icfg[v] == kNoVertex) continue;
        region_vertex_of_[r].emplace(region.to_icfg[v], v);
      }
    }

    // Block-level reverse adjacency for the dependence-guided handler:
    // intraprocedural predecessors, call blocks behind callee entries, and
    // callee return blocks behind blocks that call them.
    for (std::size_t f = 0; f < p_.functions.size(); ++f) {
      const Function& fn = p_.functions[f];
      for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        if (low_.block_vertex[f][b] == kNoVertex) continue;
        const BlockRef here{static_cast<std::uint32_t>(f), static_cast<VertexId>(b)};
        const Terminator& t = fn.blocks[b].term;
        std::vector<std::string> targets;
        if (t.kind == Terminator::Kind::kGoto) targets = {t.then_target};
        if (t.kind == Terminator::Kind::kBranch) targets = {t.then_target, t.else_target};
        for (const std::string& label : targets) {
          const auto tb = static_cast<VertexId>(fn.block_index(label));
          backward_[{here.first, tb}].push_back(here);
        }
        for (const Statement& st : fn.blocks[b].statements) {
          if (st.kind != Statement::Kind::kCall) continue;
          const auto callee = static_cast<std::uint32_t>(p_.function_index(st.callee));
          backward_[{callee, 0}].push_back(here);
          if (!fn_returns_[callee]) continue;
          const Function& cf = p_.functions[callee];
          for (std::size_t rb = 0; rb < cf.blocks.size(); ++rb) {
            if (low_.block_vertex[callee][rb] == kNoVertex) continue;
            if (cf.blocks[rb].term.kind != Terminator::Kind::kReturn) continue;
            backward_[here].push_back({callee, static_cast<VertexId>(rb)});
          }
        }
      }
    }
    for (auto& [block, preds] : backward_) {
      std::sort(preds.begin(), preds.end());
      preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    }
  }

  // Initial state: entry function, entry block, witnessed by the all-lows
  // input assignment (any concrete run realizes the unconstrained prefix).
  SymState s0;
  s0.id = next_id_++;
  s0.stack.push_back({static_cast<std::uint32_t>(p_.entry_function), 0, 0, 0});
  s0.prefix.blocks.emplace_back(static_cast<std::uint32_t>(p_.entry_function), 0);
  std::map<std::string, long long> lows;
  for (const InputDecl& in : p_.inputs) lows[in.name] = in.lo;
  const ConcreteResult run =
      run_concrete(p_, lows, opt_.feasibility.max_steps, opt_.feasibility.max_depth);
  s0.witness = lows;
  s0.witness_trace = run.trace;
  s0.witness_truncated = run.truncated;
  if (strategy_ == Strategy::kEmpc) init_region_stack(s0);
  states_.push_back(std::move(s0));
  record_coverage(p_.entry_function, 0);
}

void Engine::record_coverage(std::uint32_t fn, VertexId block) {
  const auto [it, inserted] = metrics_.covered.emplace(fn, block);
  (void)it;
  if (inserted) {
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start_)
                          .count();
    metrics_.covered_wall.emplace_back(ms, metrics_.covered.size());
  }
}

void Engine::init_region_stack(SymState& s) {
  const Region& root = dec_.regions[dec_.root];
  begin_instance(s, dec_.root, root.entry);
  advance_region(s, low_.block_vertex[p_.entry_function][0]);
}

void Engine::begin_instance(SymState& s, std::size_t region, VertexId at) {
  SymState::RegionPos pos;
  pos.region = region;
  pos.vertex = at;
  pos.subpath = {at};
  MpcGroup& g = groups_[region];
  if (g.cursor < g.designable.size()) {
    pos.designated = g.designable[g.cursor];
    pos.designated_index = g.cursor;
    g.cursor++;
  }
  s.rstack.push_back(std::move(pos));
}

bool Engine::hop_search(SymState& s, VertexId target) {
  // Deterministic DFS for a route from the current region position to a
  // vertex whose icfg image is `target`. Intermediate vertices must be
  // silent: virtual, or images of synthetic entry / appended exit segments.
  // Region exits are crossed and popped; descend vertices push sub-regions.
  struct Level {
    std::size_t region;
    VertexId vertex;
  };
  std::vector<Level> stack;
  for (const auto& pos : s.rstack) stack.push_back({pos.region, pos.vertex});
  std::set<std::pair<std::size_t, VertexId>> visited;
  std::vector<HopOp> ops;
  std::vector<HopOp> found;

  auto silent = [&](const Region& r, VertexId q) {
    if (r.is_virtual[q]) return true;
    const VertexId icfg_v = r.to_icfg[q];
    if (icfg_v == kNoVertex) return true;
    const NodeKind k = low_.icfg.kinds[icfg_v];
    return k == NodeKind::kEntry || k == NodeKind::kExit;
  };

  std::function<bool()> dfs = [&]() -> bool {
    if (ops.size() > 64) return false;
    const Level top = stack.back();
    const Region& r = dec_.regions[top.region];
    const bool at_exit =
        std::find(r.exits.begin(), r.exits.end(), top.vertex) != r.exits.end();
    if (at_exit && stack.size() > 1) {
      stack.pop_back();
      ops.push_back({HopOp::Kind::kPop, kNoVertex, 0});
      if (dfs()) return true;
      ops.pop_back();
      stack.push_back(top);
      return false;
    }
    for (VertexId q : r.graph.successors(top.vertex)) {
      if (!visited.insert({top.region, q}).second) continue;
      const auto desc = r.descend.find(q);
      const bool q_exit = std::find(r.exits.begin(), r.exits.end(), q) != r.exits.end();
      if (!q_exit && desc == r.descend.end() && r.to_icfg[q] == target) {
        ops.push_back({HopOp::Kind::kLocal, q, 0});
        found = ops;
        return true;
      }
      if (desc != r.descend.end()) {
        // Cross the stand-in (parent stays on it) and enter the sub-region.
        const std::size_t sub = desc->second;
        const Region& rsub = dec_.regions[sub];
        ops.push_back({HopOp::Kind::kLocal, q, 0});
        ops.push_back({HopOp::Kind::kPush, kNoVertex, sub});
        if (rsub.to_icfg[rsub.entry] == target) {
          found = ops;
          return true;
        }
        if (silent(rsub, rsub.entry)) {
          stack.back().vertex = q;
          stack.push_back({sub, rsub.entry});
          if (dfs()) return true;
          stack.pop_back();
          stack.back().vertex = top.vertex;
        }
        ops.pop_back();
        ops.pop_back();
        continue;
      }
      if (q_exit || silent(r, q)) {
        ops.push_back({HopOp::Kind::kLocal, q, 0});
        stack.back().vertex = q;
        if (dfs()) return true;
        stack.back().vertex = top.vertex;
        ops.pop_back();
      }
    }
    return false;
  };

  if (!dfs()) return false;

  // Replay the found route on the real region stack.
  Move net = Move::kLocal;
  for (const HopOp& op : found) {
    switch (op.kind) {
      case HopOp::Kind::kLocal: {
        SymState::RegionPos& top = s.rstack.back();
        top.vertex = op.vertex;
        top.subpath.push_back(op.vertex);
        break;
      }
      case HopOp::Kind::kPush: {
        const Region& rsub = dec_.regions[op.region];
        begin_instance(s, op.region, rsub.entry);
        net = Move::kPush;
        break;
      }
      case HopOp::Kind::kPop:
        s.rstack.pop_back();
        net = Move::kPop;
        break;
    }
  }
  s.last_move = static_cast<std::uint8_t>(net);
  return true;
}

void Engine::advance_region(SymState& s, VertexId icfg_vertex) {
  if (strategy_ != Strategy::kEmpc || s.untracked || s.rstack.empty()) return;
  if (icfg_vertex == kNoVertex) {
    s.untracked = true;
    s.last_move = static_cast<std::uint8_t>(Move::kLost);
    return;
  }
  if (hop_search(s, icfg_vertex)) return;

  // No guided route. Try, outward from the innermost region: restarting a
  // loop at its header (a removed back edge was taken), then jumping to the
  // vertex anywhere in the region (an unguided edge was taken).
  while (!s.rstack.empty()) {
    const std::size_t region = s.rstack.back().region;
    const Region& r = dec_.regions[region];
    if (r.kind == Region::Kind::kLoop && r.to_icfg[r.entry] == icfg_vertex) {
      s.rstack.pop_back();
      begin_instance(s, region, r.entry);
      s.last_move = static_cast<std::uint8_t>(Move::kRestart);
      return;
    }
    const auto it = region_vertex_of_[region].find(icfg_vertex);
    if (it != region_vertex_of_[region].end()) {
      SymState::RegionPos& top = s.rstack.back();
      top.vertex = it->second;
      top.subpath = {it->second};
      s.last_move = static_cast<std::uint8_t>(Move::kReset);
      return;
    }
    s.rstack.pop_back();
  }
  s.untracked = true;
  s.last_move = static_cast<std::uint8_t>(Move::kLost);
}

std::optional<std::size_t> Engine::match_rank(const SymState& s) const {
  if (strategy_ != Strategy::kEmpc || s.untracked || s.rstack.empty()) return std::nullopt;
  const SymState::RegionPos& top = s.rstack.back();
  if (!top.designated.empty() && contains_run(top.designated, top.subpath)) {
    return top.designated_index;
  }
  const MpcGroup& g = groups_[top.region];
  std::optional<std::size_t> best;
  for (const PathCover& cover : g.covers) {
    for (std::size_t k = 0; k < cover.paths.size(); ++k) {
      if (best && k >= *best) break;
      if (contains_run(cover.paths[k], top.subpath)) {
        best = k;
        break;
      }
    }
  }
  return best;
}

void Engine::commit(SymState& s) {
  if (strategy_ != Strategy::kEmpc || s.untracked || s.rstack.empty()) return;
  if (!match_rank(s)) return;  // never prune on unmatched evidence
  const SymState::RegionPos& top = s.rstack.back();
  MpcGroup& g = groups_[top.region];
  std::vector<PathCover> live;
  for (PathCover& c : g.covers) {
    const bool ok = std::any_of(c.paths.begin(), c.paths.end(), [&](const auto& path) {
      return contains_run(path, top.subpath);
    });
    if (ok) live.push_back(std::move(c));
  }
  if (live.empty()) {
    g.exhausted = true;  // pruning floor: keep the group rather than empty it
  } else {
    g.covers = std::move(live);
  }
  if (!g.committed.empty() && is_prefix(g.committed.back(), top.subpath)) {
    g.committed.back() = top.subpath;
  } else {
    g.committed.push_back(top.subpath);
  }
}

bool Engine::check_feasible(SymState& child) {
  if (child.witness && child.witness_trace.starts_with(child.prefix)) return true;
  metrics_.solver_calls++;
  const FeasibilityResult r = feasible(p_, child.prefix, opt_.feasibility);
  if (r.feasible) {
    child.witness = r.witness;
    const ConcreteResult run = run_concrete(p_, *r.witness, opt_.feasibility.max_steps,
                                            opt_.feasibility.max_depth);
    child.witness_trace = run.trace;
    child.witness_truncated = run.truncated;
    return true;
  }
  if (r.unknown) {
    metrics_.warnings.push_back("feasibility unknown for state " +
                                std::to_string(child.id));
    child.witness.reset();
    child.witness_trace = {};
    return true;
  }
  child.status = StateStatus::kInfeasible;
  return false;
}

void Engine::enter_block(SymState& s, std::uint32_t fn, VertexId block) {
  s.prefix.blocks.emplace_back(fn, block);
  advance_region(s, low_.block_vertex[fn][block]);
}

void Engine::resume_caller(SymState& s) {
  SymState::Frame& f = s.stack.back();
  const Statement& call_st = p_.functions[f.fn].blocks[f.block].statements[f.stmt];
  const std::size_t callee = p_.function_index(call_st.callee);
  f.stmt++;
  if (fn_returns_[callee]) {
    f.seg++;
    advance_region(s, seg_vertex_[f.fn][f.block][f.seg]);
  }
}

void Engine::execute(std::size_t idx) {
  for (;;) {
    SymState& s = states_[idx];
    SymState::Frame& f = s.stack.back();
    const Function& fn = p_.functions[f.fn];
    const BasicBlock& bb = fn.blocks[f.block];
    if (f.stmt < bb.statements.size()) {
      const Statement& st = bb.statements[f.stmt];
      if (st.kind == Statement::Kind::kCall) {
        const auto callee = static_cast<std::uint32_t>(p_.function_index(st.callee));
        s.stack.push_back({callee, 0, 0, 0});
        enter_block(s, callee, 0);
        record_coverage(callee, 0);
        return;
      }
      f.stmt++;
      continue;
    }
    const Terminator& t = bb.term;
    if (t.kind == Terminator::Kind::kGoto) {
      const auto tgt = static_cast<VertexId>(fn.block_index(t.then_target));
      f.block = tgt;
      f.stmt = 0;
      f.seg = 0;
      enter_block(s, f.fn, tgt);
      record_coverage(f.fn, tgt);
      return;
    }
    if (t.kind == Terminator::Kind::kBranch) {
      fork(idx);
      return;
    }
    // Return: pop the frame; an empty stack completes the path, otherwise
    // the caller resumes mid-block without a new block entry.
    s.stack.pop_back();
    if (s.stack.empty()) {
      s.status = StateStatus::kCompleted;
      s.rstack.clear();
      metrics_.completed_paths++;
      return;
    }
    resume_caller(s);
  }
}

void Engine::fork(std::size_t idx) {
  // Snapshot before mutation; the then-arm continues in place (same id), the
  // else-arm becomes a fresh state whose fork_parent records the lineage.
  const SymState snapshot = states_[idx];
  const SymState::Frame f = snapshot.stack.back();
  const Function& fn = p_.functions[f.fn];
  const Terminator& t = fn.blocks[f.block].term;
  const auto then_tgt = static_cast<VertexId>(fn.block_index(t.then_target));
  const auto else_tgt = static_cast<VertexId>(fn.block_index(t.else_target));

  const bool pre_loop = strategy_ == Strategy::kEmpc && !snapshot.rstack.empty() &&
                        dec_.regions[snapshot.rstack.back().region].kind ==
                            Region::Kind::kLoop;
  const bool pre_exhausted =
      pre_loop && snapshot.rstack.back().designated.empty();
  const std::size_t pre_depth = snapshot.rstack.size();
  const std::size_t pre_region =
      snapshot.rstack.empty() ? 0 : snapshot.rstack.back().region;

  auto apply = [&](SymState& child, bool decision, VertexId target) {
    child.prefix.decisions.push_back(decision);
    SymState::Frame& cf = child.stack.back();
    cf.block = target;
    cf.stmt = 0;
    cf.seg = 0;
    child.last_move = static_cast<std::uint8_t>(Move::kNone);
    enter_block(child, cf.fn, target);
  };

  SymState else_child = snapshot;
  else_child.id = next_id_;
  else_child.fork_parent = snapshot.id;
  apply(states_[idx], true, then_tgt);
  apply(else_child, false, else_tgt);

  const bool then_ok = check_feasible(states_[idx]);
  const bool else_ok = check_feasible(else_child);
  if (then_ok) record_coverage(f.fn, then_tgt);
  if (else_ok) record_coverage(f.fn, else_tgt);

  if (strategy_ == Strategy::kEmpc) {
    const auto rank_then = match_rank(states_[idx]);
    const auto rank_else = match_rank(else_child);
    const bool m_then = rank_then.has_value();
    const bool m_else = rank_else.has_value();

    auto crossed_boundary = [&](const SymState& c) {
      const auto move = static_cast<Move>(c.last_move);
      if (move == Move::kRestart) return true;
      if (c.rstack.size() < pre_depth) return true;
      return !c.rstack.empty() && c.rstack.size() == pre_depth &&
             c.rstack.back().region != pre_region;
    };
    const bool straddle =
        pre_loop && crossed_boundary(states_[idx]) != crossed_boundary(else_child);

    if (then_ok && else_ok) {
      if (pre_exhausted && straddle) {
        // Iteration guidance is used up: keep the arm that leaves the loop.
        SymState& iterate =
            crossed_boundary(states_[idx]) ? else_child : states_[idx];
        iterate.status = StateStatus::kIgnored;
      } else if (m_then != m_else) {
        SymState& mismatched = m_then ? else_child : states_[idx];
        mismatched.status = StateStatus::kIgnored;
      }
    } else if (then_ok != else_ok) {
      // One arm died. A matched dead arm means a live cover path is
      // unrealizable: remember the blocked branch for the recovery handler,
      // unless the fork straddles a loop boundary, where one arm dying is
      // ordinary bounded-iteration behavior.
      const bool dead_matched = then_ok ? m_else : m_then;
      const bool live_matched = then_ok ? m_then : m_else;
      if (dead_matched && !straddle) {
        blocked_ = BlockedBranch{f.fn, f.block, then_ok ? else_tgt : then_tgt};
      }
      if (dead_matched && !live_matched) {
        (then_ok ? states_[idx] : else_child).status = StateStatus::kIgnored;
      }
    }

    // Committed evidence: exactly one arm both alive and matched means its
    // subpath is the committed continuation; prune that region's group.
    SymState* sole = nullptr;
    const bool then_live = then_ok && states_[idx].status == StateStatus::kActive;
    const bool else_live = else_ok && else_child.status == StateStatus::kActive;
    if (then_live && m_then && !(else_live && m_else)) sole = &states_[idx];
    if (else_live && m_else && !(then_live && m_then)) sole = &else_child;
    if (sole) commit(*sole);
  }

  next_id_++;
  states_.push_back(std::move(else_child));  // invalidates references to states_
}

SymState* Engine::select_baseline() {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i].status == StateStatus::kActive) active.push_back(i);
  }
  if (active.empty()) return nullptr;
  switch (strategy_) {
    case Strategy::kBfs:
      return &states_[active.front()];  // oldest id; states_ is id-ordered
    case Strategy::kDfs:
      return &states_[active.back()];
    case Strategy::kRandomState:
      return &states_[active[static_cast<std::size_t>(pick_uniform(active.size()))]];
    case Strategy::kRandomPath: {
      std::vector<ForkNode> nodes;
      nodes.reserve(states_.size());
      for (const SymState& s : states_) {
        nodes.push_back({s.id, s.fork_parent, s.status == StateStatus::kActive});
      }
      const std::uint64_t id = random_path_select(nodes, rng_);
      return &states_[id];  // ids are assigned densely in creation order
    }
    default:
      return nullptr;
  }
}

SymState* Engine::select_empc() {
  // 1. Matched active states, best (cover-path index, id) first.
  // 2. Matched ignored states: revive and run (their prefixes stayed valid).
  // 3. A recorded blocked branch: dependence-guided recovery.
  // 4. Any active state while coverage is incomplete.
  SymState* best = nullptr;
  std::size_t best_rank = 0;
  for (SymState& s : states_) {
    if (s.status != StateStatus::kActive) continue;
    const auto rank = match_rank(s);
    if (!rank) continue;
    if (!best || *rank < best_rank) {
      best = &s;
      best_rank = *rank;
    }
  }
  if (best) return best;
  for (SymState& s : states_) {
    if (s.status != StateStatus::kIgnored) continue;
    const auto rank = match_rank(s);
    if (!rank) continue;
    if (!best || *rank < best_rank) {
      best = &s;
      best_rank = *rank;
    }
  }
  if (best) {
    best->status = StateStatus::kActive;
    return best;
  }
  if (blocked_ && opt_.handle_infeasible) {
    SymState* recovered = handle_infeasible();
    if (recovered) return recovered;
  }
  if (metrics_.covered.size() < metrics_.reachable_blocks) {
    for (SymState& s : states_) {
      if (s.status == StateStatus::kActive) return &s;
    }
  }
  return nullptr;
}

SymState* Engine::handle_infeasible() {
  metrics_.handler_invocations++;
  const BlockedBranch ctx = *blocked_;
  blocked_.reset();
  const BlockRef br{ctx.fn, ctx.branch_block};
  std::set<BlockRef> targets;
  if (const auto it = deps_.data_dep.find(br); it != deps_.data_dep.end()) {
    targets.insert(it->second.begin(), it->second.end());
  }
  if (const auto it = deps_.potential_dep.find(br); it != deps_.potential_dep.end()) {
    targets.insert(it->second.begin(), it->second.end());
  }

  auto revive = [&](SymState& s) -> SymState* {
    if (s.status == StateStatus::kIgnored) {
      // Temporarily set the mismatch aside: restart subpath tracking at the
      // current position and drop the stale designated path.
      s.status = StateStatus::kActive;
      if (!s.rstack.empty()) {
        SymState::RegionPos& top = s.rstack.back();
        top.subpath = {top.vertex};
        top.designated.clear();
      }
    }
    return &s;
  };

  if (!targets.empty()) {
    // Backward breadth-first layers over the block graph, nearest first; the
    // branch block itself is not its own ancestor.
    std::map<BlockRef, std::size_t> dist;
    dist[br] = 0;
    std::vector<BlockRef> frontier = {br};
    while (!frontier.empty()) {
      std::vector<BlockRef> next;
      for (const BlockRef& b : frontier) {
        const auto it = backward_.find(b);
        if (it == backward_.end()) continue;
        for (const BlockRef& pred : it->second) {
          if (dist.emplace(pred, dist[b] + 1).second) next.push_back(pred);
        }
      }
      std::sort(next.begin(), next.end());
      // States that reached a dependence source in this layer; prefer the
      // ones whose frontier sits closest to it.
      std::vector<std::pair<std::size_t, SymState*>> candidates;
      for (const BlockRef& anc : next) {
        if (!targets.count(anc)) continue;
        for (SymState& s : states_) {
          if (s.status != StateStatus::kActive && s.status != StateStatus::kIgnored) {
            continue;
          }
          const auto& blocks = s.prefix.blocks;
          for (std::size_t i = blocks.size(); i-- > 0;) {
            if (blocks[i] == anc) {
              candidates.emplace_back(blocks.size() - 1 - i, &s);
              break;
            }
          }
        }
      }
      if (!candidates.empty()) {
        const std::size_t dmin =
            std::min_element(candidates.begin(), candidates.end())->first;
        std::vector<SymState*> pool;
        for (const auto& [d, s] : candidates) {
          if (d == dmin) pool.push_back(s);
        }
        return revive(*pool[static_cast<std::size_t>(pick_uniform(pool.size()))]);
      }
      frontier = std::move(next);
    }
  }

  // No dependent ancestor with a live state: strategy-level fallback, a
  // uniform fork-tree walk over everything still alive.
  std::vector<ForkNode> nodes;
  bool any = false;
  for (const SymState& s : states_) {
    const bool alive =
        s.status == StateStatus::kActive || s.status == StateStatus::kIgnored;
    nodes.push_back({s.id, s.fork_parent, alive});
    any = any || alive;
  }
  if (!any) return nullptr;
  metrics_.handler_fallbacks++;
  return revive(states_[random_path_select(nodes, rng_)]);
}

SymState* Engine::select() {
  return strategy_ == Strategy::kEmpc ? select_empc() : select_baseline();
}

std::uint64_t Engine::pick_uniform(std::uint64_t n) {
  return n <= 1 ? 0 : rng_() % n;  // tiny spans; modulo bias is negligible
}

bool Engine::step() {
  SymState* s = select();
  if (!s) return false;
  const auto idx = static_cast<std::size_t>(s - states_.data());
  selected_.push_back(s->id);
  execute(idx);
  if (strategy_ == Strategy::kEmpc && states_[idx].status == StateStatus::kActive) {
    commit(states_[idx]);
  }
  metrics_.steps++;
  metrics_.covered_series.push_back(metrics_.covered.size());
  std::size_t live = 0;
  for (const SymState& st : states_) {
    if (st.status == StateStatus::kActive || st.status == StateStatus::kIgnored) live++;
  }
  metrics_.live_series.push_back(live);
  return true;
}

void Engine::run(std::size_t budget) {
  while (metrics_.steps < budget && step()) {
  }
}

RunMetrics engine_run(const MiniProgram& p, Strategy strategy, std::size_t budget,
                      std::uint64_t seed, EngineOptions options) {
  Engine e(p, strategy, seed, options);
  e.run(budget);
  return e.metrics();
}

}  // namespace pcsym

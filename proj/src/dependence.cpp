#include "pcsym/dependence.hpp"

#include <algorithm>
#include <cstddef>
#include <deque>

#include <json.hpp>

namespace pcsym {
namespace {

void collect_vars(const AffineExpr& e, std::vector<std::string>& out) {
  for (const AffineTerm& t : e.terms)
    if (!t.var.empty()) out.push_back(t.var);
}

/// One function's reachable blocks as a DAG (loop back edges removed), with
/// per-block definition summaries shared by every query on that function.
struct FunctionView {
  std::uint32_t fn = 0;                        // mini function index
  std::vector<VertexId> blocks;                // reachable block indices
  std::map<VertexId, std::vector<VertexId>> succ, pred;
  std::vector<VertexId> topo;                  // entry first
  // Last definition of each variable in the block, mapped to the blocks it
  // stands for (the block itself, plus the callee's return blocks when the
  // value arrives through a call).
  std::map<VertexId, std::map<std::string, std::set<BlockRef>>> gen;
  std::map<std::string, std::set<BlockRef>> param_bindings;  // call blocks per param
};

struct ProgramView {
  std::vector<FunctionView> fns;  // by mini function index
};

ProgramView build_view(const MiniProgram& p) {
  const LoweredProgram low = build_icfg(p);

  // Reachable return blocks per function, for one-level return tracing.
  std::vector<std::set<BlockRef>> return_blocks(p.functions.size());
  // Call blocks per callee, for one-level parameter bindings.
  std::vector<std::set<BlockRef>> call_blocks(p.functions.size());
  for (std::uint32_t fi = 0; fi < p.functions.size(); ++fi) {
    const Function& f = p.functions[fi];
    for (VertexId b = 0; b < f.blocks.size(); ++b) {
      if (low.block_vertex[fi][b] == kNoVertex) continue;
      if (f.blocks[b].term.kind == Terminator::Kind::kReturn)
        return_blocks[fi].insert({fi, b});
      for (const Statement& s : f.blocks[b].statements)
        if (s.kind == Statement::Kind::kCall)
          call_blocks[p.function_index(s.callee)].insert({fi, b});
    }
  }

  // Loop back edges, lifted from segment vertices to block indices.
  std::set<std::pair<BlockRef, BlockRef>> back;
  for (const Edge& e : low.icfg.back_edges) {
    const VertexOrigin& u = low.origin[e.first];
    const VertexOrigin& v = low.origin[e.second];
    const std::uint32_t fi = low.fn_from_icfg[low.icfg.function_of[e.first]];
    back.insert({{fi, u.block}, {fi, v.block}});
  }

  ProgramView view;
  view.fns.resize(p.functions.size());
  for (std::uint32_t fi = 0; fi < p.functions.size(); ++fi) {
    const Function& f = p.functions[fi];
    FunctionView& fv = view.fns[fi];
    fv.fn = fi;
    for (VertexId b = 0; b < f.blocks.size(); ++b) {
      if (low.block_vertex[fi][b] == kNoVertex) continue;
      fv.blocks.push_back(b);
      fv.succ[b];
      fv.pred[b];
    }
    for (VertexId b : fv.blocks) {
      const Terminator& t = f.blocks[b].term;
      std::vector<std::string> targets;
      if (t.kind == Terminator::Kind::kGoto) targets = {t.then_target};
      if (t.kind == Terminator::Kind::kBranch) targets = {t.then_target, t.else_target};
      for (const std::string& label : targets) {
        const VertexId to = f.block_index(label);
        if (back.count({{fi, b}, {fi, to}})) continue;
        fv.succ[b].push_back(to);
        fv.pred[to].push_back(b);
      }
    }

    // Topological order; the back-edge-free graph of a reducible function is
    // acyclic, which everything below relies on.
    std::map<VertexId, std::size_t> indeg;
    for (VertexId b : fv.blocks) indeg[b] = fv.pred[b].size();
    std::deque<VertexId> ready;
    for (VertexId b : fv.blocks)
      if (indeg[b] == 0) ready.push_back(b);
    while (!ready.empty()) {
      const VertexId b = ready.front();
      ready.pop_front();
      fv.topo.push_back(b);
      for (VertexId s : fv.succ[b])
        if (--indeg[s] == 0) ready.push_back(s);
    }
    if (fv.topo.size() != fv.blocks.size())
      throw ValidationError("dependence: function '" + f.name +
                            "' still has a cycle after removing loop back edges");

    for (VertexId b : fv.blocks) {
      std::map<std::string, std::set<BlockRef>>& defs = fv.gen[b];
      for (const Statement& s : f.blocks[b].statements) {
        if (s.kind == Statement::Kind::kNop) continue;
        std::set<BlockRef> targets = {{fi, b}};
        if (s.kind == Statement::Kind::kCall) {
          const std::set<BlockRef>& returns =
              return_blocks[p.function_index(s.callee)];
          targets.insert(returns.begin(), returns.end());
        }
        defs[s.dest] = std::move(targets);
      }
    }

    for (const std::string& param : f.params)
      fv.param_bindings[param] = call_blocks[fi];
  }
  return view;
}

/// Definitions of every variable reaching the end of each block (the point
/// where a terminator reads its condition), by forward may-analysis over the
/// DAG. Entry blocks start from the parameter bindings.
std::map<VertexId, std::map<std::string, std::set<BlockRef>>> reaching_out(
    const FunctionView& fv) {
  std::map<VertexId, std::map<std::string, std::set<BlockRef>>> out;
  for (VertexId b : fv.topo) {
    std::map<std::string, std::set<BlockRef>> in;
    if (fv.pred.at(b).empty()) {
      for (const auto& [param, sites] : fv.param_bindings)
        if (!sites.empty()) in[param] = sites;
    }
    for (VertexId q : fv.pred.at(b))
      for (const auto& [var, defs] : out.at(q))
        in[var].insert(defs.begin(), defs.end());
    for (const auto& [var, defs] : fv.gen.at(b)) in[var] = defs;
    out[b] = std::move(in);
  }
  return out;
}

bool defines(const FunctionView& fv, VertexId b, const std::string& var) {
  return fv.gen.at(b).count(var) != 0;
}

/// Blocks with an edge onto some path to `use` that redefines `var` nowhere,
/// counting definitions inside `use` itself but not inside the source block.
std::set<VertexId> clear_sources(const FunctionView& fv, VertexId use,
                                 const std::string& var) {
  std::set<VertexId> tail;  // suffix is definition-free from here through use
  if (!defines(fv, use, var)) tail.insert(use);
  for (auto it = fv.topo.rbegin(); it != fv.topo.rend(); ++it) {
    const VertexId b = *it;
    if (b == use || defines(fv, b, var) || tail.count(b)) continue;
    for (VertexId s : fv.succ.at(b))
      if (tail.count(s)) {
        tail.insert(b);
        break;
      }
  }
  std::set<VertexId> out;
  for (VertexId b : fv.blocks)
    for (VertexId s : fv.succ.at(b))
      if (tail.count(s)) {
        out.insert(b);
        break;
      }
  return out;
}

/// Blocks with a path to `use` that redefines `var` somewhere strictly after
/// the source block (definitions inside `use` count).
std::set<VertexId> defining_sources(const FunctionView& fv, VertexId use,
                                    const std::string& var) {
  std::set<VertexId> reach = {use};
  for (auto it = fv.topo.rbegin(); it != fv.topo.rend(); ++it)
    for (VertexId s : fv.succ.at(*it))
      if (reach.count(s)) {
        reach.insert(*it);
        break;
      }
  std::set<VertexId> out;
  for (auto it = fv.topo.rbegin(); it != fv.topo.rend(); ++it) {
    const VertexId b = *it;
    for (VertexId s : fv.succ.at(b)) {
      const bool hit = reach.count(s) && defines(fv, s, var);
      if (hit || out.count(s)) {
        out.insert(b);
        break;
      }
    }
  }
  return out;
}

nlohmann::json map_to_json(const std::map<BlockRef, std::set<BlockRef>>& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [branch, targets] : m) {
    nlohmann::json entry;
    entry["branch"] = {branch.first, branch.second};
    nlohmann::json ts = nlohmann::json::array();
    for (const BlockRef& t : targets) ts.push_back({t.first, t.second});
    entry["targets"] = std::move(ts);
    arr.push_back(std::move(entry));
  }
  return arr;
}

}  // namespace

std::vector<std::string> condition_variables(const Terminator& t) {
  std::vector<std::string> vars;
  if (t.kind == Terminator::Kind::kBranch) {
    collect_vars(t.cond.lhs, vars);
    collect_vars(t.cond.rhs, vars);
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

std::map<BlockRef, std::set<BlockRef>> data_dependence(const MiniProgram& p) {
  const ProgramView view = build_view(p);
  std::map<BlockRef, std::set<BlockRef>> result;
  for (const FunctionView& fv : view.fns) {
    const Function& f = p.functions[fv.fn];
    const auto out = reaching_out(fv);
    for (VertexId b : fv.blocks) {
      const Terminator& t = f.blocks[b].term;
      if (t.kind != Terminator::Kind::kBranch) continue;
      std::set<BlockRef> deps;
      for (const std::string& var : condition_variables(t)) {
        auto it = out.at(b).find(var);
        if (it != out.at(b).end()) deps.insert(it->second.begin(), it->second.end());
      }
      if (!deps.empty()) result[{fv.fn, b}] = std::move(deps);
    }
  }
  return result;
}

std::map<BlockRef, std::set<BlockRef>> potential_dependence(const MiniProgram& p) {
  const ProgramView view = build_view(p);
  std::map<BlockRef, std::set<BlockRef>> result;
  for (const FunctionView& fv : view.fns) {
    const Function& f = p.functions[fv.fn];
    std::vector<VertexId> branch_blocks;
    for (VertexId b : fv.blocks)
      if (f.blocks[b].term.kind == Terminator::Kind::kBranch)
        branch_blocks.push_back(b);
    for (VertexId bi : branch_blocks) {
      std::set<BlockRef> deps;
      for (const std::string& var : condition_variables(f.blocks[bi].term)) {
        const std::set<VertexId> clear = clear_sources(fv, bi, var);
        const std::set<VertexId> defining = defining_sources(fv, bi, var);
        for (VertexId bj : branch_blocks)
          if (bj != bi && clear.count(bj) && defining.count(bj))
            deps.insert({fv.fn, bj});
      }
      if (!deps.empty()) result[{fv.fn, bi}] = std::move(deps);
    }
  }
  return result;
}

DependenceMap analyze_dependence(const MiniProgram& p) {
  return {data_dependence(p), potential_dependence(p)};
}

std::string dependence_to_json(const DependenceMap& deps) {
  nlohmann::json j;
  j["data_dep"] = map_to_json(deps.data_dep);
  j["potential_dep"] = map_to_json(deps.potential_dep);
  return j.dump(2) + "\n";
}

}  // namespace pcsym

#include <cstdint>
#include <string>
#include <vector>

#include "pcsym/icfg_transform.hpp"
#include "pcsym/mini_ir.hpp"

namespace pcsym {

namespace {

/// Blocks reachable from the function's entry block over goto/branch targets.
std::vector<bool> reachable_blocks(const Function& f) {
  std::vector<bool> seen(f.blocks.size(), false);
  std::vector<std::size_t> work{0};
  seen[0] = true;
  while (!work.empty()) {
    const std::size_t b = work.back();
    work.pop_back();
    const Terminator& t = f.blocks[b].term;
    const auto visit = [&](const std::string& label) {
      const std::size_t i = f.block_index(label);
      if (!seen[i]) {
        seen[i] = true;
        work.push_back(i);
      }
    };
    if (t.kind == Terminator::Kind::kBranch) {
      visit(t.then_target);
      visit(t.else_target);
    } else if (t.kind == Terminator::Kind::kGoto) {
      visit(t.then_target);
    }
  }
  return seen;
}

}  // namespace

LoweredProgram build_icfg(const MiniProgram& p) {
  const std::size_t nf = p.functions.size();
  LoweredProgram out;

  // main becomes icfg function 0; the rest keep source order after it.
  out.fn_to_icfg.resize(nf);
  out.fn_from_icfg.resize(nf);
  {
    std::uint32_t next = 1;
    for (std::size_t i = 0; i < nf; ++i) {
      const std::uint32_t id = i == p.entry_function ? 0 : next++;
      out.fn_to_icfg[i] = id;
      out.fn_from_icfg[id] = static_cast<std::uint32_t>(i);
    }
  }

  std::vector<std::vector<bool>> reach(nf);
  std::vector<bool> has_return(nf, false);
  for (std::size_t i = 0; i < nf; ++i) {
    reach[i] = reachable_blocks(p.functions[i]);
    for (std::size_t b = 0; b < p.functions[i].blocks.size(); ++b) {
      if (reach[i][b] && p.functions[i].blocks[b].term.kind == Terminator::Kind::kReturn) {
        has_return[i] = true;
      }
    }
  }

  // A call is wired into the graph only when the callee can come back;
  // calls to functions with no reachable return stay opaque statements.
  const auto wired_call = [&](const Statement& s) {
    return s.kind == Statement::Kind::kCall && has_return[p.function_index(s.callee)];
  };

  ICfg& icfg = out.icfg;
  Graph& g = icfg.graph;
  out.block_vertex.resize(nf);

  const auto add_vertex = [&](NodeKind kind, std::uint32_t icfg_fn, const std::string& label,
                              VertexId block, std::uint32_t segment) {
    const VertexId v = g.add_vertex();
    g.set_label(v, label);
    icfg.kinds.push_back(kind);
    icfg.function_of.push_back(icfg_fn);
    out.origin.push_back({icfg_fn, block, segment});
    return v;
  };

  struct PendingCall {
    VertexId call_vertex;
    VertexId return_site;
    std::size_t callee;  // mini function index
  };
  std::vector<PendingCall> pending;
  std::vector<VertexId> entry_vertex(nf, kNoVertex);

  // Vertices and intraprocedural edges, one function at a time in icfg-id
  // order so the entry function's vertices come first.
  for (std::uint32_t id = 0; id < nf; ++id) {
    const std::size_t fi = out.fn_from_icfg[id];
    const Function& f = p.functions[fi];
    out.block_vertex[fi].assign(f.blocks.size(), kNoVertex);
    entry_vertex[fi] = add_vertex(NodeKind::kEntry, id, f.name + ".$entry", kNoVertex, 0);

    // Segment every reachable block. A wired call ends its segment as a
    // call vertex whose only out-edge is the call edge; execution resumes
    // at the following return-site segment via the callee's return edges.
    // A return terminator turns the trailing segment into the exit, unless
    // that segment is a return site, which gets a fresh exit appended.
    struct BlockSegs {
      VertexId first = kNoVertex;
      VertexId last = kNoVertex;  // segment holding the terminator
    };
    std::vector<BlockSegs> segs(f.blocks.size());
    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      if (!reach[fi][b]) continue;
      std::uint32_t seg = 0;
      const auto seg_label = [&](std::uint32_t s) {
        std::string l = f.name + "." + f.blocks[b].label;
        if (s > 0) l += "." + std::to_string(s);
        return l;
      };
      VertexId cur = add_vertex(NodeKind::kPlain, id, seg_label(seg),
                                static_cast<VertexId>(b), seg);
      segs[b].first = cur;
      for (const Statement& s : f.blocks[b].statements) {
        if (!wired_call(s)) continue;
        icfg.kinds[cur] = NodeKind::kCall;
        ++seg;
        const VertexId site = add_vertex(NodeKind::kReturnSite, id, seg_label(seg),
                                         static_cast<VertexId>(b), seg);
        pending.push_back({cur, site, p.function_index(s.callee)});
        cur = site;
      }
      switch (f.blocks[b].term.kind) {
        case Terminator::Kind::kReturn:
          if (icfg.kinds[cur] == NodeKind::kReturnSite) {
            ++seg;
            const VertexId ex = add_vertex(NodeKind::kExit, id, seg_label(seg),
                                           static_cast<VertexId>(b), seg);
            g.add_edge(cur, ex);
            cur = ex;
          } else {
            icfg.kinds[cur] = NodeKind::kExit;
          }
          break;
        case Terminator::Kind::kBranch:
          if (icfg.kinds[cur] == NodeKind::kPlain) icfg.kinds[cur] = NodeKind::kBranch;
          break;
        case Terminator::Kind::kGoto:
          break;
      }
      segs[b].last = cur;
      out.block_vertex[fi][b] = segs[b].first;
    }

    g.add_edge(entry_vertex[fi], segs[0].first);
    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      if (!reach[fi][b]) continue;
      const Terminator& t = f.blocks[b].term;
      if (t.kind == Terminator::Kind::kBranch) {
        g.add_edge(segs[b].last, segs[f.block_index(t.then_target)].first);
        g.add_edge(segs[b].last, segs[f.block_index(t.else_target)].first);
      } else if (t.kind == Terminator::Kind::kGoto) {
        g.add_edge(segs[b].last, segs[f.block_index(t.then_target)].first);
      }
    }
  }

  // Interprocedural wiring. Call vertices were created in ascending order
  // per callee and each return site right after its call vertex, so the
  // call/return-site pairing stays ascending.
  for (const PendingCall& pc : pending) {
    g.add_edge(pc.call_vertex, entry_vertex[pc.callee]);
    icfg.call_edges.insert({pc.call_vertex, entry_vertex[pc.callee]});
  }
  for (const PendingCall& pc : pending) {
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      if (icfg.kinds[v] == NodeKind::kExit &&
          icfg.function_of[v] == out.fn_to_icfg[pc.callee]) {
        g.add_edge(v, pc.return_site);
        icfg.return_edges.insert({v, pc.return_site});
      }
    }
  }

  // Natural-loop back edges, detected per function and annotated.
  for (const LoopInfo& li : find_loops(icfg)) {
    for (const Edge& e : li.back_edges) icfg.back_edges.insert(e);
  }

  check_icfg(icfg);
  return out;
}

}  // namespace pcsym

#include "pcsym/icfg_transform.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "pcsym/graph_io.hpp"
#include "pcsym/path_cover.hpp"

namespace pcsym {

namespace {

std::string edge_str(const Edge& e) {
  return "(" + std::to_string(e.first) + ", " + std::to_string(e.second) + ")";
}

std::string vertex_name(const Graph& g, VertexId v) {
  std::string s = std::to_string(v);
  if (auto l = g.label(v)) s += " (" + *l + ")";
  return s;
}

}  // namespace

std::vector<VertexId> immediate_dominators(const Graph& g, VertexId root) {
  const VertexId n = g.vertex_count();
  if (root >= n) {
    throw ValidationError("dominator root " + std::to_string(root) + " out of range");
  }

  // Postorder from an iterative depth-first walk over ascending successors.
  std::vector<int> state(n, 0);  // 0 unseen, 1 open, 2 closed
  std::vector<VertexId> postorder;
  postorder.reserve(n);
  std::vector<std::pair<VertexId, std::size_t>> stack;
  stack.emplace_back(root, 0);
  state[root] = 1;
  while (!stack.empty()) {
    auto& fr = stack.back();
    const VertexId v = fr.first;
    const auto& succ = g.successors(v);
    if (fr.second < succ.size()) {
      const VertexId w = succ[fr.second++];
      if (state[w] == 0) {
        state[w] = 1;
        stack.emplace_back(w, 0);
      }
    } else {
      state[v] = 2;
      postorder.push_back(v);
      stack.pop_back();
    }
  }
  std::vector<std::size_t> po_num(n, 0);
  for (std::size_t i = 0; i < postorder.size(); ++i) po_num[postorder[i]] = i;

  std::vector<VertexId> idom(n, kNoVertex);
  idom[root] = root;
  auto intersect = [&](VertexId a, VertexId b) {
    while (a != b) {
      while (po_num[a] < po_num[b]) a = idom[a];
      while (po_num[b] < po_num[a]) b = idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
      const VertexId v = *it;
      if (v == root) continue;
      VertexId best = kNoVertex;
      for (VertexId u : g.predecessors(v)) {
        if (idom[u] == kNoVertex) continue;
        best = best == kNoVertex ? u : intersect(u, best);
      }
      if (best != kNoVertex && idom[v] != best) {
        idom[v] = best;
        changed = true;
      }
    }
  }
  return idom;
}

bool dominates(const std::vector<VertexId>& idom, VertexId a, VertexId b) {
  const auto n = static_cast<VertexId>(idom.size());
  if (a >= n || b >= n) throw ValidationError("dominates: vertex out of range");
  if (idom[b] == kNoVertex) return false;  // b unreachable: nothing dominates it
  VertexId c = b;
  while (true) {
    if (c == a) return true;
    if (idom[c] == c) return false;  // reached the root without meeting a
    c = idom[c];
  }
}

namespace {

/// Call sites of a callee over raw edge sets; same pairing convention as
/// call_sites_of but usable on a working copy that is no longer a full ICfg.
std::vector<Edge> pair_call_sites(const EdgeSet& call_edges, const EdgeSet& return_edges,
                                  const std::vector<std::uint32_t>& function_of,
                                  std::uint32_t callee) {
  std::vector<VertexId> calls;
  std::set<VertexId> sites;
  for (const Edge& e : call_edges) {
    if (function_of[e.second] == callee) calls.push_back(e.first);
  }
  for (const Edge& e : return_edges) {
    if (function_of[e.first] == callee) sites.insert(e.second);
  }
  std::sort(calls.begin(), calls.end());
  if (calls.size() != sites.size()) {
    throw ValidationError("function " + std::to_string(callee) + " has " +
                          std::to_string(calls.size()) + " call sites but " +
                          std::to_string(sites.size()) + " return sites");
  }
  std::vector<Edge> out;
  auto it = sites.begin();
  for (VertexId c : calls) out.emplace_back(c, *it++);
  return out;
}

/// One function's analysis graph: its vertices renumbered densely ascending,
/// its intraprocedural edges minus call/return edges (direct recursion
/// seams), plus one summary edge per call site from the call vertex to its
/// paired return site.
struct FunctionView {
  Graph local{0};
  std::vector<VertexId> to_global;
  std::map<VertexId, VertexId> to_local;
  EdgeSet summary_edges;  // local ids
};

FunctionView make_function_view(const Graph& g, const std::vector<std::uint32_t>& function_of,
                                const EdgeSet& call_edges, const EdgeSet& return_edges,
                                std::uint32_t fn) {
  FunctionView view;
  const VertexId n = g.vertex_count();
  for (VertexId v = 0; v < n; ++v) {
    if (function_of[v] != fn) continue;
    view.to_local[v] = static_cast<VertexId>(view.to_global.size());
    view.to_global.push_back(v);
  }
  view.local = Graph(static_cast<VertexId>(view.to_global.size()));
  for (VertexId v : view.to_global) {
    for (VertexId w : g.successors(v)) {
      if (function_of[w] != fn) continue;
      if (call_edges.count({v, w}) || return_edges.count({v, w})) continue;
      view.local.add_edge(view.to_local.at(v), view.to_local.at(w));
    }
  }
  std::set<std::uint32_t> callees;
  for (const Edge& e : call_edges) {
    if (function_of[e.first] == fn) callees.insert(function_of[e.second]);
  }
  for (std::uint32_t callee : callees) {
    for (const Edge& site : pair_call_sites(call_edges, return_edges, function_of, callee)) {
      if (function_of[site.first] != fn || function_of[site.second] != fn) continue;
      const Edge le{view.to_local.at(site.first), view.to_local.at(site.second)};
      if (!view.local.has_edge(le.first, le.second)) {
        view.local.add_edge(le.first, le.second);
        view.summary_edges.insert(le);
      }
    }
  }
  return view;
}

/// Natural loops of one function view, reported in view-local ids (bodies
/// ascending, loops ascending by header). Exiting edges are left empty; the
/// caller fills them against whichever graph it cares about.
std::vector<LoopInfo> natural_loops_in_view(const FunctionView& view, VertexId local_entry) {
  const Graph& g = view.local;
  std::vector<VertexId> idom = immediate_dominators(g, local_entry);
  std::map<VertexId, EdgeSet> back_by_header;
  for (const auto& [t, h] : g.edges()) {
    if (idom[t] == kNoVertex || idom[h] == kNoVertex) continue;
    if (!dominates(idom, h, t)) continue;
    if (view.summary_edges.count({t, h})) {
      // A return site's only analysis in-edge is its summary edge, so a
      // summary can never close a cycle back to a dominator.
      throw std::logic_error("summary edge " + edge_str({t, h}) + " classified as a back edge");
    }
    back_by_header[h].insert({t, h});
  }
  std::vector<LoopInfo> out;
  for (const auto& [h, back] : back_by_header) {
    LoopInfo li;
    li.header = h;
    std::set<VertexId> body{h};
    std::vector<VertexId> work;
    for (const Edge& e : back) {
      if (body.insert(e.first).second) work.push_back(e.first);
    }
    while (!work.empty()) {
      const VertexId v = work.back();
      work.pop_back();
      for (VertexId u : g.predecessors(v)) {
        if (body.insert(u).second) work.push_back(u);
      }
    }
    li.body.assign(body.begin(), body.end());
    li.back_edges = back;
    out.push_back(std::move(li));
  }
  return out;
}

/// Iterative Tarjan; components are each sorted ascending and emitted in
/// Tarjan (reverse topological) order.
std::vector<std::vector<VertexId>> strongly_connected_components(const Graph& g) {
  const VertexId n = g.vertex_count();
  std::vector<VertexId> index(n, kNoVertex), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<VertexId> comp_stack;
  std::vector<std::vector<VertexId>> comps;
  VertexId counter = 0;
  std::vector<std::pair<VertexId, std::size_t>> frames;
  for (VertexId start = 0; start < n; ++start) {
    if (index[start] != kNoVertex) continue;
    index[start] = low[start] = counter++;
    comp_stack.push_back(start);
    on_stack[start] = true;
    frames.emplace_back(start, 0);
    while (!frames.empty()) {
      auto& fr = frames.back();
      const VertexId v = fr.first;
      const auto& succ = g.successors(v);
      if (fr.second < succ.size()) {
        const VertexId w = succ[fr.second++];
        if (index[w] == kNoVertex) {
          index[w] = low[w] = counter++;
          comp_stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        if (low[v] == index[v]) {
          std::vector<VertexId> comp;
          while (true) {
            const VertexId w = comp_stack.back();
            comp_stack.pop_back();
            on_stack[w] = false;
            comp.push_back(w);
            if (w == v) break;
          }
          std::sort(comp.begin(), comp.end());
          comps.push_back(std::move(comp));
        }
        frames.pop_back();
        if (!frames.empty()) {
          const VertexId parent = frames.back().first;
          low[parent] = std::min(low[parent], low[v]);
        }
      }
    }
  }
  return comps;
}

/// Edges whose target is open (gray) in a depth-first walk rooted first at
/// `root`, then at every still-unseen vertex ascending. Empty exactly when
/// the graph is acyclic.
std::vector<Edge> dfs_back_edges(const Graph& g, VertexId root) {
  const VertexId n = g.vertex_count();
  std::vector<int> color(n, 0);  // 0 white, 1 gray, 2 black
  std::vector<Edge> back;
  std::vector<std::pair<VertexId, std::size_t>> stack;
  auto visit = [&](VertexId r) {
    if (r >= n || color[r] != 0) return;
    color[r] = 1;
    stack.emplace_back(r, 0);
    while (!stack.empty()) {
      auto& fr = stack.back();
      const VertexId v = fr.first;
      const auto& succ = g.successors(v);
      if (fr.second < succ.size()) {
        const VertexId w = succ[fr.second++];
        if (color[w] == 0) {
          color[w] = 1;
          stack.emplace_back(w, 0);
        } else if (color[w] == 1) {
          back.push_back({v, w});
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  };
  visit(root);
  for (VertexId v = 0; v < n; ++v) visit(v);
  return back;
}

}  // namespace

std::vector<LoopInfo> find_loops(const ICfg& icfg) {
  check_icfg(icfg);
  std::vector<LoopInfo> out;
  for (std::uint32_t fn : function_ids(icfg)) {
    FunctionView view = make_function_view(icfg.graph, icfg.function_of, icfg.call_edges,
                                           icfg.return_edges, fn);
    const VertexId entry_local = view.to_local.at(function_entry(icfg, fn));
    for (LoopInfo local : natural_loops_in_view(view, entry_local)) {
      LoopInfo li;
      li.header = view.to_global[local.header];
      for (VertexId v : local.body) li.body.push_back(view.to_global[v]);
      std::sort(li.body.begin(), li.body.end());
      for (const Edge& e : local.back_edges) {
        li.back_edges.insert({view.to_global[e.first], view.to_global[e.second]});
      }
      const std::set<VertexId> body_local(local.body.begin(), local.body.end());
      for (VertexId u : local.body) {
        for (VertexId w : view.local.successors(u)) {
          if (body_local.count(w)) continue;
          if (view.summary_edges.count({u, w})) {
            // A call vertex's only analysis successor is its return site, and
            // the return site reaches whatever the call vertex reaches, so a
            // summary edge can never leave a loop body on its own.
            throw std::logic_error("summary edge " + edge_str({u, w}) + " exits a loop body");
          }
          li.exiting_edges.insert({view.to_global[u], view.to_global[w]});
        }
      }
      std::set<VertexId> targets;
      for (const Edge& e : li.exiting_edges) targets.insert(e.second);
      li.exit_nodes.assign(targets.begin(), targets.end());
      out.push_back(std::move(li));
    }
  }
  return out;
}

std::vector<std::vector<VertexId>> detect_extraordinary_loops(const ICfg& icfg) {
  check_icfg(icfg);
  std::vector<std::vector<VertexId>> out;
  for (std::uint32_t fn : function_ids(icfg)) {
    FunctionView view = make_function_view(icfg.graph, icfg.function_of, icfg.call_edges,
                                           icfg.return_edges, fn);
    const VertexId entry_local = view.to_local.at(function_entry(icfg, fn));
    for (const auto& comp : strongly_connected_components(view.local)) {
      if (comp.size() < 2) continue;  // self-loops cannot exist
      const std::set<VertexId> members(comp.begin(), comp.end());
      std::set<VertexId> entries;
      for (VertexId v : comp) {
        if (v == entry_local) {
          entries.insert(v);
          continue;
        }
        for (VertexId u : view.local.predecessors(v)) {
          if (!members.count(u)) {
            entries.insert(v);
            break;
          }
        }
      }
      if (entries.size() < 2) continue;
      std::vector<VertexId> global;
      for (VertexId v : comp) global.push_back(view.to_global[v]);
      std::sort(global.begin(), global.end());
      out.push_back(std::move(global));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string check_one_entry_one_exit(const Graph& sub, VertexId entry, VertexId exit) {
  const VertexId n = sub.vertex_count();
  if (entry >= n) return "entry vertex out of range";
  if (exit >= n) return "exit vertex out of range";
  if (entry == exit) return "entry and exit must be distinct vertices";
  if (!is_dag(sub)) return "subgraph contains a cycle";
  if (!sub.predecessors(entry).empty()) {
    return "entry vertex " + std::to_string(entry) + " has a predecessor";
  }
  if (!sub.successors(exit).empty()) {
    return "exit vertex " + std::to_string(exit) + " has a successor";
  }
  for (VertexId v = 0; v < n; ++v) {
    if (v != entry && sub.predecessors(v).empty()) {
      return "vertex " + std::to_string(v) + " has no predecessor but is not the entry";
    }
    if (v != exit && sub.successors(v).empty()) {
      return "vertex " + std::to_string(v) + " has no successor but is not the exit";
    }
  }
  return "";
}

std::string check_loop_subgraph(const Graph& sub, VertexId entry,
                                const std::vector<VertexId>& exits,
                                const std::vector<VertexId>& latches) {
  const VertexId n = sub.vertex_count();
  if (entry >= n) return "entry vertex out of range";
  for (VertexId v : exits) {
    if (v >= n) return "exit vertex out of range";
  }
  for (VertexId v : latches) {
    if (v >= n) return "latch vertex out of range";
  }
  const std::set<VertexId> exit_set(exits.begin(), exits.end());
  const std::set<VertexId> latch_set(latches.begin(), latches.end());
  if (exit_set.count(entry)) return "entry vertex doubles as an exit";
  if (!is_dag(sub)) return "subgraph contains a cycle";
  if (!sub.predecessors(entry).empty()) {
    return "entry vertex " + std::to_string(entry) + " has a predecessor";
  }
  for (VertexId v = 0; v < n; ++v) {
    if (v != entry && sub.predecessors(v).empty()) {
      return "vertex " + std::to_string(v) + " has no predecessor but is not the entry";
    }
    if (sub.successors(v).empty()) {
      if (!exit_set.count(v) && !latch_set.count(v)) {
        return "vertex " + std::to_string(v) + " is a sink but neither an exit nor a latch";
      }
    } else if (exit_set.count(v)) {
      return "exit vertex " + std::to_string(v) + " has a successor";
    }
  }
  return "";
}

namespace {

/// Rejects edges that cross the region border anywhere other than into
/// `entry` (from outside) or out of `exit` (to outside).
void check_region_border(const Graph& g, const std::vector<bool>& in_region, VertexId entry,
                         VertexId exit) {
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (!in_region[v]) continue;
    if (v != exit) {
      for (VertexId w : g.successors(v)) {
        if (!in_region[w]) {
          throw ValidationError("split: region vertex " + vertex_name(g, v) +
                                " has successor " + vertex_name(g, w) + " outside the region");
        }
      }
    }
    if (v != entry) {
      for (VertexId u : g.predecessors(v)) {
        if (!in_region[u]) {
          throw ValidationError("split: region vertex " + vertex_name(g, v) +
                                " has predecessor " + vertex_name(g, u) + " outside the region");
        }
      }
    }
  }
}

/// Mechanically splits `g` along a border-validated region: the subgraph
/// keeps the region's vertices in ascending order, the remainder keeps the
/// survivors in ascending order plus the merged stand-in appended last, and
/// every border edge is rerouted through the stand-in.
SplitResult build_split(const Graph& g, const std::vector<bool>& in_region, VertexId entry,
                        VertexId exit) {
  const VertexId n = g.vertex_count();
  SplitResult out;
  for (VertexId v = 0; v < n; ++v) {
    if (in_region[v]) {
      out.orig_to_sub[v] = static_cast<VertexId>(out.sub_to_orig.size());
      out.sub_to_orig.push_back(v);
    }
  }
  out.subgraph = Graph(static_cast<VertexId>(out.sub_to_orig.size()));
  for (VertexId v : out.sub_to_orig) {
    if (auto l = g.label(v)) out.subgraph.set_label(out.orig_to_sub.at(v), *l);
    for (VertexId w : g.successors(v)) {
      if (in_region[w]) out.subgraph.add_edge(out.orig_to_sub.at(v), out.orig_to_sub.at(w));
    }
  }
  out.entry = out.orig_to_sub.at(entry);
  out.exits = {out.orig_to_sub.at(exit)};

  for (VertexId v = 0; v < n; ++v) {
    if (!in_region[v]) {
      out.orig_to_rem[v] = static_cast<VertexId>(out.rem_to_orig.size());
      out.rem_to_orig.push_back(v);
    }
  }
  out.remainder = Graph(static_cast<VertexId>(out.rem_to_orig.size()));
  out.merged_vertex = out.remainder.add_vertex();
  out.rem_to_orig.push_back(kNoVertex);
  for (VertexId rv = 0; rv + 1 < out.remainder.vertex_count(); ++rv) {
    if (auto l = g.label(out.rem_to_orig[rv])) out.remainder.set_label(rv, *l);
  }
  {
    auto l = g.label(entry);
    out.remainder.set_label(out.merged_vertex, (l ? *l : std::string()) + "$body");
  }
  for (const auto& [u, w] : g.edges()) {
    const bool ur = in_region[u], wr = in_region[w];
    if (ur && wr) continue;
    if (!ur && !wr) {
      out.remainder.add_edge(out.orig_to_rem.at(u), out.orig_to_rem.at(w));
    } else if (!ur) {  // survivor -> entry (the only inward edges that pass the checks)
      out.remainder.add_edge(out.orig_to_rem.at(u), out.merged_vertex);
    } else {  // exit -> survivor
      out.remainder.add_edge(out.merged_vertex, out.orig_to_rem.at(w));
    }
  }
  out.orig_to_rem[entry] = out.merged_vertex;
  out.orig_to_rem[exit] = out.merged_vertex;
  return out;
}

}  // namespace

SplitResult split_one_entry_one_exit(const Graph& g, VertexId entry, VertexId exit) {
  const VertexId n = g.vertex_count();
  if (entry >= n || exit >= n) {
    throw ValidationError("split: entry or exit vertex out of range");
  }
  if (entry == exit) throw ValidationError("split: entry and exit must be distinct");
  if (!is_dag(g)) {
    throw ValidationError("split: graph has a cycle; remove cycle edges before splitting");
  }
  const ReachabilityMatrix reach = reachability(g);
  if (!reach.reaches(entry, exit)) {
    throw ValidationError("split: entry " + vertex_name(g, entry) + " does not reach exit " +
                          vertex_name(g, exit));
  }

  std::vector<bool> in_region(n, false);
  in_region[entry] = in_region[exit] = true;
  for (VertexId v = 0; v < n; ++v) {
    if (reach.reaches(entry, v) && reach.reaches(v, exit)) in_region[v] = true;
  }
  check_region_border(g, in_region, entry, exit);

  SplitResult out = build_split(g, in_region, entry, exit);
  const std::string msg = check_one_entry_one_exit(out.subgraph, out.entry, out.exits[0]);
  if (!msg.empty()) {
    throw std::logic_error("split: carved region fails its own shape check: " + msg);
  }
  return out;
}

SplitResult transform_loop(const Graph& g, const LoopInfo& li) {
  const VertexId n = g.vertex_count();
  std::vector<VertexId> body = li.body;
  std::sort(body.begin(), body.end());
  body.erase(std::unique(body.begin(), body.end()), body.end());
  if (body.empty()) throw ValidationError("loop transform: empty body");
  for (VertexId v : body) {
    if (v >= n) throw ValidationError("loop transform: body vertex out of range");
  }
  if (li.header >= n) throw ValidationError("loop transform: header out of range");
  std::vector<bool> in_body(n, false);
  for (VertexId v : body) in_body[v] = true;
  if (!in_body[li.header]) throw ValidationError("loop transform: header missing from the body");

  for (const Edge& e : li.back_edges) {
    if (e.second != li.header) {
      throw ValidationError("loop transform: back edge " + edge_str(e) +
                            " does not target the header");
    }
    if (e.first >= n || !in_body[e.first]) {
      throw ValidationError("loop transform: back edge " + edge_str(e) +
                            " starts outside the body");
    }
    if (g.has_edge(e.first, e.second)) {
      throw ValidationError("loop transform: back edge " + edge_str(e) +
                            " is still present; remove cycle edges before extraction");
    }
  }

  for (VertexId v : body) {
    for (VertexId u : g.predecessors(v)) {
      if (in_body[u]) {
        if (v == li.header) {
          throw ValidationError("loop transform: edge " + edge_str({u, v}) +
                                " re-enters the header from inside the body; remove cycle "
                                "edges before extraction");
        }
        continue;
      }
      if (v != li.header) {
        throw ValidationError("loop transform: body vertex " + vertex_name(g, v) +
                              " is entered from outside at " + vertex_name(g, u) +
                              "; a body entered besides the header is not transformable");
      }
    }
  }

  EdgeSet exiting;
  for (VertexId u : body) {
    for (VertexId w : g.successors(u)) {
      if (!in_body[w]) exiting.insert({u, w});
    }
  }
  if (!li.exiting_edges.empty() && li.exiting_edges != exiting) {
    throw ValidationError("loop transform: declared exiting edges do not match the graph");
  }
  std::vector<VertexId> exit_nodes;
  {
    std::set<VertexId> targets;
    for (const Edge& e : exiting) targets.insert(e.second);
    exit_nodes.assign(targets.begin(), targets.end());
  }
  if (!li.exit_nodes.empty()) {
    std::vector<VertexId> declared = li.exit_nodes;
    std::sort(declared.begin(), declared.end());
    declared.erase(std::unique(declared.begin(), declared.end()), declared.end());
    if (declared != exit_nodes) {
      throw ValidationError("loop transform: declared exit nodes do not match the exiting edges");
    }
  }

  SplitResult out;
  for (VertexId v : body) {
    out.orig_to_sub[v] = static_cast<VertexId>(out.sub_to_orig.size());
    out.sub_to_orig.push_back(v);
  }
  out.subgraph = Graph(static_cast<VertexId>(body.size()));
  std::map<VertexId, VertexId> copy_of;
  for (VertexId x : exit_nodes) {
    const VertexId c = out.subgraph.add_vertex();
    out.sub_to_orig.push_back(x);
    out.orig_to_sub[x] = c;
    copy_of[x] = c;
    out.exits.push_back(c);
    auto l = g.label(x);
    out.subgraph.set_label(c, (l ? *l : std::string()) + "$exit");
  }
  for (VertexId v : body) {
    const VertexId lv = out.orig_to_sub.at(v);
    if (auto l = g.label(v)) out.subgraph.set_label(lv, *l);
    for (VertexId w : g.successors(v)) {
      if (in_body[w]) out.subgraph.add_edge(lv, out.orig_to_sub.at(w));
    }
  }
  for (const Edge& e : exiting) {
    out.subgraph.add_edge(out.orig_to_sub.at(e.first), copy_of.at(e.second));
  }
  out.entry = out.orig_to_sub.at(li.header);

  for (VertexId v = 0; v < n; ++v) {
    if (!in_body[v]) {
      out.orig_to_rem[v] = static_cast<VertexId>(out.rem_to_orig.size());
      out.rem_to_orig.push_back(v);
    }
  }
  out.remainder = Graph(static_cast<VertexId>(out.rem_to_orig.size()));
  out.merged_vertex = out.remainder.add_vertex();
  out.rem_to_orig.push_back(kNoVertex);
  for (VertexId rv = 0; rv + 1 < out.remainder.vertex_count(); ++rv) {
    if (auto l = g.label(out.rem_to_orig[rv])) out.remainder.set_label(rv, *l);
  }
  {
    auto l = g.label(li.header);
    out.remainder.set_label(out.merged_vertex, (l ? *l : std::string()) + "$loop");
  }
  for (const auto& [u, w] : g.edges()) {
    if (in_body[u]) continue;  // interior or exiting: replaced by the stand-in wiring
    if (in_body[w]) {
      // The single-entry check above narrows this to w == header.
      out.remainder.add_edge(out.orig_to_rem.at(u), out.merged_vertex);
    } else {
      out.remainder.add_edge(out.orig_to_rem.at(u), out.orig_to_rem.at(w));
    }
  }
  for (VertexId x : exit_nodes) {
    out.remainder.add_edge(out.merged_vertex, out.orig_to_rem.at(x));
  }
  out.orig_to_rem[li.header] = out.merged_vertex;

  std::vector<VertexId> latches;
  for (const Edge& e : li.back_edges) latches.push_back(out.orig_to_sub.at(e.first));
  std::sort(latches.begin(), latches.end());
  latches.erase(std::unique(latches.begin(), latches.end()), latches.end());
  const std::string msg = check_loop_subgraph(out.subgraph, out.entry, out.exits, latches);
  if (!msg.empty()) {
    throw ValidationError("loop transform: body does not form a loop subgraph: " + msg);
  }
  return out;
}

namespace {

/// Mutable working copy of an icfg. Graph is append-only, so edges live in a
/// set and a Graph is rebuilt on demand; labels use "" for "none".
struct Work {
  VertexId n = 0;
  EdgeSet edges;
  std::vector<NodeKind> kinds;
  std::vector<std::uint32_t> function_of;
  std::vector<std::string> labels;
  std::vector<VertexId> to_input;
  EdgeSet call_edges, return_edges, back_edges;
  std::map<VertexId, std::uint32_t> descend_fn;  // stand-in vertex -> callee function

  static Work from(const ICfg& icfg) {
    Work w;
    w.n = icfg.vertex_count();
    for (const auto& e : icfg.graph.edges()) w.edges.insert(e);
    w.kinds = icfg.kinds;
    w.function_of = icfg.function_of;
    w.labels.resize(w.n);
    for (VertexId v = 0; v < w.n; ++v) {
      if (auto l = icfg.graph.label(v)) w.labels[v] = *l;
    }
    w.to_input.resize(w.n);
    std::iota(w.to_input.begin(), w.to_input.end(), 0);
    w.call_edges = icfg.call_edges;
    w.return_edges = icfg.return_edges;
    w.back_edges = icfg.back_edges;
    return w;
  }

  VertexId add_virtual(std::uint32_t fn, std::string label) {
    kinds.push_back(NodeKind::kVirtual);
    function_of.push_back(fn);
    labels.push_back(std::move(label));
    to_input.push_back(kNoVertex);
    return n++;
  }

  Graph graph() const {
    Graph g(n);
    for (const Edge& e : edges) g.add_edge(e.first, e.second);
    for (VertexId v = 0; v < n; ++v) {
      if (!labels[v].empty()) g.set_label(v, labels[v]);
    }
    return g;
  }

  ICfg icfg() const {
    ICfg out;
    out.graph = graph();
    out.kinds = kinds;
    out.function_of = function_of;
    out.call_edges = call_edges;
    out.return_edges = return_edges;
    out.back_edges = back_edges;
    return out;
  }

  VertexId find_kind(std::uint32_t fn, NodeKind kind) const {
    for (VertexId v = 0; v < n; ++v) {
      if (function_of[v] == fn && kinds[v] == kind) return v;
    }
    return kNoVertex;
  }
};

std::string function_name(const Work& w, VertexId entry, std::uint32_t fn) {
  const std::string& l = w.labels[entry];
  if (!l.empty()) {
    const auto dot = l.find('.');
    if (dot != std::string::npos && dot > 0) return l.substr(0, dot);
    return l;
  }
  return "f" + std::to_string(fn);
}

/// Drops the call and return edges of one call site and reconnects the call
/// vertex to its return site through a fresh virtual bypass vertex, bound to
/// the callee so guidance can still descend into the callee's region.
void bypass_site(Work& w, VertexId callee_entry, const Edge& site, bool bind,
                 std::uint32_t callee) {
  const auto [c, s] = site;
  w.edges.erase({c, callee_entry});
  w.call_edges.erase({c, callee_entry});
  std::vector<Edge> drop;
  for (const Edge& e : w.return_edges) {
    if (e.second == s) drop.push_back(e);
  }
  for (const Edge& e : drop) {
    w.return_edges.erase(e);
    w.edges.erase(e);
  }
  const VertexId b = w.add_virtual(w.function_of[c], w.labels[c] + "$call");
  w.edges.insert({c, b});
  w.edges.insert({b, s});
  if (bind) w.descend_fn[b] = callee;
}

/// One carved function subgraph plus the bookkeeping that the working copy
/// tracked for its vertices.
struct FunctionExtract {
  std::uint32_t fn = 0;
  std::string name;
  SplitResult sr;
  std::vector<VertexId> to_input;
  std::vector<bool> is_virtual;
  std::map<VertexId, std::uint32_t> descend_fn;  // subgraph-local vertex -> callee
};

/// Carves one rewired function out of the working copy. Returns false (and
/// leaves w untouched) when the region cannot be carved.
bool carve_function(Work& w, std::uint32_t fn, std::vector<FunctionExtract>& extracts) {
  const VertexId entry = w.find_kind(fn, NodeKind::kEntry);
  VertexId vret = kNoVertex;
  for (VertexId v = 0; v < w.n; ++v) {
    if (w.function_of[v] == fn && w.kinds[v] == NodeKind::kVirtual &&
        w.labels[v].ends_with("$ret")) {
      vret = v;
      break;
    }
  }
  if (entry == kNoVertex || vret == kNoVertex) return false;

  // The region is the function's own vertex set — body, bypass stand-ins,
  // stand-ins of callees connected here, and the virtual return — rather
  // than only the vertices on entry-to-return paths: removing loop back
  // edges can leave latch vertices with no way forward, and dead blocks have
  // no way in, yet both still belong to the function. After rewiring, the
  // only border crossings left are the connecting call edge into the entry
  // and the return edge out of the virtual return; any other crossing (a
  // call into a function that could not be carved) or a cycle still inside
  // the body is a refusal.
  SplitResult sr;
  {
    const Graph g = w.graph();
    std::vector<bool> in_region(w.n, false);
    for (VertexId v = 0; v < w.n; ++v) in_region[v] = w.function_of[v] == fn;
    try {
      check_region_border(g, in_region, entry, vret);
    } catch (const ValidationError&) {
      return false;
    }
    sr = build_split(g, in_region, entry, vret);
    if (!is_dag(sr.subgraph)) return false;
  }

  FunctionExtract fe;
  fe.fn = fn;
  fe.name = function_name(w, entry, fn);
  const VertexId sn = sr.subgraph.vertex_count();
  fe.to_input.resize(sn);
  fe.is_virtual.resize(sn);
  for (VertexId sv = 0; sv < sn; ++sv) {
    const VertexId ov = sr.sub_to_orig[sv];
    fe.to_input[sv] = w.to_input[ov];
    fe.is_virtual[sv] = w.kinds[ov] == NodeKind::kVirtual;
  }
  for (auto it = w.descend_fn.begin(); it != w.descend_fn.end();) {
    const auto found = sr.orig_to_sub.find(it->first);
    if (found != sr.orig_to_sub.end()) {
      fe.descend_fn[found->second] = it->second;
      it = w.descend_fn.erase(it);
    } else {
      ++it;
    }
  }

  Work nw;
  nw.n = sr.remainder.vertex_count();
  nw.kinds.resize(nw.n);
  nw.function_of.resize(nw.n);
  nw.labels.resize(nw.n);
  nw.to_input.resize(nw.n);
  for (VertexId rv = 0; rv < nw.n; ++rv) {
    const VertexId ov = sr.rem_to_orig[rv];
    if (ov == kNoVertex) {
      nw.kinds[rv] = NodeKind::kVirtual;
      nw.function_of[rv] = fn;  // adjusted below when a connecting caller exists
      nw.labels[rv] = fe.name + "$body";
      nw.to_input[rv] = kNoVertex;
    } else {
      nw.kinds[rv] = w.kinds[ov];
      nw.function_of[rv] = w.function_of[ov];
      nw.labels[rv] = w.labels[ov];
      nw.to_input[rv] = w.to_input[ov];
    }
  }
  for (const auto& e : sr.remainder.edges()) nw.edges.insert(e);
  auto remap_set = [&](const EdgeSet& src) {
    EdgeSet dst;
    for (const Edge& e : src) {
      const auto a = sr.orig_to_rem.find(e.first);
      const auto b = sr.orig_to_rem.find(e.second);
      if (a == sr.orig_to_rem.end() || b == sr.orig_to_rem.end()) continue;
      if (sr.remainder.has_edge(a->second, b->second)) dst.insert({a->second, b->second});
    }
    return dst;
  };
  nw.call_edges = remap_set(w.call_edges);
  nw.return_edges = remap_set(w.return_edges);
  nw.back_edges = remap_set(w.back_edges);
  for (const Edge& e : nw.call_edges) {
    if (e.second == sr.merged_vertex) {
      nw.function_of[sr.merged_vertex] = nw.function_of[e.first];
      break;
    }
  }
  for (auto& [v, callee] : w.descend_fn) {
    nw.descend_fn[sr.orig_to_rem.at(v)] = callee;
  }
  // The stand-in is the callee's body: entering it means entering the callee.
  nw.descend_fn[sr.merged_vertex] = fn;

  fe.sr = std::move(sr);
  w = std::move(nw);
  extracts.push_back(std::move(fe));
  return true;
}

/// The caller-callee transformation over a working copy. Pass 1 rewires
/// every function (virtual return vertex, one connecting call site from
/// outside the function's call-graph cycle, bypasses elsewhere); pass 2
/// carves the rewired functions callees-first. Carving later functions
/// relies on earlier callees already being reduced to stand-ins, which is
/// why the rewiring must be complete before the first carve.
void run_caller_callee(Work& w, std::vector<FunctionExtract>& extracts,
                       std::vector<std::uint32_t>& skipped) {
  std::vector<std::uint32_t> fns = w.function_of;
  std::sort(fns.begin(), fns.end());
  fns.erase(std::unique(fns.begin(), fns.end()), fns.end());
  std::map<std::uint32_t, VertexId> fidx;
  for (std::size_t i = 0; i < fns.size(); ++i) fidx[fns[i]] = static_cast<VertexId>(i);

  Graph callgraph(static_cast<VertexId>(fns.size()));
  {
    EdgeSet cg_edges;
    for (const Edge& e : w.call_edges) {
      const VertexId a = fidx.at(w.function_of[e.first]);
      const VertexId b = fidx.at(w.function_of[e.second]);
      if (a != b) cg_edges.insert({a, b});
    }
    for (const Edge& e : cg_edges) callgraph.add_edge(e.first, e.second);
  }
  const auto sccs = strongly_connected_components(callgraph);
  std::vector<std::size_t> scc_of(fns.size());
  std::vector<std::set<std::uint32_t>> scc_fns(sccs.size());
  for (std::size_t i = 0; i < sccs.size(); ++i) {
    for (VertexId v : sccs[i]) {
      scc_of[v] = i;
      scc_fns[i].insert(fns[v]);
    }
  }

  // Pass 1: rewire. The program entry function is never extracted, so every
  // call into it is a cycle edge and gets bypassed up front.
  std::set<std::uint32_t> unextractable;
  if (fidx.count(0)) {
    const VertexId entry0 = w.find_kind(0, NodeKind::kEntry);
    for (const Edge& site : pair_call_sites(w.call_edges, w.return_edges, w.function_of, 0)) {
      bypass_site(w, entry0, site, true, 0);
    }
  }
  for (std::uint32_t fn : fns) {
    if (fn == 0) continue;
    const VertexId entry = w.find_kind(fn, NodeKind::kEntry);
    std::vector<VertexId> exits;
    for (VertexId v = 0; v < w.n; ++v) {
      if (w.function_of[v] == fn && w.kinds[v] == NodeKind::kExit) exits.push_back(v);
    }
    const auto sites = pair_call_sites(w.call_edges, w.return_edges, w.function_of, fn);
    if (exits.empty()) {
      unextractable.insert(fn);
      for (const Edge& site : sites) bypass_site(w, entry, site, false, fn);
      continue;
    }
    const std::string name = function_name(w, entry, fn);
    const VertexId vret = w.add_virtual(fn, name + "$ret");
    for (VertexId x : exits) w.edges.insert({x, vret});
    const std::set<std::uint32_t>& cycle = scc_fns[scc_of[fidx.at(fn)]];
    const Edge* connecting = nullptr;
    for (const Edge& site : sites) {  // ascending by call vertex
      if (!cycle.count(w.function_of[site.first])) {
        connecting = &site;
        break;
      }
    }
    for (const Edge& site : sites) {
      if (connecting != nullptr && site == *connecting) {
        std::vector<Edge> drop;
        for (const Edge& e : w.return_edges) {
          if (e.second == site.second) drop.push_back(e);
        }
        for (const Edge& e : drop) {
          w.return_edges.erase(e);
          w.edges.erase(e);
        }
        w.edges.insert({vret, site.second});
        w.return_edges.insert({vret, site.second});
      } else {
        bypass_site(w, entry, site, true, fn);
      }
    }
  }

  // Pass 2: carve callees first (reverse topological order over the call
  // graph's condensation; ascending function id within a cycle).
  Graph condensation(static_cast<VertexId>(sccs.size()));
  {
    EdgeSet con_edges;
    for (const auto& e : callgraph.edges()) {
      const auto a = static_cast<VertexId>(scc_of[e.first]);
      const auto b = static_cast<VertexId>(scc_of[e.second]);
      if (a != b) con_edges.insert({a, b});
    }
    for (const Edge& e : con_edges) condensation.add_edge(e.first, e.second);
  }
  const auto topo = topological_order(condensation);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    for (std::uint32_t fn : scc_fns[*it]) {
      if (fn == 0 || unextractable.count(fn)) continue;
      if (!carve_function(w, fn, extracts)) unextractable.insert(fn);
    }
  }
  skipped.assign(unextractable.begin(), unextractable.end());
}

}  // namespace

CallerCalleeResult transform_caller_callee(const ICfg& icfg) {
  check_icfg(icfg);
  Work w = Work::from(icfg);
  std::vector<FunctionExtract> extracts;
  CallerCalleeResult out;
  run_caller_callee(w, extracts, out.skipped_functions);
  out.remainder = w.icfg();
  out.remainder_to_input = w.to_input;
  for (FunctionExtract& fe : extracts) {
    out.subgraph_functions.push_back(fe.fn);
    out.subgraph_to_input.push_back(std::move(fe.to_input));
    out.subgraphs.push_back(std::move(fe.sr));
  }
  return out;
}

std::size_t combined_mpc_size(std::size_t size_remainder, std::size_t k, std::size_t size_sub) {
  if (k > size_remainder) {
    throw ValidationError("combined cover size: k = " + std::to_string(k) +
                          " exceeds the remainder cover size " + std::to_string(size_remainder));
  }
  return size_remainder - k + std::max(size_sub, k);
}

namespace {

/// Whether some realization or source-to-sink extension of a reachability
/// chain passes through m.
bool chain_through_vertex(const std::vector<VertexId>& chain, VertexId m,
                          const ReachabilityMatrix& reach) {
  for (VertexId v : chain) {
    if (v == m) return true;
  }
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (reach.reaches(chain[i], m) && reach.reaches(m, chain[i + 1])) return true;
  }
  return reach.reaches(m, chain.front()) || reach.reaches(chain.back(), m);
}

/// Whether such a realization can also leave m along one of its out-edges.
bool chain_through_out_edges(const std::vector<VertexId>& chain, VertexId m,
                             const ReachabilityMatrix& reach, bool has_out) {
  if (!has_out) return false;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    if (chain[i] == m) return true;
    if (reach.reaches(chain[i], m) && reach.reaches(m, chain[i + 1])) return true;
  }
  if (reach.reaches(m, chain.front())) return true;
  return chain.back() == m || reach.reaches(chain.back(), m);
}

}  // namespace

std::size_t max_k_through(const Graph& remainder, VertexId merged, std::size_t limit,
                          KThroughMode mode) {
  if (merged >= remainder.vertex_count()) {
    throw ValidationError("merged vertex out of range");
  }
  const BruteForceMpcResult res = brute_force_mpc(remainder, limit);
  const ReachabilityMatrix reach = reachability(remainder);
  const bool has_out = !remainder.successors(merged).empty();
  std::size_t best = 0;
  for (const PathCover& cover : res.all_covers) {
    std::size_t k = 0;
    for (const auto& chain : cover.paths) {
      const bool through = mode == KThroughMode::kVertex
                               ? chain_through_vertex(chain, merged, reach)
                               : chain_through_out_edges(chain, merged, reach, has_out);
      if (through) ++k;
    }
    best = std::max(best, k);
  }
  return best;
}

namespace {

/// A region under construction during decomposition.
struct RegionBuild {
  Region::Kind kind = Region::Kind::kRoot;
  std::string name;
  Graph graph{0};
  VertexId entry = kNoVertex;
  std::vector<VertexId> exits;
  std::vector<VertexId> to_icfg;
  std::vector<bool> is_virtual;
  std::map<VertexId, std::size_t> descend_region;  // resolved targets (loop regions)
  std::map<VertexId, std::uint32_t> descend_fn;    // unresolved function callees
  std::vector<VertexId> latches;
  std::vector<LoopInfo> pending;  // loops still to extract, in region-local ids
};

/// Extracts every pending loop of builds[r], innermost first, appending one
/// loop region per extraction. References into `builds` are re-taken after
/// every append because the vector may reallocate.
void extract_region_loops(std::vector<RegionBuild>& builds, std::size_t r) {
  {
    // Innermost first: distinct natural loops of one function are nested or
    // disjoint, so extracting by ascending body size never extracts an outer
    // loop before an inner one.
    auto& pending = builds[r].pending;
    std::stable_sort(pending.begin(), pending.end(), [](const LoopInfo& a, const LoopInfo& b) {
      if (a.body.size() != b.body.size()) return a.body.size() < b.body.size();
      return a.header < b.header;
    });
  }
  while (!builds[r].pending.empty()) {
    LoopInfo li = builds[r].pending.front();
    builds[r].pending.erase(builds[r].pending.begin());
    li.exiting_edges.clear();  // recompute against the current region graph
    li.exit_nodes.clear();

    SplitResult sr;
    try {
      sr = transform_loop(builds[r].graph, li);
    } catch (const ValidationError&) {
      // A body deformed by unguided cycle-edge removal (irreducible regions)
      // can stop being extractable; leave it inline, it is already acyclic.
      continue;
    }

    const std::set<VertexId> body_set(li.body.begin(), li.body.end());
    const std::size_t loop_index = builds.size();

    RegionBuild loop;
    loop.kind = Region::Kind::kLoop;
    {
      auto l = builds[r].graph.label(li.header);
      loop.name = l ? *l : "loop" + std::to_string(loop_index);
    }
    loop.graph = sr.subgraph;
    loop.entry = sr.entry;
    loop.exits = sr.exits;
    const VertexId sn = sr.subgraph.vertex_count();
    loop.to_icfg.resize(sn);
    loop.is_virtual.resize(sn);
    const std::set<VertexId> copy_set(sr.exits.begin(), sr.exits.end());
    for (VertexId sv = 0; sv < sn; ++sv) {
      const VertexId ov = sr.sub_to_orig[sv];
      loop.to_icfg[sv] = builds[r].to_icfg[ov];
      loop.is_virtual[sv] = copy_set.count(sv) ? true : builds[r].is_virtual[ov];
    }
    for (const Edge& e : li.back_edges) loop.latches.push_back(sr.orig_to_sub.at(e.first));
    std::sort(loop.latches.begin(), loop.latches.end());
    loop.latches.erase(std::unique(loop.latches.begin(), loop.latches.end()),
                       loop.latches.end());
    for (auto it = builds[r].descend_region.begin(); it != builds[r].descend_region.end();) {
      if (body_set.count(it->first)) {
        loop.descend_region[sr.orig_to_sub.at(it->first)] = it->second;
        it = builds[r].descend_region.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = builds[r].descend_fn.begin(); it != builds[r].descend_fn.end();) {
      if (body_set.count(it->first)) {
        loop.descend_fn[sr.orig_to_sub.at(it->first)] = it->second;
        it = builds[r].descend_fn.erase(it);
      } else {
        ++it;
      }
    }
    builds.push_back(std::move(loop));

    // Rebuild the host region around the stand-in.
    RegionBuild& rb = builds[r];
    rb.graph = sr.remainder;
    const VertexId rn = sr.remainder.vertex_count();
    std::vector<VertexId> to_icfg(rn, kNoVertex);
    std::vector<bool> is_virtual(rn, true);
    for (VertexId rv = 0; rv < rn; ++rv) {
      const VertexId ov = sr.rem_to_orig[rv];
      if (ov == kNoVertex) continue;  // the stand-in
      to_icfg[rv] = rb.to_icfg[ov];
      is_virtual[rv] = rb.is_virtual[ov];
    }
    rb.to_icfg = std::move(to_icfg);
    rb.is_virtual = std::move(is_virtual);
    {
      const auto found = sr.orig_to_rem.find(rb.entry);
      if (found == sr.orig_to_rem.end()) {
        throw std::logic_error("loop extraction removed the region entry");
      }
      rb.entry = found->second;  // header-as-entry becomes the stand-in
    }
    {
      std::set<VertexId> exits;
      for (VertexId x : rb.exits) {
        const auto found = sr.orig_to_rem.find(x);
        // An exit swallowed by the loop is represented by the stand-in.
        exits.insert(found == sr.orig_to_rem.end() ? sr.merged_vertex : found->second);
      }
      rb.exits.assign(exits.begin(), exits.end());
    }
    std::map<VertexId, std::size_t> descend_region;
    for (const auto& [v, target] : rb.descend_region) {
      descend_region[sr.orig_to_rem.at(v)] = target;
    }
    descend_region[sr.merged_vertex] = loop_index;
    rb.descend_region = std::move(descend_region);
    std::map<VertexId, std::uint32_t> descend_fn;
    for (const auto& [v, callee] : rb.descend_fn) {
      descend_fn[sr.orig_to_rem.at(v)] = callee;
    }
    rb.descend_fn = std::move(descend_fn);

    std::vector<LoopInfo> pending;
    for (const LoopInfo& p : rb.pending) {
      if (body_set.count(p.header)) {
        // Distinct natural loops never share a header, so a remaining loop
        // whose header sat inside the extracted body is a malformed leftover;
        // drop it rather than guess a replacement header.
        continue;
      }
      LoopInfo np;
      bool intersects = false;
      for (VertexId v : p.body) {
        if (body_set.count(v)) {
          intersects = true;
        } else {
          np.body.push_back(sr.orig_to_rem.at(v));
        }
      }
      if (intersects) np.body.push_back(sr.merged_vertex);
      std::sort(np.body.begin(), np.body.end());
      np.body.erase(std::unique(np.body.begin(), np.body.end()), np.body.end());
      np.header = sr.orig_to_rem.at(p.header);
      for (const Edge& e : p.back_edges) {
        const VertexId t =
            body_set.count(e.first) ? sr.merged_vertex : sr.orig_to_rem.at(e.first);
        np.back_edges.insert({t, np.header});
      }
      pending.push_back(std::move(np));
    }
    rb.pending = std::move(pending);
  }
}

}  // namespace

Decomposition decompose_icfg(const ICfg& input) {
  check_icfg(input);
  function_entry(input, 0);  // the program entry function must exist

  Decomposition out;

  // Remove natural-loop back edges everywhere, then break whatever cycles
  // remain (irreducible regions) along depth-first back edges.
  std::vector<LoopInfo> plan = find_loops(input);
  Work w = Work::from(input);
  for (const LoopInfo& li : plan) {
    for (const Edge& e : li.back_edges) {
      w.edges.erase(e);
      w.back_edges.erase(e);
      out.removed_back_edges.insert(e);
    }
  }
  {
    const Graph snap = w.graph();
    std::vector<std::uint32_t> fns = w.function_of;
    std::sort(fns.begin(), fns.end());
    fns.erase(std::unique(fns.begin(), fns.end()), fns.end());
    for (std::uint32_t fn : fns) {
      const FunctionView view =
          make_function_view(snap, w.function_of, w.call_edges, w.return_edges, fn);
      const VertexId entry_local = view.to_local.at(function_entry(input, fn));
      for (const Edge& le : dfs_back_edges(view.local, entry_local)) {
        if (view.summary_edges.count(le)) {
          throw std::logic_error("summary edge " + edge_str(le) + " closes a residual cycle");
        }
        const Edge ge{view.to_global[le.first], view.to_global[le.second]};
        w.edges.erase(ge);
        w.back_edges.erase(ge);
        out.unguided_cycle_edges.insert(ge);
      }
    }
  }

  // Caller-callee extraction, callees first.
  std::vector<FunctionExtract> extracts;
  run_caller_callee(w, extracts, out.skipped_functions);

  // Set up the root and function regions.
  std::vector<RegionBuild> builds(1 + extracts.size());
  std::map<std::uint32_t, std::size_t> region_of_fn;
  region_of_fn[0] = 0;
  {
    RegionBuild& root = builds[0];
    root.kind = Region::Kind::kRoot;
    const VertexId entry0 = w.find_kind(0, NodeKind::kEntry);
    if (entry0 == kNoVertex) {
      throw std::logic_error("the entry function lost its entry vertex");
    }
    root.name = function_name(w, entry0, 0);
    root.graph = w.graph();
    root.entry = entry0;
    for (VertexId v = 0; v < w.n; ++v) {
      if (w.function_of[v] == 0 && w.kinds[v] == NodeKind::kExit) root.exits.push_back(v);
    }
    root.to_icfg = w.to_input;
    root.is_virtual.resize(w.n);
    for (VertexId v = 0; v < w.n; ++v) {
      root.is_virtual[v] = w.kinds[v] == NodeKind::kVirtual;
    }
    root.descend_fn = w.descend_fn;
  }
  for (std::size_t i = 0; i < extracts.size(); ++i) {
    FunctionExtract& fe = extracts[i];
    RegionBuild& rb = builds[1 + i];
    rb.kind = Region::Kind::kFunction;
    rb.name = fe.name;
    rb.graph = std::move(fe.sr.subgraph);
    rb.entry = fe.sr.entry;
    rb.exits = fe.sr.exits;
    rb.to_icfg = std::move(fe.to_input);
    rb.is_virtual = std::move(fe.is_virtual);
    rb.descend_fn = std::move(fe.descend_fn);
    region_of_fn[fe.fn] = 1 + i;
  }

  // Hand each planned loop to the region that holds its header, mapping its
  // body to region-local ids and absorbing the stand-ins that replaced call
  // sites inside the body.
  std::map<VertexId, std::pair<std::size_t, VertexId>> locate;
  for (std::size_t r = 0; r < builds.size(); ++r) {
    for (VertexId v = 0; v < builds[r].graph.vertex_count(); ++v) {
      if (builds[r].to_icfg[v] != kNoVertex) locate[builds[r].to_icfg[v]] = {r, v};
    }
  }
  for (const LoopInfo& li : plan) {
    const auto at = locate.find(li.header);
    if (at == locate.end()) {
      throw std::logic_error("loop header vanished during caller-callee extraction");
    }
    const std::size_t r = at->second.first;
    RegionBuild& rb = builds[r];
    LoopInfo local;
    local.header = at->second.second;
    std::set<VertexId> body;
    for (VertexId v : li.body) {
      const auto it = locate.find(v);
      if (it == locate.end() || it->second.first != r) {
        throw std::logic_error("loop body straddles regions");
      }
      body.insert(it->second.second);
    }
    for (VertexId v = 0; v < rb.graph.vertex_count(); ++v) {
      if (!rb.is_virtual[v] || v == rb.entry || body.count(v)) continue;
      const auto& preds = rb.graph.predecessors(v);
      const auto& succs = rb.graph.successors(v);
      if (preds.empty() || succs.empty()) continue;
      const bool inside =
          std::all_of(preds.begin(), preds.end(), [&](VertexId u) { return body.count(u); }) &&
          std::all_of(succs.begin(), succs.end(), [&](VertexId u) { return body.count(u); });
      if (inside) body.insert(v);
    }
    local.body.assign(body.begin(), body.end());
    for (const Edge& e : li.back_edges) {
      local.back_edges.insert({locate.at(e.first).second, locate.at(e.second).second});
    }
    rb.pending.push_back(std::move(local));
  }

  // Loop extraction, innermost first; loop regions appended as created never
  // carry pending loops of their own.
  for (std::size_t r = 0; r < builds.size(); ++r) {
    extract_region_loops(builds, r);
  }

  // Finalize: resolve descend targets (bindings to functions that were never
  // extracted are dropped; the entry function resolves to the root region).
  out.regions.reserve(builds.size());
  for (RegionBuild& rb : builds) {
    Region reg;
    reg.kind = rb.kind;
    reg.name = std::move(rb.name);
    reg.graph = std::move(rb.graph);
    reg.entry = rb.entry;
    reg.exits = std::move(rb.exits);
    reg.to_icfg = std::move(rb.to_icfg);
    reg.is_virtual = std::move(rb.is_virtual);
    reg.latches = std::move(rb.latches);
    reg.descend = std::move(rb.descend_region);
    for (const auto& [v, callee] : rb.descend_fn) {
      const auto found = region_of_fn.find(callee);
      if (found != region_of_fn.end()) reg.descend[v] = found->second;
    }
    out.regions.push_back(std::move(reg));
  }
  out.root = 0;
  return out;
}

std::string decomposition_to_json(const Decomposition& d) {
  nlohmann::json j;
  j["root"] = d.root;
  auto edges_to_json = [](const EdgeSet& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Edge& e : s) arr.push_back({e.first, e.second});
    return arr;
  };
  j["removed_back_edges"] = edges_to_json(d.removed_back_edges);
  j["unguided_cycle_edges"] = edges_to_json(d.unguided_cycle_edges);
  j["skipped_functions"] = d.skipped_functions;
  nlohmann::json regions = nlohmann::json::array();
  for (const Region& r : d.regions) {
    nlohmann::json jr;
    switch (r.kind) {
      case Region::Kind::kRoot: jr["kind"] = "root"; break;
      case Region::Kind::kFunction: jr["kind"] = "function"; break;
      case Region::Kind::kLoop: jr["kind"] = "loop"; break;
    }
    jr["name"] = r.name;
    jr["graph"] = nlohmann::json::parse(graph_to_json(r.graph));
    jr["entry"] = r.entry;
    jr["exits"] = r.exits;
    nlohmann::json to_icfg = nlohmann::json::array();
    for (VertexId v : r.to_icfg) {
      if (v == kNoVertex) {
        to_icfg.push_back(nullptr);
      } else {
        to_icfg.push_back(v);
      }
    }
    jr["to_icfg"] = std::move(to_icfg);
    jr["virtual"] = r.is_virtual;
    nlohmann::json descend = nlohmann::json::object();
    for (const auto& [v, target] : r.descend) descend[std::to_string(v)] = target;
    jr["descend"] = std::move(descend);
    jr["latches"] = r.latches;
    regions.push_back(std::move(jr));
  }
  j["regions"] = std::move(regions);
  return j.dump(2) + "\n";
}

}  // namespace pcsym

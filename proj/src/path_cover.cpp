#include "pcsym/path_cover.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <limits>
#include <set>

#include <json.hpp>

namespace pcsym {

using nlohmann::json;

void check_path_cover(const Graph& g, const PathCover& p) {
  std::vector<bool> covered(g.vertex_count(), false);
  for (const auto& path : p.paths) {
    if (path.empty()) throw ValidationError("path cover contains an empty path");
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (path[i] >= g.vertex_count())
        throw ValidationError("path cover vertex " + std::to_string(path[i]) + " out of range");
      covered[path[i]] = true;
      if (i + 1 < path.size() && !g.has_edge(path[i], path[i + 1]))
        throw ValidationError("path cover pair (" + std::to_string(path[i]) + "," +
                              std::to_string(path[i + 1]) + ") is not an edge");
    }
  }
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (!covered[v]) throw ValidationError("vertex " + std::to_string(v) + " is uncovered");
}

PathCover path_cover_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("path cover JSON parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("paths") || !j["paths"].is_array())
    throw ValidationError("path cover JSON: expected object with \"paths\" array");
  PathCover p;
  for (const auto& path : j["paths"]) {
    if (!path.is_array()) throw ValidationError("path cover JSON: each path must be an array");
    std::vector<VertexId> vs;
    for (const auto& v : path) {
      if (!v.is_number_unsigned())
        throw ValidationError("path cover JSON: vertex ids must be unsigned");
      vs.push_back(v.get<VertexId>());
    }
    p.paths.push_back(std::move(vs));
  }
  if (j.contains("size") && j["size"].get<std::size_t>() != p.paths.size())
    throw ValidationError("path cover JSON: \"size\" disagrees with \"paths\" length");
  return p;
}

std::string path_cover_to_json(const PathCover& p) {
  json j;
  j["paths"] = json::array();
  for (const auto& path : p.paths) j["paths"].push_back(path);
  j["size"] = p.paths.size();
  return j.dump(2) + "\n";
}

BipartiteGraph to_bipartite(const Graph& g) {
  if (!is_dag(g)) throw ValidationError("to_bipartite: input graph is cyclic");
  ReachabilityMatrix reach = reachability(g);
  const VertexId n = g.vertex_count();
  BipartiteGraph b(n, n);
  for (VertexId i = 0; i < n; ++i)
    for (VertexId j = 0; j < n; ++j)
      if (i != j && reach.reaches(i, j)) b.add_edge(i, j);
  return b;
}

void complete_path(const Graph& g, std::vector<VertexId>& path) {
  constexpr VertexId kInf = std::numeric_limits<VertexId>::max();
  const VertexId n = g.vertex_count();

  // Nearest zero-out-degree (forward) or zero-in-degree (backward) vertex by
  // edge distance, ties by smallest id; always exists in a finite DAG.
  auto nearest = [&](VertexId from, bool forward) -> VertexId {
    std::vector<VertexId> dist(n, kInf);
    dist[from] = 0;
    std::deque<VertexId> queue{from};
    VertexId best = kInf, best_dist = kInf;
    while (!queue.empty()) {
      VertexId cur = queue.front();
      queue.pop_front();
      if (dist[cur] > best_dist) break;
      const auto& next = forward ? g.successors(cur) : g.predecessors(cur);
      if (next.empty()) {
        if (dist[cur] < best_dist || (dist[cur] == best_dist && cur < best)) {
          best = cur;
          best_dist = dist[cur];
        }
        continue;
      }
      for (VertexId s : next) {
        if (dist[s] == kInf) {
          dist[s] = dist[cur] + 1;
          queue.push_back(s);
        }
      }
    }
    return best;
  };

  if (!g.predecessors(path.front()).empty()) {
    VertexId source = nearest(path.front(), /*forward=*/false);
    std::vector<VertexId> prefix = shortest_path(g, source, path.front());
    prefix.pop_back();
    path.insert(path.begin(), prefix.begin(), prefix.end());
  }
  if (!g.successors(path.back()).empty()) {
    VertexId sink = nearest(path.back(), /*forward=*/true);
    std::vector<VertexId> suffix = shortest_path(g, path.back(), sink);
    path.insert(path.end(), suffix.begin() + 1, suffix.end());
  }
}

PathCover matching_to_chains(const Matching& m, const Graph& g) {
  PathCover cover;
  std::vector<bool> touched(g.vertex_count(), false);

  for (auto [u, w] : m.pairs) {
    touched[u] = touched[w] = true;
    std::vector<VertexId> sub;
    if (g.has_edge(u, w)) {
      sub = {u, w};
    } else {
      sub = shortest_path(g, u, w);
      if (sub.empty())
        throw ValidationError("matching pair (" + std::to_string(u) + "," + std::to_string(w) +
                              ") has no realizing path");
    }
    // Splice onto existing chains until neither end continues one. Chain
    // endpoints are matched-pair endpoints, each the head of at most one
    // chain and the tail of at most one, so the merge order is forced; the
    // lowest-index scan only settles which copy is erased first.
    for (;;) {
      std::size_t hit = cover.paths.size();
      bool append = false;
      for (std::size_t i = 0; i < cover.paths.size(); ++i) {
        if (cover.paths[i].back() == sub.front()) {
          hit = i;
          append = true;
          break;
        }
        if (cover.paths[i].front() == sub.back()) {
          hit = i;
          append = false;
          break;
        }
      }
      if (hit == cover.paths.size()) break;
      std::vector<VertexId> merged;
      if (append) {
        merged = cover.paths[hit];
        merged.insert(merged.end(), sub.begin() + 1, sub.end());
      } else {
        merged = sub;
        merged.insert(merged.end(), cover.paths[hit].begin() + 1, cover.paths[hit].end());
      }
      cover.paths.erase(cover.paths.begin() + static_cast<std::ptrdiff_t>(hit));
      sub = std::move(merged);
    }
    cover.paths.push_back(std::move(sub));
  }

  // One chain per vertex no pair touches, even when an expansion already
  // passes through it: the |V| - |pairs| count depends on every vertex
  // starting its own chain.
  for (VertexId v = 0; v < g.vertex_count(); ++v)
    if (!touched[v]) cover.paths.push_back({v});

  return cover;
}

PathCover matching_to_mpc(const Matching& m, const Graph& g) {
  PathCover cover = matching_to_chains(m, g);
  for (auto& path : cover.paths) complete_path(g, path);
  return cover;
}

PathCover compute_mpc(const Graph& g, std::uint64_t seed) {
  if (!is_dag(g)) throw ValidationError("compute_mpc: input graph is cyclic");
  return matching_to_mpc(hopcroft_karp(to_bipartite(g), seed), g);
}

namespace {

// Independent reachability for the oracle: per-pair DFS probe over the raw
// successor lists, no shared ReachabilityMatrix.
bool dfs_probe(const Graph& g, VertexId from, VertexId to) {
  std::vector<bool> seen(g.vertex_count(), false);
  std::vector<VertexId> stack(g.successors(from).begin(), g.successors(from).end());
  for (VertexId v : stack) seen[v] = true;
  while (!stack.empty()) {
    VertexId v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (VertexId s : g.successors(v)) {
      if (!seen[s]) {
        seen[s] = true;
        stack.push_back(s);
      }
    }
  }
  return false;
}

// Exhaustive search over chains (reachability-paths). A vertex subset forms
// at most one chain (the DAG order is forced), so there are at most 2^n
// chains; the minimum cover is computed by DP over uncovered-vertex bitmasks
// with the lowest uncovered vertex as pivot.
struct ChainSearch {
  VertexId n;
  std::vector<std::vector<VertexId>> chains;
  std::vector<std::uint32_t> chain_bits;
  std::vector<std::vector<std::size_t>> chains_with;  // vertex -> chain indices
  std::vector<std::uint8_t> need;                     // mask -> min chains (memo)
  std::set<std::set<std::vector<VertexId>>> found;

  ChainSearch(const Graph& g, const std::vector<std::vector<VertexId>>& closure_succ)
      : n(g.vertex_count()) {
    std::vector<VertexId> current;
    for (VertexId v = 0; v < n; ++v) grow(closure_succ, v, current);
    chains_with.resize(n);
    chain_bits.reserve(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      std::uint32_t bits = 0;
      for (VertexId v : chains[c]) {
        bits |= 1u << v;
        chains_with[v].push_back(c);
      }
      chain_bits.push_back(bits);
    }
    need.assign(std::size_t{1} << n, 0xFF);
  }

  void grow(const std::vector<std::vector<VertexId>>& closure_succ, VertexId v,
            std::vector<VertexId>& current) {
    current.push_back(v);
    chains.push_back(current);
    for (VertexId next : closure_succ[v]) grow(closure_succ, next, current);
    current.pop_back();
  }

  std::uint8_t min_chains(std::uint32_t mask) {
    if (mask == 0) return 0;
    std::uint8_t& memo = need[mask];
    if (memo != 0xFF) return memo;
    VertexId pivot = static_cast<VertexId>(std::countr_zero(mask));
    std::uint8_t best = 0xFE;
    for (std::size_t c : chains_with[pivot])
      best = std::min<std::uint8_t>(best, min_chains(mask & ~chain_bits[c]));
    memo = static_cast<std::uint8_t>(best + 1);
    return memo;
  }

  void collect(std::uint32_t mask, std::size_t remaining,
               std::set<std::vector<VertexId>>& chosen) {
    if (mask == 0) {
      if (remaining == 0) found.insert(chosen);
      return;
    }
    if (min_chains(mask) > remaining) return;
    VertexId pivot = static_cast<VertexId>(std::countr_zero(mask));
    for (std::size_t c : chains_with[pivot]) {
      if (min_chains(mask & ~chain_bits[c]) > remaining - 1) continue;
      auto [it, fresh] = chosen.insert(chains[c]);
      if (!fresh) continue;  // the same chain twice can never be minimum
      collect(mask & ~chain_bits[c], remaining - 1, chosen);
      chosen.erase(it);
    }
  }
};

}  // namespace

BruteForceMpcResult brute_force_mpc(const Graph& g, std::size_t limit) {
  if (!is_dag(g)) throw ValidationError("brute_force_mpc: input graph is cyclic");
  if (g.vertex_count() > limit || limit > 20)
    throw ValidationError("brute_force_mpc: graph too large for exhaustive search (" +
                          std::to_string(g.vertex_count()) + " vertices, limit " +
                          std::to_string(limit) + ", hard cap 20)");
  BruteForceMpcResult result;
  if (g.vertex_count() == 0) return result;

  const VertexId n = g.vertex_count();
  std::vector<std::vector<VertexId>> closure_succ(n);
  for (VertexId i = 0; i < n; ++i)
    for (VertexId j = 0; j < n; ++j)
      if (i != j && dfs_probe(g, i, j)) closure_succ[i].push_back(j);

  ChainSearch search(g, closure_succ);
  std::uint32_t full = static_cast<std::uint32_t>((std::uint64_t{1} << n) - 1);
  result.min_size = search.min_chains(full);
  std::set<std::vector<VertexId>> chosen;
  search.collect(full, result.min_size, chosen);
  for (const auto& canon : search.found) {
    PathCover cover;
    cover.paths.assign(canon.begin(), canon.end());
    result.all_covers.push_back(std::move(cover));
  }
  return result;
}

Matching mpc_to_matching(const PathCover& p, const Graph& g) {
  std::vector<bool> seen(g.vertex_count(), false);
  Matching m;
  for (const auto& path : p.paths) {
    std::vector<VertexId> thinned;
    for (VertexId v : path) {
      if (v >= g.vertex_count())
        throw ValidationError("mpc_to_matching: vertex " + std::to_string(v) + " out of range");
      if (!seen[v]) {
        seen[v] = true;
        thinned.push_back(v);
      }
    }
    for (std::size_t i = 0; i + 1 < thinned.size(); ++i)
      m.pairs.emplace_back(thinned[i], thinned[i + 1]);
  }
  std::sort(m.pairs.begin(), m.pairs.end());
  return m;
}

}  // namespace pcsym

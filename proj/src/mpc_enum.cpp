#include "pcsym/mpc_enum.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <json.hpp>

namespace pcsym {

namespace {

constexpr VertexId kNone = std::numeric_limits<VertexId>::max();

// Exchange-tree enumeration of maximum matchings. Invariant for enumerate():
// the current matching plus the forced edges has already been emitted; the
// call emits every other maximum matching of the remaining graph exactly once.
struct MatchingEnum {
  std::vector<std::set<VertexId>> ladj, radj;
  std::vector<VertexId> mleft, mright;
  std::vector<bool> lalive, ralive;
  std::vector<std::pair<VertexId, VertexId>> forced;
  const std::function<bool(const Matching&)>& visit;
  bool stopped = false;

  MatchingEnum(const BipartiteGraph& b, const Matching& initial,
               const std::function<bool(const Matching&)>& visit_)
      : ladj(b.left_count()), radj(b.right_count()),
        mleft(b.left_count(), kNone), mright(b.right_count(), kNone),
        lalive(b.left_count(), true), ralive(b.right_count(), true), visit(visit_) {
    for (VertexId l = 0; l < b.left_count(); ++l)
      for (VertexId r : b.right_neighbors(l)) {
        ladj[l].insert(r);
        radj[r].insert(l);
      }
    for (auto [l, r] : initial.pairs) {
      mleft[l] = r;
      mright[r] = l;
    }
  }

  void emit() {
    Matching m;
    m.pairs = forced;
    for (VertexId l = 0; l < mleft.size(); ++l)
      if (lalive[l] && mleft[l] != kNone) m.pairs.emplace_back(l, mleft[l]);
    std::sort(m.pairs.begin(), m.pairs.end());
    if (!visit(m)) stopped = true;
  }

  // Directed view: matched edges run left->right, unmatched right->left, so a
  // directed cycle is an alternating cycle. Returns matched edges in cycle
  // order, empty when the view is acyclic.
  std::vector<std::pair<VertexId, VertexId>> find_cycle() const {
    const VertexId nl = static_cast<VertexId>(ladj.size());
    // Node encoding: left l -> l, right r -> nl + r.
    auto succ_of = [&](VertexId node, std::vector<VertexId>& out) {
      out.clear();
      if (node < nl) {
        VertexId l = node;
        if (mleft[l] != kNone) out.push_back(nl + mleft[l]);
      } else {
        VertexId r = node - nl;
        for (VertexId l : radj[r])
          if (mleft[l] != r) out.push_back(l);
      }
    };
    const VertexId total = nl + static_cast<VertexId>(radj.size());
    enum : unsigned char { White, Gray, Black };
    std::vector<unsigned char> color(total, White);
    std::vector<VertexId> parent(total, kNone);
    std::vector<VertexId> succ;
    for (VertexId root = 0; root < total; ++root) {
      bool alive = root < nl ? lalive[root] : ralive[root - nl];
      if (!alive || color[root] != White) continue;
      std::vector<std::pair<VertexId, std::size_t>> stack;
      color[root] = Gray;
      stack.emplace_back(root, 0);
      std::vector<std::vector<VertexId>> succs;
      succs.emplace_back();
      succ_of(root, succs.back());
      while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx == succs.back().size()) {
          color[node] = Black;
          stack.pop_back();
          succs.pop_back();
          continue;
        }
        VertexId next = succs.back()[idx++];
        if (color[next] == Gray) {
          // Walk the stack back to `next` to materialize the cycle.
          std::vector<VertexId> nodes;
          for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
            nodes.push_back(it->first);
            if (it->first == next) break;
          }
          std::reverse(nodes.begin(), nodes.end());
          std::vector<std::pair<VertexId, VertexId>> matched;
          for (VertexId n : nodes)
            if (n < nl) matched.emplace_back(n, mleft[n]);
          return matched;
        }
        if (color[next] == White) {
          color[next] = Gray;
          stack.emplace_back(next, 0);
          succs.emplace_back();
          succ_of(next, succs.back());
        }
      }
    }
    return {};
  }

  // Length-2 alternating path from an uncovered vertex (either side).
  // Returns (e_new, e_old): swapping e_old for e_new gives another maximum
  // matching. e_new is the edge incident to the uncovered vertex.
  bool find_transposition(std::pair<VertexId, VertexId>& e_new,
                          std::pair<VertexId, VertexId>& e_old) const {
    for (VertexId r = 0; r < radj.size(); ++r) {
      if (!ralive[r] || mright[r] != kNone) continue;
      for (VertexId l : radj[r]) {
        if (mleft[l] != kNone) {
          e_new = {l, r};
          e_old = {l, mleft[l]};
          return true;
        }
      }
    }
    for (VertexId l = 0; l < ladj.size(); ++l) {
      if (!lalive[l] || mleft[l] != kNone) continue;
      for (VertexId r : ladj[l]) {
        if (mright[r] != kNone) {
          e_new = {l, r};
          e_old = {mright[r], r};
          return true;
        }
      }
    }
    return false;
  }

  void remove_edge(VertexId l, VertexId r) {
    ladj[l].erase(r);
    radj[r].erase(l);
  }
  void add_edge(VertexId l, VertexId r) {
    ladj[l].insert(r);
    radj[r].insert(l);
  }

  // Removes l, r and everything incident; returns the removed edges.
  std::vector<std::pair<VertexId, VertexId>> remove_pair(VertexId l, VertexId r) {
    std::vector<std::pair<VertexId, VertexId>> removed;
    for (VertexId r2 : ladj[l]) {
      removed.emplace_back(l, r2);
      radj[r2].erase(l);
    }
    ladj[l].clear();
    for (VertexId l2 : radj[r]) {
      if (l2 == l) continue;  // already gone
      removed.emplace_back(l2, r);
      ladj[l2].erase(r);
    }
    radj[r].clear();
    lalive[l] = false;
    ralive[r] = false;
    return removed;
  }

  void restore_pair(VertexId l, VertexId r,
                    const std::vector<std::pair<VertexId, VertexId>>& removed) {
    lalive[l] = true;
    ralive[r] = true;
    for (auto [l2, r2] : removed) add_edge(l2, r2);
  }

  void branch_forcing(std::pair<VertexId, VertexId> e) {
    // All maximum matchings containing e: drop its endpoints, force e.
    auto [l, r] = e;
    VertexId saved_l = mleft[l], saved_r = mright[r];
    mleft[l] = kNone;
    mright[r] = kNone;
    auto removed = remove_pair(l, r);
    forced.push_back(e);
    enumerate();
    forced.pop_back();
    restore_pair(l, r, removed);
    mleft[l] = saved_l;
    mright[r] = saved_r;
  }

  void enumerate() {
    if (stopped) return;

    auto cycle = find_cycle();
    if (!cycle.empty()) {
      std::pair<VertexId, VertexId> e = *std::min_element(cycle.begin(), cycle.end());
      // M' = M xor cycle: every matched edge (l,r) on the cycle flips to the
      // cycle successor's pairing; realized by rotating the right endpoints.
      std::vector<std::pair<VertexId, VertexId>> old_pairs = cycle;
      for (std::size_t i = 0; i < cycle.size(); ++i) {
        auto [l, r] = cycle[i];
        VertexId r_prev = cycle[(i + cycle.size() - 1) % cycle.size()].second;
        mleft[l] = r_prev;
        mright[r_prev] = l;
      }
      emit();
      if (stopped) return;

      auto exchanged = std::vector<std::pair<VertexId, VertexId>>();
      for (auto [l, r] : old_pairs) exchanged.emplace_back(l, mleft[l]);

      // Side A: matchings containing e. Restore M first (e is in M, not M').
      for (auto [l, r] : old_pairs) {
        mleft[l] = r;
        mright[r] = l;
      }
      if (mleft[e.first] != e.second)
        throw std::logic_error("matching enumeration lost the exchanged edge");
      branch_forcing(e);
      if (stopped) return;

      // Side B: matchings avoiding e, with M' as the current matching.
      for (auto [l, r] : exchanged) {
        mleft[l] = r;
        mright[r] = l;
      }
      remove_edge(e.first, e.second);
      enumerate();
      add_edge(e.first, e.second);
      for (auto [l, r] : old_pairs) {
        mleft[l] = r;
        mright[r] = l;
      }
      return;
    }

    std::pair<VertexId, VertexId> e_new, e_old;
    if (!find_transposition(e_new, e_old)) return;  // unique maximum matching here

    // M' = M - e_old + e_new contains e_new; emit, then split on e_new.
    mleft[e_old.first] = kNone;
    mright[e_old.second] = kNone;
    mleft[e_new.first] = e_new.second;
    mright[e_new.second] = e_new.first;
    emit();
    if (stopped) return;
    branch_forcing(e_new);

    // Back to M for the e_new-free side.
    mleft[e_new.first] = kNone;
    mright[e_new.second] = kNone;
    mleft[e_old.first] = e_old.second;
    mright[e_old.second] = e_old.first;
    if (stopped) return;

    remove_edge(e_new.first, e_new.second);
    enumerate();
    add_edge(e_new.first, e_new.second);
  }
};

}  // namespace

bool for_each_max_matching(const BipartiteGraph& b, std::uint64_t seed,
                           const std::function<bool(const Matching&)>& visit) {
  Matching initial = hopcroft_karp(b, seed);
  MatchingEnum en(b, initial, visit);
  en.emit();
  if (!en.stopped) en.enumerate();
  return !en.stopped;
}

MatchingSet enumerate_max_matchings(const BipartiteGraph& b, std::size_t cap,
                                    std::uint64_t seed) {
  MatchingSet out;
  bool complete = for_each_max_matching(b, seed, [&](const Matching& m) {
    if (cap != 0 && out.matchings.size() == cap) return false;
    out.matchings.push_back(m);
    return true;
  });
  out.capped = !complete;
  return out;
}

MpcSet enumerate_mpcs(const Graph& g, std::size_t cap, std::uint64_t seed) {
  if (!is_dag(g)) throw ValidationError("enumerate_mpcs: input graph is cyclic");
  BipartiteGraph b = to_bipartite(g);
  MpcSet out;
  std::set<std::vector<std::vector<VertexId>>> seen;
  bool complete = for_each_max_matching(b, seed, [&](const Matching& m) {
    // Chain form, not source-to-sink completed: completion is many-to-one
    // (a diamond has one completed cover but several chain covers), and the
    // point of enumerating is to keep the alternatives apart. Consumers that
    // want complete paths run complete_path per path.
    PathCover cover = matching_to_chains(m, g);
    std::vector<std::vector<VertexId>> key = cover.paths;
    std::sort(key.begin(), key.end());
    if (!seen.insert(std::move(key)).second) return true;  // duplicate cover
    if (cap != 0 && out.covers.size() == cap) return false;
    out.covers.push_back(std::move(cover));
    return true;
  });
  out.capped = !complete;
  return out;
}

std::string mpc_set_to_json(const MpcSet& s) {
  nlohmann::json j;
  j["covers"] = nlohmann::json::array();
  for (const auto& cover : s.covers) {
    nlohmann::json c;
    c["paths"] = cover.paths;
    c["size"] = cover.paths.size();
    j["covers"].push_back(std::move(c));
  }
  j["capped"] = s.capped;
  return j.dump(2) + "\n";
}

}  // namespace pcsym


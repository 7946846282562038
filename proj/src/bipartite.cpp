#include "pcsym/bipartite.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

namespace pcsym {

void BipartiteGraph::add_edge(VertexId left, VertexId right) {
  if (left >= left_count() || right >= right_count_)
    throw ValidationError("bipartite edge (" + std::to_string(left) + "," +
                          std::to_string(right) + ") out of range");
  auto& adj = left_adj_[left];
  auto it = std::lower_bound(adj.begin(), adj.end(), right);
  if (it != adj.end() && *it == right)
    throw ValidationError("duplicate bipartite edge (" + std::to_string(left) + "," +
                          std::to_string(right) + ")");
  adj.insert(it, right);
  ++edge_count_;
}

bool BipartiteGraph::has_edge(VertexId left, VertexId right) const {
  if (left >= left_count() || right >= right_count_) return false;
  const auto& adj = left_adj_[left];
  return std::binary_search(adj.begin(), adj.end(), right);
}

void check_matching(const BipartiteGraph& b, const Matching& m) {
  std::vector<bool> left_used(b.left_count(), false), right_used(b.right_count(), false);
  for (auto [l, r] : m.pairs) {
    if (!b.has_edge(l, r))
      throw ValidationError("matching pair (" + std::to_string(l) + "," + std::to_string(r) +
                            ") is not an edge");
    if (left_used[l] || right_used[r])
      throw ValidationError("matching repeats an endpoint at (" + std::to_string(l) + "," +
                            std::to_string(r) + ")");
    left_used[l] = right_used[r] = true;
  }
}

namespace {

constexpr VertexId kNone = std::numeric_limits<VertexId>::max();
constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

struct HopcroftKarp {
  const BipartiteGraph& b;
  const std::vector<VertexId>& order;  // left vertices in seeded order
  std::vector<VertexId> match_left;    // left -> right or kNone
  std::vector<VertexId> match_right;   // right -> left or kNone
  std::vector<std::uint32_t> dist;

  explicit HopcroftKarp(const BipartiteGraph& b_, const std::vector<VertexId>& order_)
      : b(b_), order(order_), match_left(b.left_count(), kNone),
        match_right(b.right_count(), kNone), dist(b.left_count()) {}

  bool bfs_layers() {
    std::deque<VertexId> queue;
    for (VertexId l : order) {
      if (match_left[l] == kNone) {
        dist[l] = 0;
        queue.push_back(l);
      } else {
        dist[l] = kInf;
      }
    }
    bool reachable_free_right = false;
    while (!queue.empty()) {
      VertexId l = queue.front();
      queue.pop_front();
      for (VertexId r : b.right_neighbors(l)) {
        VertexId next = match_right[r];
        if (next == kNone) {
          reachable_free_right = true;
        } else if (dist[next] == kInf) {
          dist[next] = dist[l] + 1;
          queue.push_back(next);
        }
      }
    }
    return reachable_free_right;
  }

  bool try_augment(VertexId l) {
    for (VertexId r : b.right_neighbors(l)) {
      VertexId next = match_right[r];
      if (next == kNone || (dist[next] == dist[l] + 1 && try_augment(next))) {
        match_left[l] = r;
        match_right[r] = l;
        return true;
      }
    }
    dist[l] = kInf;  // dead end in this phase
    return false;
  }

  void run() {
    while (bfs_layers())
      for (VertexId l : order)
        if (match_left[l] == kNone) try_augment(l);
  }
};

}  // namespace

Matching hopcroft_karp(const BipartiteGraph& b, std::uint64_t seed) {
  std::vector<VertexId> order(b.left_count());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  HopcroftKarp hk(b, order);
  hk.run();

  Matching m;
  for (VertexId l = 0; l < b.left_count(); ++l)
    if (hk.match_left[l] != kNone) m.pairs.emplace_back(l, hk.match_left[l]);
  std::sort(m.pairs.begin(), m.pairs.end());
  return m;
}

}  // namespace pcsym

#include "pcsym/graph.hpp"

#include <algorithm>
#include <deque>
#include <queue>

namespace pcsym {

void Graph::check_vertex(VertexId v) const {
  if (v >= vertex_count())
    throw ValidationError("vertex id " + std::to_string(v) + " out of range (vertex_count=" +
                          std::to_string(vertex_count()) + ")");
}

VertexId Graph::add_vertex() {
  succ_.emplace_back();
  pred_.emplace_back();
  return static_cast<VertexId>(succ_.size() - 1);
}

void Graph::add_edge(VertexId u, VertexId v) {
  check_vertex(u);
  check_vertex(v);
  if (u == v)
    throw ValidationError("self-loop rejected at vertex " + std::to_string(u));
  auto& s = succ_[u];
  auto it = std::lower_bound(s.begin(), s.end(), v);
  if (it != s.end() && *it == v)
    throw ValidationError("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
  s.insert(it, v);
  auto& p = pred_[v];
  p.insert(std::lower_bound(p.begin(), p.end(), u), u);
  ++edge_count_;
}

bool Graph::has_edge(VertexId u, VertexId v) const {
  check_vertex(u);
  check_vertex(v);
  const auto& s = succ_[u];
  return std::binary_search(s.begin(), s.end(), v);
}

std::vector<std::pair<VertexId, VertexId>> Graph::edges() const {
  std::vector<std::pair<VertexId, VertexId>> out;
  out.reserve(edge_count_);
  for (VertexId u = 0; u < vertex_count(); ++u)
    for (VertexId v : succ_[u]) out.emplace_back(u, v);
  return out;
}

void Graph::set_label(VertexId v, std::string label) {
  check_vertex(v);
  labels_[v] = std::move(label);
}

std::optional<std::string> Graph::label(VertexId v) const {
  auto it = labels_.find(v);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

bool Graph::operator==(const Graph& other) const {
  return succ_ == other.succ_ && labels_ == other.labels_;
}

ReachabilityMatrix reachability(const Graph& g) {
  const VertexId n = g.vertex_count();
  ReachabilityMatrix m(n);
  std::vector<bool> seen(n);
  std::deque<VertexId> queue;
  for (VertexId src = 0; src < n; ++src) {
    std::fill(seen.begin(), seen.end(), false);
    // Seed with successors, not src itself: reaches(i,i) must require a cycle.
    for (VertexId s : g.successors(src)) {
      if (!seen[s]) {
        seen[s] = true;
        queue.push_back(s);
      }
    }
    while (!queue.empty()) {
      VertexId v = queue.front();
      queue.pop_front();
      m.set(src, v);
      for (VertexId s : g.successors(v)) {
        if (!seen[s]) {
          seen[s] = true;
          queue.push_back(s);
        }
      }
    }
  }
  return m;
}

bool is_dag(const Graph& g) {
  // Iterative three-color DFS; a gray->gray edge is a cycle.
  const VertexId n = g.vertex_count();
  enum : unsigned char { White, Gray, Black };
  std::vector<unsigned char> color(n, White);
  std::vector<std::pair<VertexId, std::size_t>> stack;
  for (VertexId root = 0; root < n; ++root) {
    if (color[root] != White) continue;
    color[root] = Gray;
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [v, idx] = stack.back();
      const auto& succ = g.successors(v);
      if (idx == succ.size()) {
        color[v] = Black;
        stack.pop_back();
        continue;
      }
      VertexId next = succ[idx++];
      if (color[next] == Gray) return false;
      if (color[next] == White) {
        color[next] = Gray;
        stack.emplace_back(next, 0);
      }
    }
  }
  return true;
}

std::vector<VertexId> topological_order(const Graph& g) {
  const VertexId n = g.vertex_count();
  std::vector<VertexId> indeg(n, 0);
  for (VertexId v = 0; v < n; ++v)
    indeg[v] = static_cast<VertexId>(g.predecessors(v).size());
  std::priority_queue<VertexId, std::vector<VertexId>, std::greater<>> ready;
  for (VertexId v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push(v);
  std::vector<VertexId> order;
  order.reserve(n);
  while (!ready.empty()) {
    VertexId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (VertexId s : g.successors(v))
      if (--indeg[s] == 0) ready.push(s);
  }
  if (order.size() != n) throw ValidationError("topological_order: graph has a cycle");
  return order;
}

InducedSubgraph induced_subgraph(const Graph& g, const std::vector<VertexId>& vs) {
  InducedSubgraph out;
  out.to_original = vs;
  std::sort(out.to_original.begin(), out.to_original.end());
  out.to_original.erase(std::unique(out.to_original.begin(), out.to_original.end()),
                        out.to_original.end());
  out.graph = Graph(static_cast<VertexId>(out.to_original.size()));
  for (VertexId local = 0; local < out.to_original.size(); ++local) {
    VertexId orig = out.to_original[local];
    if (orig >= g.vertex_count())
      throw ValidationError("induced_subgraph: vertex " + std::to_string(orig) + " out of range");
    out.to_local[orig] = local;
    if (auto l = g.label(orig)) out.graph.set_label(local, *l);
  }
  for (VertexId local = 0; local < out.to_original.size(); ++local)
    for (VertexId s : g.successors(out.to_original[local])) {
      auto it = out.to_local.find(s);
      if (it != out.to_local.end()) out.graph.add_edge(local, it->second);
    }
  return out;
}

std::vector<VertexId> shortest_path(const Graph& g, VertexId u, VertexId v) {
  const VertexId n = g.vertex_count();
  if (u >= n || v >= n) throw ValidationError("shortest_path: vertex out of range");
  if (u == v) return {u};
  // Distance-to-v over reversed edges, then a greedy forward walk taking the
  // smallest-id successor that still shortens the distance; among equal-length
  // paths this yields the lexicographically smallest one.
  constexpr VertexId kInf = static_cast<VertexId>(-1);
  std::vector<VertexId> dist(n, kInf);
  dist[v] = 0;
  std::deque<VertexId> queue{v};
  while (!queue.empty()) {
    VertexId cur = queue.front();
    queue.pop_front();
    for (VertexId p : g.predecessors(cur)) {
      if (dist[p] == kInf) {
        dist[p] = dist[cur] + 1;
        queue.push_back(p);
      }
    }
  }
  if (dist[u] == kInf) return {};
  std::vector<VertexId> path{u};
  VertexId cur = u;
  while (cur != v) {
    for (VertexId s : g.successors(cur)) {
      if (dist[s] != kInf && dist[s] + 1 == dist[cur]) {
        path.push_back(s);
        cur = s;
        break;
      }
    }
  }
  return path;
}

}  // namespace pcsym

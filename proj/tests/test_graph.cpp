#include <doctest.h>

#include <algorithm>
#include <random>

#include "pcsym/graph.hpp"
#include "pcsym/graph_io.hpp"
#include "support/oracles.hpp"

using namespace pcsym;
namespace oracle = pcsym::testing;

TEST_CASE("graph construction rejects malformed edges") {
  Graph g(3);
  g.add_edge(0, 1);
  CHECK_THROWS_AS(g.add_edge(0, 1), ValidationError);  // duplicate
  CHECK_THROWS_AS(g.add_edge(1, 1), ValidationError);  // self-loop
  CHECK_THROWS_AS(g.add_edge(0, 3), ValidationError);  // out of range
  CHECK_THROWS_AS(g.add_edge(7, 0), ValidationError);
  CHECK(g.edge_count() == 1);
  CHECK(g.has_edge(0, 1));
  CHECK_FALSE(g.has_edge(1, 0));
}

TEST_CASE("adjacency lists stay sorted ascending") {
  Graph g(4);
  g.add_edge(0, 3);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(2, 1);
  CHECK(g.successors(0) == std::vector<VertexId>{1, 2, 3});
  CHECK(g.predecessors(1) == std::vector<VertexId>{0, 2});
  CHECK(g.edges() ==
        std::vector<std::pair<VertexId, VertexId>>{{0, 1}, {0, 2}, {0, 3}, {2, 1}});
}

TEST_CASE("add_vertex grows the graph") {
  Graph g;
  CHECK(g.vertex_count() == 0);
  CHECK(g.add_vertex() == 0);
  CHECK(g.add_vertex() == 1);
  g.add_edge(0, 1);
  CHECK(g.vertex_count() == 2);
}

TEST_CASE("reachability of a chain is its transitive closure") {
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  auto m = reachability(g);
  CHECK(m.reaches(0, 1));
  CHECK(m.reaches(0, 2));
  CHECK(m.reaches(1, 2));
  CHECK_FALSE(m.reaches(2, 0));
  CHECK_FALSE(m.reaches(1, 0));
  // No self-reachability without a cycle.
  for (VertexId v = 0; v < 3; ++v) CHECK_FALSE(m.reaches(v, v));
}

TEST_CASE("reachability of an edgeless graph is empty") {
  Graph g(4);
  auto m = reachability(g);
  for (VertexId i = 0; i < 4; ++i)
    for (VertexId j = 0; j < 4; ++j) CHECK_FALSE(m.reaches(i, j));
}

TEST_CASE("reachability marks exactly the vertices on cycles as self-reaching") {
  Graph g(4);  // 0 -> 1 -> 2 -> 1, 3 isolated
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 1);
  auto m = reachability(g);
  CHECK_FALSE(m.reaches(0, 0));
  CHECK(m.reaches(1, 1));
  CHECK(m.reaches(2, 2));
  CHECK_FALSE(m.reaches(3, 3));
}

TEST_CASE("reachability agrees with a per-pair DFS probe on random graphs") {
  std::mt19937_64 rng(11);
  for (int iter = 0; iter < 50; ++iter) {
    Graph g = oracle::random_dag(rng, 10, 0.3);
    auto m = reachability(g);
    for (VertexId i = 0; i < g.vertex_count(); ++i)
      for (VertexId j = 0; j < g.vertex_count(); ++j)
        CHECK(m.reaches(i, j) == oracle::dfs_reaches(g, i, j));
  }
  for (int iter = 0; iter < 30; ++iter) {
    Graph g = oracle::random_digraph(rng, 8, 0.2);
    auto m = reachability(g);
    for (VertexId i = 0; i < g.vertex_count(); ++i)
      for (VertexId j = 0; j < g.vertex_count(); ++j)
        CHECK(m.reaches(i, j) == oracle::dfs_reaches(g, i, j));
  }
}

TEST_CASE("reachability is transitively closed") {
  std::mt19937_64 rng(12);
  for (int iter = 0; iter < 20; ++iter) {
    Graph g = oracle::random_digraph(rng, 9, 0.15);
    auto m = reachability(g);
    const VertexId n = g.vertex_count();
    for (VertexId i = 0; i < n; ++i)
      for (VertexId j = 0; j < n; ++j) {
        if (!m.reaches(i, j)) continue;
        for (VertexId k = 0; k < n; ++k)
          if (m.reaches(j, k)) CHECK(m.reaches(i, k));
      }
  }
}

TEST_CASE("is_dag detects chains and cycles") {
  Graph chain(3);
  chain.add_edge(0, 1);
  chain.add_edge(1, 2);
  CHECK(is_dag(chain));

  Graph two_cycle(2);
  two_cycle.add_edge(0, 1);
  two_cycle.add_edge(1, 0);
  CHECK_FALSE(is_dag(two_cycle));

  CHECK(is_dag(Graph(0)));
  CHECK(is_dag(Graph(5)));
}

TEST_CASE("is_dag agrees with Kahn peeling on random graphs") {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 200; ++iter) {
    Graph g = oracle::random_digraph(rng, 10, 0.12);
    CHECK(is_dag(g) == oracle::kahn_is_dag(g));
  }
}

TEST_CASE("topological order respects every edge and prefers small ids") {
  Graph g(4);
  g.add_edge(2, 0);
  g.add_edge(2, 1);
  g.add_edge(0, 1);
  g.add_edge(1, 3);
  CHECK(topological_order(g) == std::vector<VertexId>{2, 0, 1, 3});

  Graph cyc(2);
  cyc.add_edge(0, 1);
  cyc.add_edge(1, 0);
  CHECK_THROWS_AS(topological_order(cyc), ValidationError);

  std::mt19937_64 rng(14);
  for (int iter = 0; iter < 30; ++iter) {
    Graph r = oracle::random_dag(rng, 12, 0.3);
    auto order = topological_order(r);
    REQUIRE(order.size() == r.vertex_count());
    std::vector<VertexId> pos(r.vertex_count());
    for (VertexId i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (auto [u, v] : r.edges()) CHECK(pos[u] < pos[v]);
  }
}

TEST_CASE("induced subgraph over all vertices is an isomorphic copy") {
  Graph g(3);
  g.add_edge(0, 2);
  g.add_edge(1, 2);
  g.set_label(0, "entry");
  auto sub = induced_subgraph(g, {0, 1, 2});
  CHECK(sub.graph == g);
  for (VertexId v = 0; v < 3; ++v) {
    CHECK(sub.to_original[v] == v);
    CHECK(sub.to_local.at(v) == v);
  }
}

TEST_CASE("induced subgraph of one vertex has no edges") {
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  auto sub = induced_subgraph(g, {1});
  CHECK(sub.graph.vertex_count() == 1);
  CHECK(sub.graph.edge_count() == 0);
  CHECK(sub.to_original == std::vector<VertexId>{1});
}

TEST_CASE("induced subgraph rejects unknown vertices") {
  Graph g(2);
  CHECK_THROWS_AS(induced_subgraph(g, {0, 5}), ValidationError);
}

TEST_CASE("induced subgraph keeps exactly the edges inside the subset") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int iter = 0; iter < 40; ++iter) {
    Graph g = oracle::random_digraph(rng, 10, 0.25);
    std::vector<VertexId> vs;
    for (VertexId v = 0; v < g.vertex_count(); ++v)
      if (coin(rng) < 0.5) vs.push_back(v);
    auto sub = induced_subgraph(g, vs);
    REQUIRE(sub.graph.vertex_count() == vs.size());

    // Oracle: filter the original edge list.
    std::vector<std::pair<VertexId, VertexId>> expected;
    for (auto [u, v] : g.edges()) {
      auto iu = sub.to_local.find(u);
      auto iv = sub.to_local.find(v);
      if (iu != sub.to_local.end() && iv != sub.to_local.end())
        expected.emplace_back(iu->second, iv->second);
    }
    std::sort(expected.begin(), expected.end());
    CHECK(sub.graph.edges() == expected);

    for (VertexId local = 0; local < sub.graph.vertex_count(); ++local)
      CHECK(sub.to_local.at(sub.to_original[local]) == local);
  }
}

TEST_CASE("shortest path walks a chain end to end") {
  Graph g(4);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  CHECK(shortest_path(g, 0, 3) == std::vector<VertexId>{0, 1, 2, 3});
  CHECK(shortest_path(g, 2, 2) == std::vector<VertexId>{2});
  CHECK(shortest_path(g, 3, 0).empty());
}

TEST_CASE("shortest path breaks ties toward the lexicographically smallest route") {
  Graph g(4);  // two equal-length routes 0->1->3 and 0->2->3
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(1, 3);
  g.add_edge(2, 3);
  CHECK(shortest_path(g, 0, 3) == std::vector<VertexId>{0, 1, 3});
}

TEST_CASE("shortest path prefers fewer edges over smaller ids") {
  Graph g(4);  // 0->1->2->3 versus the shortcut 0->3
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  g.add_edge(0, 3);
  CHECK(shortest_path(g, 0, 3) == std::vector<VertexId>{0, 3});
}

TEST_CASE("shortest path length matches an independent BFS distance") {
  std::mt19937_64 rng(16);
  for (int iter = 0; iter < 40; ++iter) {
    Graph g = oracle::random_digraph(rng, 10, 0.2);
    // Independent distances: simple per-source BFS counting edges.
    for (VertexId u = 0; u < g.vertex_count(); ++u) {
      std::vector<int> dist(g.vertex_count(), -1);
      std::vector<VertexId> queue{u};
      dist[u] = 0;
      for (std::size_t head = 0; head < queue.size(); ++head) {
        VertexId cur = queue[head];
        for (VertexId s : g.successors(cur))
          if (dist[s] == -1) {
            dist[s] = dist[cur] + 1;
            queue.push_back(s);
          }
      }
      for (VertexId v = 0; v < g.vertex_count(); ++v) {
        auto path = shortest_path(g, u, v);
        if (u == v) continue;
        if (dist[v] == -1) {
          CHECK(path.empty());
          continue;
        }
        REQUIRE(!path.empty());
        CHECK(path.size() == static_cast<std::size_t>(dist[v]) + 1);
        CHECK(path.front() == u);
        CHECK(path.back() == v);
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
          CHECK(g.has_edge(path[i], path[i + 1]));
      }
    }
  }
}

TEST_CASE("graph JSON round-trips structure and labels") {
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.set_label(0, "entry");
  g.set_label(2, "exit");
  Graph back = graph_from_json(graph_to_json(g));
  CHECK(back == g);
}

TEST_CASE("graph JSON accepts the documented shape") {
  Graph g = graph_from_json(
      R"({"vertices": 3, "edges": [[0,1],[1,2]], "labels": {"0": "entry"}})");
  CHECK(g.vertex_count() == 3);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
  CHECK(g.label(0) == std::string("entry"));
  CHECK_FALSE(g.label(1).has_value());

  // edges and labels are optional
  CHECK(graph_from_json(R"({"vertices": 2})").vertex_count() == 2);
}

TEST_CASE("graph JSON rejects malformed input") {
  CHECK_THROWS_AS(graph_from_json("not json"), ValidationError);
  CHECK_THROWS_AS(graph_from_json(R"({"edges": []})"), ValidationError);
  CHECK_THROWS_AS(graph_from_json(R"({"vertices": 2, "edges": [[0,5]]})"), ValidationError);
  CHECK_THROWS_AS(graph_from_json(R"({"vertices": 2, "edges": [[0,0]]})"), ValidationError);
  CHECK_THROWS_AS(graph_from_json(R"({"vertices": 2, "edges": [[0,1],[0,1]]})"),
                  ValidationError);
  CHECK_THROWS_AS(graph_from_json(R"({"vertices": 2, "labels": {"x": "y"}})"),
                  ValidationError);
}

TEST_CASE("DOT subset parses chains, comments, and named nodes") {
  Graph g = graph_from_dot(R"(
    // line comment
    digraph sample {
      a -> b -> c;  /* chain */
      a -> c;
      d;
    }
  )");
  CHECK(g.vertex_count() == 4);
  // Interned in first appearance order: a=0, b=1, c=2, d=3.
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 2));
  CHECK(g.has_edge(0, 2));
  CHECK(g.label(0) == std::string("a"));
  CHECK(g.label(3) == std::string("d"));
}

TEST_CASE("DOT nodes named like their own index get no label") {
  Graph g = graph_from_dot("digraph { 0 -> 1; 1 -> 2; }");
  CHECK(g.vertex_count() == 3);
  CHECK(g.has_edge(0, 1));
  CHECK_FALSE(g.label(0).has_value());

  // Numeric names that disagree with intern order are kept as labels.
  Graph h = graph_from_dot("digraph { 5 -> 3; }");
  CHECK(h.vertex_count() == 2);
  CHECK(h.has_edge(0, 1));
  CHECK(h.label(0) == std::string("5"));
  CHECK(h.label(1) == std::string("3"));
}

TEST_CASE("DOT repeated edges collapse instead of failing") {
  Graph g = graph_from_dot("digraph { a -> b; a -> b; }");
  CHECK(g.edge_count() == 1);
}

TEST_CASE("load_graph dispatches on the leading brace") {
  CHECK(load_graph(R"(  {"vertices": 1})").vertex_count() == 1);
  CHECK(load_graph("digraph { a -> b; }").vertex_count() == 2);
  CHECK_THROWS_AS(load_graph("   "), ValidationError);
}

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "pcsym/mpc_enum.hpp"
#include "support/oracles.hpp"

using namespace pcsym;
namespace oracle = pcsym::testing;

TEST_CASE("a complete 2x2 bipartite graph has exactly two maximum matchings") {
  BipartiteGraph b(2, 2);
  for (VertexId l = 0; l < 2; ++l)
    for (VertexId r = 0; r < 2; ++r) b.add_edge(l, r);
  MatchingSet s = enumerate_max_matchings(b, 0);
  CHECK_FALSE(s.capped);
  REQUIRE(s.matchings.size() == 2);
  std::set<Matching> got(s.matchings.begin(), s.matchings.end());
  std::set<Matching> expected{Matching{{{0, 0}, {1, 1}}}, Matching{{{0, 1}, {1, 0}}}};
  CHECK(got == expected);
}

TEST_CASE("an edgeless bipartite graph has one empty maximum matching") {
  MatchingSet s = enumerate_max_matchings(BipartiteGraph(3, 2), 0);
  CHECK_FALSE(s.capped);
  REQUIRE(s.matchings.size() == 1);
  CHECK(s.matchings[0].size() == 0);
}

TEST_CASE("enumeration equals exhaustive search on random bipartite graphs") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<VertexId> side(1, 6);
  std::uniform_real_distribution<double> dens(0.1, 0.8);
  for (int iter = 0; iter < 150; ++iter) {
    BipartiteGraph b = oracle::random_bipartite(rng, side(rng), side(rng), dens(rng));
    MatchingSet s = enumerate_max_matchings(b, 0, iter);
    CHECK_FALSE(s.capped);
    std::vector<Matching> got = s.matchings;
    std::sort(got.begin(), got.end());
    CHECK(std::adjacent_find(got.begin(), got.end()) == got.end());  // no repeats
    CHECK(got == oracle::all_max_matchings_exhaustive(b));
  }
}

TEST_CASE("every enumerated matching is valid and of maximum cardinality") {
  std::mt19937_64 rng(32);
  for (int iter = 0; iter < 40; ++iter) {
    BipartiteGraph b = oracle::random_bipartite(rng, 6, 6, 0.4);
    std::size_t maximum = hopcroft_karp(b).size();
    MatchingSet s = enumerate_max_matchings(b, 0, iter);
    for (const Matching& m : s.matchings) {
      check_matching(b, m);
      CHECK(m.size() == maximum);
    }
  }
}

TEST_CASE("the cap truncates enumeration and flags only real truncation") {
  BipartiteGraph b(3, 3);
  for (VertexId l = 0; l < 3; ++l)
    for (VertexId r = 0; r < 3; ++r) b.add_edge(l, r);
  // 6 maximum matchings (all permutations of three rights).
  MatchingSet all = enumerate_max_matchings(b, 0);
  CHECK_FALSE(all.capped);
  CHECK(all.matchings.size() == 6);

  MatchingSet four = enumerate_max_matchings(b, 4);
  CHECK(four.capped);
  CHECK(four.matchings.size() == 4);

  // A cap exactly equal to the total is not a truncation.
  MatchingSet six = enumerate_max_matchings(b, 6);
  CHECK_FALSE(six.capped);
  CHECK(six.matchings.size() == 6);
}

TEST_CASE("capped enumeration yields a prefix of the uncapped order") {
  std::mt19937_64 rng(33);
  for (int iter = 0; iter < 20; ++iter) {
    BipartiteGraph b = oracle::random_bipartite(rng, 5, 5, 0.5);
    MatchingSet all = enumerate_max_matchings(b, 0, iter);
    for (std::size_t cap = 1; cap <= all.matchings.size(); ++cap) {
      MatchingSet part = enumerate_max_matchings(b, cap, iter);
      REQUIRE(part.matchings.size() == std::min(cap, all.matchings.size()));
      for (std::size_t i = 0; i < part.matchings.size(); ++i)
        CHECK(part.matchings[i] == all.matchings[i]);
      CHECK(part.capped == (cap < all.matchings.size()));
    }
  }
}

TEST_CASE("the enumeration starts from the seeded matching") {
  std::mt19937_64 rng(34);
  BipartiteGraph b = oracle::random_bipartite(rng, 6, 6, 0.5);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    MatchingSet s = enumerate_max_matchings(b, 0, seed);
    REQUIRE(!s.matchings.empty());
    CHECK(s.matchings.front() == hopcroft_karp(b, seed));
    // Same seed, same order.
    CHECK(enumerate_max_matchings(b, 0, seed).matchings == s.matchings);
  }
}

TEST_CASE("a chain has exactly one minimum cover") {
  Graph g(4);
  for (VertexId v = 0; v + 1 < 4; ++v) g.add_edge(v, v + 1);
  MpcSet s = enumerate_mpcs(g, 0);
  CHECK_FALSE(s.capped);
  REQUIRE(s.covers.size() == 1);
  CHECK(s.covers[0].paths == std::vector<std::vector<VertexId>>{{0, 1, 2, 3}});
}

TEST_CASE("the diamond keeps its alternative covers apart") {
  Graph g(4);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(1, 3);
  g.add_edge(2, 3);
  MpcSet s = enumerate_mpcs(g, 0);
  CHECK_FALSE(s.capped);
  CHECK(s.covers.size() >= 2);
  std::set<std::vector<std::vector<VertexId>>> seen;
  for (const auto& cover : s.covers) {
    CHECK(cover.size() == 2);
    auto key = cover.paths;
    std::sort(key.begin(), key.end());
    CHECK(seen.insert(key).second);  // pairwise distinct
  }
}

TEST_CASE("every enumerated cover is a valid minimum chain cover") {
  std::mt19937_64 rng(35);
  for (int iter = 0; iter < 30; ++iter) {
    Graph g = oracle::random_dag(rng, 9, 0.3);
    std::size_t min_size = g.vertex_count() - hopcroft_karp(to_bipartite(g)).size();
    MpcSet s = enumerate_mpcs(g, 0, iter);
    for (const auto& cover : s.covers) {
      CHECK(cover.size() == min_size);
      check_path_cover(g, cover);
    }
  }
}

TEST_CASE("every brute-force minimum cover has a matching in the enumeration") {
  std::mt19937_64 rng(36);
  std::uniform_int_distribution<VertexId> size(1, 10);
  for (int iter = 0; iter < 40; ++iter) {
    Graph g = oracle::random_dag(rng, size(rng), 0.3);
    BipartiteGraph b = to_bipartite(g);
    MatchingSet all = enumerate_max_matchings(b, 0, iter);
    REQUIRE_FALSE(all.capped);
    std::set<Matching> members(all.matchings.begin(), all.matchings.end());
    for (const auto& cover : brute_force_mpc(g).all_covers)
      CHECK(members.count(mpc_to_matching(cover, g)) == 1);
  }
}

TEST_CASE("cover enumeration respects its cap with prefix stability") {
  Graph g = oracle::fork_merge_cfg();
  MpcSet all = enumerate_mpcs(g, 0, 3);
  CHECK_FALSE(all.capped);
  CHECK(all.covers.size() >= 2);
  for (std::size_t cap = 1; cap <= all.covers.size(); ++cap) {
    MpcSet part = enumerate_mpcs(g, cap, 3);
    REQUIRE(part.covers.size() == std::min(cap, all.covers.size()));
    for (std::size_t i = 0; i < part.covers.size(); ++i)
      CHECK(part.covers[i] == all.covers[i]);
    CHECK(part.capped == (cap < all.covers.size()));
  }
}

TEST_CASE("cover enumeration rejects cyclic graphs") {
  Graph g(2);
  g.add_edge(0, 1);
  g.add_edge(1, 0);
  CHECK_THROWS_AS(enumerate_mpcs(g, 0), ValidationError);
}

TEST_CASE("cover set JSON lists covers with sizes and the capped flag") {
  Graph g(4);
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(1, 3);
  g.add_edge(2, 3);
  std::string text = mpc_set_to_json(enumerate_mpcs(g, 2));
  CHECK(text.find("\"covers\"") != std::string::npos);
  CHECK(text.find("\"capped\"") != std::string::npos);
  CHECK(text.find("\"size\": 2") != std::string::npos);
}

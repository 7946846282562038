#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcsym/bipartite.hpp"
#include "pcsym/path_cover.hpp"

namespace pcsym {

struct MatchingSet {
  std::vector<Matching> matchings;
  bool capped = false;
};

struct MpcSet {
  std::vector<PathCover> covers;
  bool capped = false;
};

/// Core enumeration: every maximum matching of `b`, each exactly once, in a
/// deterministic order (seeded through the initial matching). Exchange-based:
/// starting from one maximum matching, alternating cycles and length-2
/// alternating paths generate neighbors; recursion splits on one exchanged
/// edge (forced in / deleted). Visitor returns false to stop early; the
/// function returns true when enumeration ran to completion.
bool for_each_max_matching(const BipartiteGraph& b, std::uint64_t seed,
                           const std::function<bool(const Matching&)>& visit);

/// cap = 0 disables the cap. capped is true only when matchings beyond the
/// cap were actually pending.
MatchingSet enumerate_max_matchings(const BipartiteGraph& b, std::size_t cap,
                                    std::uint64_t seed = 0);

/// Enumerates maximum matchings of to_bipartite(g), converts each through
/// matching_to_chains, and deduplicates covers by their path lists. cap
/// bounds the number of distinct covers (0 = disabled). Output order is
/// stable for a given seed, and a smaller cap yields a prefix of a larger
/// cap's output.
MpcSet enumerate_mpcs(const Graph& g, std::size_t cap, std::uint64_t seed = 0);

std::string mpc_set_to_json(const MpcSet& s);

}  // namespace pcsym

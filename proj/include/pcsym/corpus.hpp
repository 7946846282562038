#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcsym/mini_ir.hpp"

namespace pcsym {

/// Deterministic mini-IR program generator. Every generated program parses,
/// lowers to a valid interprocedural CFG, and has at least one feasible
/// complete path; loops always terminate (counters climb to a fixed bound)
/// and recursion bottoms out well inside the default depth budget.
enum class Shape : std::uint8_t {
  kFig1,         // the fixed fork-merge-fork example program
  kChain,        // straight line of assignments (optional diamonds)
  kDiamonds,     // a run of branch/join diamonds in sequence
  kLoop,         // one bounded counting loop
  kLoopDiamond,  // a bounded loop whose body forks and rejoins
  kCalls,        // helper functions, including one called from two sites
  kMixed,        // random composition of the above pieces
};

std::string to_string(Shape s);
Shape shape_from_string(const std::string& text);  // throws ValidationError

/// One program of the given shape. `branches` controls how many conditional
/// forks the body gets where the shape supports it (-1 picks a sensible
/// random count; chain with branches=0 is a pure straight line). The same
/// (shape, seed, branches) triple always yields the same text.
std::string generate_program_text(Shape shape, std::uint64_t seed, int branches = -1);

/// `count` programs of one shape, seeds derived as seed + index.
std::vector<std::string> generate_corpus(std::uint64_t seed, std::size_t count,
                                         Shape shape, int branches = -1);

/// The fixed 20-program corpus used by the strategy property suite: heavy on
/// fork-merge structure, and every conditional tests an input against a
/// threshold strictly inside its domain, so every block of every program is
/// reachable by some input (full feasibility by construction).
std::vector<std::string> strategy_corpus(std::uint64_t seed);

/// The fork-merge-fork example program: nine blocks, three branches, six
/// complete paths, minimum path cover of size three.
std::string fig1_program();

}  // namespace pcsym

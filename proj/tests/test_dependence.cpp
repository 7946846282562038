#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>

#include "pcsym/corpus.hpp"
#include "pcsym/dependence.hpp"
#include "pcsym/mini_ir.hpp"
#include "support/oracles.hpp"

using namespace pcsym;

namespace {

BlockRef ref(std::uint32_t fn, VertexId block) { return {fn, block}; }

using DepSets = std::map<BlockRef, std::set<BlockRef>>;

}  // namespace

TEST_CASE("condition_variables: sorted, deduplicated, branches only") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  z := a + 1;\n"
      "  br z + a < z + 2 ? bb1 : bb2;\n"
      "bb1:\n"
      "  return 0;\n"
      "bb2:\n"
      "  return 1;\n"
      "}\n");
  const Function& f = p.functions[0];
  CHECK(condition_variables(f.blocks[0].term) == std::vector<std::string>{"a", "z"});
  CHECK(condition_variables(f.blocks[1].term).empty());  // return
}

TEST_CASE("data dependence: single definition reaches its branch") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  x := 1;\n"
      "  goto bb1;\n"
      "bb1:\n"
      "  br x < 2 ? bb2 : bb3;\n"
      "bb2:\n"
      "  return 0;\n"
      "bb3:\n"
      "  return 1;\n"
      "}\n");
  CHECK(data_dependence(p) == DepSets{{ref(0, 1), {ref(0, 0)}}});
  CHECK(potential_dependence(p).empty());
}

TEST_CASE("data dependence: a later definition on the path kills the earlier one") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  x := 1;\n"
      "  goto bb1;\n"
      "bb1:\n"
      "  x := 2;\n"
      "  br x < 2 ? bb2 : bb3;\n"
      "bb2:\n"
      "  return 0;\n"
      "bb3:\n"
      "  return 1;\n"
      "}\n");
  CHECK(data_dependence(p) == DepSets{{ref(0, 1), {ref(0, 1)}}});
}

TEST_CASE("diamond with one redefining arm: both defs reach, fork is a potential dep") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  x := 0;\n"
      "  br a < 2 ? bb1 : bb2;\n"
      "bb1:\n"
      "  x := 1;\n"
      "  goto bb3;\n"
      "bb2:\n"
      "  nop;\n"
      "  goto bb3;\n"
      "bb3:\n"
      "  br x < 1 ? bb4 : bb5;\n"
      "bb4:\n"
      "  return 0;\n"
      "bb5:\n"
      "  return 1;\n"
      "}\n");
  const DepSets data = data_dependence(p);
  CHECK(data == DepSets{{ref(0, 3), {ref(0, 0), ref(0, 1)}}});
  const DepSets pot = potential_dependence(p);
  CHECK(pot == DepSets{{ref(0, 3), {ref(0, 0)}}});
}

TEST_CASE("diamond where both arms redefine: no definition-free path, no potential dep") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  br a < 2 ? bb1 : bb2;\n"
      "bb1:\n"
      "  x := 1;\n"
      "  goto bb3;\n"
      "bb2:\n"
      "  x := 2;\n"
      "  goto bb3;\n"
      "bb3:\n"
      "  br x < 2 ? bb4 : bb5;\n"
      "bb4:\n"
      "  return 0;\n"
      "bb5:\n"
      "  return 1;\n"
      "}\n");
  CHECK(data_dependence(p) == DepSets{{ref(0, 3), {ref(0, 1), ref(0, 2)}}});
  CHECK(potential_dependence(p).empty());
}

TEST_CASE("branch on a fresh definition in its own block depends only on itself") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  br a < 2 ? bb1 : bb2;\n"
      "bb1:\n"
      "  x := 1;\n"
      "  goto bb3;\n"
      "bb2:\n"
      "  x := 2;\n"
      "  goto bb3;\n"
      "bb3:\n"
      "  x := 5;\n"
      "  br x < 6 ? bb4 : bb5;\n"
      "bb4:\n"
      "  return 0;\n"
      "bb5:\n"
      "  return 1;\n"
      "}\n");
  CHECK(data_dependence(p) == DepSets{{ref(0, 3), {ref(0, 3)}}});
  CHECK(potential_dependence(p).empty());
}

TEST_CASE("straight-line program: both maps empty") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  x := a + 1;\n"
      "  y := x + 2;\n"
      "  return y;\n"
      "}\n");
  CHECK(data_dependence(p).empty());
  CHECK(potential_dependence(p).empty());
}

TEST_CASE("branches on entry-function inputs have no defining block") {
  // Every branch in the fork/merge example tests an input directly; inputs
  // are bound externally, so nothing defines them.
  CHECK(data_dependence(parse_program(fig1_program())).empty());
}

static const char* kCallProgram =
    "input a in [0, 3];\n"
    "fn main(a) {\n"
    "bb0:\n"
    "  y := a + 1;\n"
    "  goto bb1;\n"
    "bb1:\n"
    "  x := call h(y);\n"
    "  goto bb2;\n"
    "bb2:\n"
    "  br x < 1 ? bb3 : bb4;\n"
    "bb3:\n"
    "  return 0;\n"
    "bb4:\n"
    "  return 1;\n"
    "}\n"
    "fn h(q) {\n"
    "bb0:\n"
    "  br q < 1 ? bb1 : bb2;\n"
    "bb1:\n"
    "  return 0;\n"
    "bb2:\n"
    "  return 1;\n"
    "}\n";

TEST_CASE("call results stand for the call block plus the callee's return blocks") {
  MiniProgram p = parse_program(kCallProgram);
  const DepSets data = data_dependence(p);
  // main's branch on x: the call block and h's two return blocks.
  CHECK(data.at(ref(0, 2)) == std::set<BlockRef>{ref(0, 1), ref(1, 1), ref(1, 2)});
  // h's branch on its parameter: the one call site, one level up.
  CHECK(data.at(ref(1, 0)) == std::set<BlockRef>{ref(0, 1)});
  CHECK(data.size() == 2);
  CHECK(potential_dependence(p).empty());
}

TEST_CASE("call inside one diamond arm: fork is a potential dep of the later branch") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  x := 0;\n"
      "  br a < 2 ? bb1 : bb2;\n"
      "bb1:\n"
      "  x := call h(a);\n"
      "  goto bb3;\n"
      "bb2:\n"
      "  nop;\n"
      "  goto bb3;\n"
      "bb3:\n"
      "  br x < 1 ? bb4 : bb5;\n"
      "bb4:\n"
      "  return 0;\n"
      "bb5:\n"
      "  return 1;\n"
      "}\n"
      "fn h(q) {\n"
      "bb0:\n"
      "  return q + 1;\n"
      "}\n");
  const DepSets data = data_dependence(p);
  CHECK(data.at(ref(0, 3)) == std::set<BlockRef>{ref(0, 0), ref(0, 1), ref(1, 0)});
  CHECK(potential_dependence(p) == DepSets{{ref(0, 3), {ref(0, 0)}}});
}

TEST_CASE("loop-carried definitions do not cross the removed back edge") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  i := 0;\n"
      "  goto bb1;\n"
      "bb1:\n"
      "  br i < 2 ? bb2 : bb3;\n"
      "bb2:\n"
      "  i := i + 1;\n"
      "  goto bb1;\n"
      "bb3:\n"
      "  return i;\n"
      "}\n");
  // bb2's i := i + 1 reaches the header only via the back edge, which the
  // acyclic path view removes, so the initialization alone remains.
  CHECK(data_dependence(p) == DepSets{{ref(0, 1), {ref(0, 0)}}});
  CHECK(potential_dependence(p).empty());
}

TEST_CASE("potential dep: definition strictly between the two branches") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "input b in [0, 3];\n"
      "fn main(a, b) {\n"
      "bb0:\n"
      "  x := 0;\n"
      "  br a < 2 ? bb1 : bb4;\n"
      "bb1:\n"
      "  br b < 2 ? bb2 : bb3;\n"
      "bb2:\n"
      "  x := 7;\n"
      "  goto bb3;\n"
      "bb3:\n"
      "  goto bb5;\n"
      "bb4:\n"
      "  goto bb5;\n"
      "bb5:\n"
      "  br x < 1 ? bb6 : bb7;\n"
      "bb6:\n"
      "  return 0;\n"
      "bb7:\n"
      "  return 1;\n"
      "}\n");
  const DepSets pot = potential_dependence(p);
  // Both forks can steer execution through or around bb2's definition.
  CHECK(pot == DepSets{{ref(0, 5), {ref(0, 0), ref(0, 1)}}});
  const DepSets data = data_dependence(p);
  CHECK(data.at(ref(0, 5)) == std::set<BlockRef>{ref(0, 0), ref(0, 2)});
}

TEST_CASE("unreachable blocks take no part in the analysis") {
  MiniProgram p = parse_program(
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  x := 1;\n"
      "  goto bb2;\n"
      "bb1:\n"
      "  x := 9;\n"
      "  br x < 5 ? bb2 : bb3;\n"
      "bb2:\n"
      "  br x < 2 ? bb3 : bb4;\n"
      "bb3:\n"
      "  return 0;\n"
      "bb4:\n"
      "  return 1;\n"
      "}\n");
  const DepSets data = data_dependence(p);
  CHECK(data == DepSets{{ref(0, 2), {ref(0, 0)}}});  // bb1's def and branch ignored
  CHECK(potential_dependence(p).empty());
}

TEST_CASE("analyze_dependence bundles both maps and serializes deterministically") {
  MiniProgram p = parse_program(kCallProgram);
  const DependenceMap deps = analyze_dependence(p);
  CHECK(deps.data_dep == data_dependence(p));
  CHECK(deps.potential_dep == potential_dependence(p));
  const std::string json = dependence_to_json(deps);
  CHECK(json == dependence_to_json(analyze_dependence(p)));
  CHECK(json.find("\"data_dep\"") != std::string::npos);
  CHECK(json.find("\"potential_dep\"") != std::string::npos);
  CHECK(json.find("\"branch\"") != std::string::npos);
  CHECK(json.find("\"targets\"") != std::string::npos);
}

namespace {

// Structural invariants every analysis result must satisfy, checked against
// the program text alone.
void check_invariants(const MiniProgram& p) {
  const DependenceMap deps = analyze_dependence(p);
  const LoweredProgram low = build_icfg(p);

  auto is_branch = [&](const BlockRef& r) {
    return r.first < p.functions.size() && r.second < p.functions[r.first].blocks.size() &&
           p.functions[r.first].blocks[r.second].term.kind == Terminator::Kind::kBranch;
  };
  auto is_reachable = [&](const BlockRef& r) {
    return low.block_vertex[r.first][r.second] != kNoVertex;
  };

  for (const auto& [branch, targets] : deps.data_dep) {
    REQUIRE(is_branch(branch));
    REQUIRE(is_reachable(branch));
    CHECK(!targets.empty());
    const Function& f = p.functions[branch.first];
    const std::vector<std::string> vars = condition_variables(f.blocks[branch.second].term);
    for (const BlockRef& t : targets) {
      REQUIRE(is_reachable(t));
      const BasicBlock& tb = p.functions[t.first].blocks[t.second];
      // The target defines a condition variable, returns a value bound to
      // one through some call, or calls the branch's function, binding a
      // parameter. Anything else is a reporting bug.
      bool justified = false;
      for (const Statement& s : tb.statements) {
        if (s.kind == Statement::Kind::kNop) continue;
        for (const std::string& v : vars) justified = justified || s.dest == v;
        if (s.kind == Statement::Kind::kCall &&
            p.function_index(s.callee) == branch.first) {
          for (const std::string& v : vars)
            for (const std::string& q : f.params) justified = justified || v == q;
        }
      }
      if (tb.term.kind == Terminator::Kind::kReturn && t.first != branch.first)
        justified = true;  // return block of a callee, bound one level up
      CHECK(justified);
    }
  }
  for (const auto& [branch, targets] : deps.potential_dep) {
    REQUIRE(is_branch(branch));
    REQUIRE(is_reachable(branch));
    CHECK(!targets.empty());
    for (const BlockRef& t : targets) {
      CHECK(t.first == branch.first);  // same function
      CHECK(t != branch);              // never itself
      REQUIRE(is_branch(t));
      REQUIRE(is_reachable(t));
    }
  }
}

}  // namespace

TEST_CASE("invariants hold across generated shapes") {
  for (Shape shape : {Shape::kFig1, Shape::kChain, Shape::kDiamonds, Shape::kLoop,
                      Shape::kLoopDiamond, Shape::kCalls, Shape::kMixed}) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const std::string text = generate_program_text(shape, seed);
      CAPTURE(text);
      check_invariants(parse_program(text));
    }
  }
}

TEST_CASE("dataflow matches exhaustive path enumeration on generated programs") {
  std::size_t checked = 0;
  auto check_against_oracle = [&](const std::string& text) {
    CAPTURE(text);
    MiniProgram p = parse_program(text);
    std::size_t blocks = 0;
    for (const Function& f : p.functions) blocks += f.blocks.size();
    REQUIRE(blocks <= 30);
    CHECK(data_dependence(p) == testing::brute_force_data_dependence(p));
    CHECK(potential_dependence(p) == testing::brute_force_potential_dependence(p));
    ++checked;
  };

  for (const std::string& text : generate_corpus(41, 50, Shape::kMixed))
    check_against_oracle(text);
  for (Shape shape : {Shape::kDiamonds, Shape::kLoop, Shape::kLoopDiamond, Shape::kCalls})
    for (std::uint64_t seed = 7; seed <= 12; ++seed)
      check_against_oracle(generate_program_text(shape, seed));
  for (const std::string& text : strategy_corpus(99)) check_against_oracle(text);
  CHECK(checked >= 50 + 4 * 6 + 20);
}

TEST_CASE("analysis is deterministic") {
  for (std::uint64_t seed : {3u, 17u}) {
    MiniProgram p = parse_program(generate_program_text(Shape::kMixed, seed));
    CHECK(analyze_dependence(p).data_dep == analyze_dependence(p).data_dep);
    CHECK(dependence_to_json(analyze_dependence(p)) ==
          dependence_to_json(analyze_dependence(p)));
  }
}

#include <doctest.h>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pcsym/corpus.hpp"
#include "pcsym/mini_ir.hpp"

using namespace pcsym;

namespace {

using BlockRef = std::pair<std::uint32_t, VertexId>;

PathPrefix prefix_of(std::vector<BlockRef> blocks, std::vector<bool> decisions = {}) {
  PathPrefix p;
  p.blocks = std::move(blocks);
  p.decisions = std::move(decisions);
  return p;
}

EdgeSet edge_set(const Graph& g) {
  const auto es = g.edges();
  return EdgeSet(es.begin(), es.end());
}

std::map<std::string, long long> lows(const MiniProgram& p) {
  std::map<std::string, long long> m;
  for (const InputDecl& d : p.inputs) m[d.name] = d.lo;
  return m;
}

const char* kCallInMiddle =
    "input a in [0, 3];\n"
    "\n"
    "fn main(a) {\n"
    "bb0:\n"
    "  x := call h(a);\n"
    "  y := x + 1;\n"
    "  return y;\n"
    "}\n"
    "\n"
    "fn h(p) {\n"
    "bb0:\n"
    "  return p + 1;\n"
    "}\n";

const char* kSpinCallee =
    "input a in [0, 1];\n"
    "\n"
    "fn main(a) {\n"
    "bb0:\n"
    "  x := call spin(a);\n"
    "  return x;\n"
    "}\n"
    "\n"
    "fn spin(p) {\n"
    "bb0:\n"
    "  goto bb1;\n"
    "bb1:\n"
    "  goto bb0;\n"
    "}\n";

const char* kCountdown =
    "input a in [0, 5];\n"
    "\n"
    "fn main(a) {\n"
    "bb0:\n"
    "  r := call rec(a);\n"
    "  return r;\n"
    "}\n"
    "\n"
    "fn rec(k) {\n"
    "bb0:\n"
    "  br k < 1 ? bb1 : bb2;\n"
    "bb1:\n"
    "  return 0;\n"
    "bb2:\n"
    "  r := call rec(k - 1);\n"
    "  return r + 1;\n"
    "}\n";

}  // namespace

TEST_CASE("the fork-merge-fork example parses to its nine-block shape") {
  const MiniProgram p = parse_program(fig1_program());
  REQUIRE(p.functions.size() == 1);
  REQUIRE(p.inputs.size() == 3);
  CHECK(p.entry_function == 0);
  const Function& f = p.functions[0];
  CHECK(f.params == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(f.blocks.size() == 9);
  int branches = 0;
  for (const BasicBlock& b : f.blocks) {
    if (b.term.kind == Terminator::Kind::kBranch) ++branches;
  }
  CHECK(branches == 3);
  CHECK(f.blocks[0].label == "bb0");
  CHECK(f.blocks[8].term.kind == Terminator::Kind::kReturn);
}

TEST_CASE("the example program is already in canonical form") {
  const MiniProgram p = parse_program(fig1_program());
  CHECK(print_program(p) == fig1_program());
}

TEST_CASE("an empty function body becomes a single return block") {
  const MiniProgram p = parse_program("fn main() {\n}\n");
  REQUIRE(p.functions.size() == 1);
  REQUIRE(p.functions[0].blocks.size() == 1);
  const BasicBlock& b = p.functions[0].blocks[0];
  CHECK(b.label == "bb0");
  CHECK(b.statements.empty());
  CHECK(b.term.kind == Terminator::Kind::kReturn);
  CHECK(print_program(p) == "fn main() {\nbb0:\n  return 0;\n}\n");
}

TEST_CASE("parse then print is a fixed point across the generator's range") {
  const Shape shapes[] = {Shape::kFig1, Shape::kChain,  Shape::kDiamonds, Shape::kLoop,
                          Shape::kLoopDiamond, Shape::kCalls, Shape::kMixed};
  int checked = 0;
  for (const Shape s : shapes) {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      const std::string text = generate_program_text(s, seed);
      const MiniProgram p1 = parse_program(text);
      const std::string canon = print_program(p1);
      const MiniProgram p2 = parse_program(canon);
      CHECK(print_program(p2) == canon);
      ++checked;
    }
  }
  CHECK(checked == 105);
}

TEST_CASE("parse errors carry one-based source positions") {
  const auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_program(text);
      const std::string missing = "expected a parse error containing '" + needle + "'";
      FAIL_CHECK(missing);
    } catch (const ParseError& e) {
      const std::string what = e.what();
      CHECK(what.find(needle) != std::string::npos);
      CHECK(e.line >= 1);
      CHECK(e.col >= 1);
    }
  };
  expect_error("fn main() {\nbb0:\n  goto bb0;\n}\n", "targets its own block");
  expect_error("fn main() {\nbb0:\n  br 1 < 2 ? bb1 : bb1;\nbb1:\n  return 0;\n}\n",
               "distinct blocks");
  expect_error("fn f() {\nbb0:\n  return 0;\n}\n", "define 'main'");
  expect_error("input a in [0, 3];\nfn main() {\nbb0:\n  return 0;\n}\n",
               "not a parameter of main");
  expect_error("fn main(a) {\nbb0:\n  return 0;\n}\n", "no input declaration");
  expect_error("input a in [3, 0];\nfn main(a) {\nbb0:\n  return 0;\n}\n",
               "empty input domain");
  expect_error("input a in [0, 3];\nfn main(a) {\nbb0:\n  a := 1;\n  return a;\n}\n",
               "read-only");
  expect_error("fn main() {\nbb0:\n  return x;\n}\n", "used before definition");
  expect_error("fn main() {\nbb0:\n  x := call f(1);\n  return x;\n}\n", "unknown function");
  expect_error(
      "fn main() {\nbb0:\n  x := call f(1, 2);\n  return x;\n}\n"
      "fn f(p) {\nbb0:\n  return p;\n}\n",
      "takes 1 arguments, got 2");
  expect_error("fn main() {\nbb0:\n  goto bb9;\n}\n", "no block labeled 'bb9'");
  expect_error("fn main() {\nbb0:\n  x := 1 @ 2;\n  return x;\n}\n", "unexpected character");
}

TEST_CASE("a definition on only one branch arm does not reach past the join") {
  const char* text =
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  br a < 2 ? bb1 : bb2;\n"
      "bb1:\n"
      "  x := 1;\n"
      "  goto bb3;\n"
      "bb2:\n"
      "  goto bb3;\n"
      "bb3:\n"
      "  return x;\n"
      "}\n";
  CHECK_THROWS_AS(parse_program(text), ParseError);
}

TEST_CASE("the example program lowers to one vertex per block plus an entry") {
  const MiniProgram p = parse_program(fig1_program());
  const LoweredProgram lp = build_icfg(p);
  const ICfg& icfg = lp.icfg;

  REQUIRE(icfg.vertex_count() == 10);
  CHECK(icfg.kinds[0] == NodeKind::kEntry);
  CHECK(icfg.graph.label(0) == std::string("main.$entry"));
  CHECK(icfg.graph.label(1) == std::string("main.bb0"));
  CHECK(icfg.graph.label(9) == std::string("main.bb8"));
  CHECK(icfg.kinds[1] == NodeKind::kBranch);
  CHECK(icfg.kinds[2] == NodeKind::kBranch);
  CHECK(icfg.kinds[3] == NodeKind::kPlain);
  CHECK(icfg.kinds[6] == NodeKind::kBranch);
  CHECK(icfg.kinds[9] == NodeKind::kExit);

  CHECK(edge_set(icfg.graph) ==
        EdgeSet{{0, 1}, {1, 2}, {1, 3}, {2, 4}, {2, 5}, {3, 6}, {4, 6}, {5, 6},
                {6, 7}, {6, 8}, {7, 9}, {8, 9}});
  CHECK(icfg.call_edges.empty());
  CHECK(icfg.return_edges.empty());
  CHECK(icfg.back_edges.empty());

  REQUIRE(lp.block_vertex.size() == 1);
  for (std::size_t b = 0; b < 9; ++b) {
    CHECK(lp.block_vertex[0][b] == static_cast<VertexId>(b + 1));
    CHECK(lp.origin[b + 1].block == static_cast<VertexId>(b));
    CHECK(lp.origin[b + 1].segment == 0);
  }
  CHECK(lp.origin[0].block == kNoVertex);
}

TEST_CASE("a call in the middle of a block splits it into segments") {
  const MiniProgram p = parse_program(kCallInMiddle);
  const LoweredProgram lp = build_icfg(p);
  const ICfg& icfg = lp.icfg;

  REQUIRE(icfg.vertex_count() == 6);
  CHECK(icfg.kinds == std::vector<NodeKind>{NodeKind::kEntry, NodeKind::kCall,
                                            NodeKind::kReturnSite, NodeKind::kExit,
                                            NodeKind::kEntry, NodeKind::kExit});
  CHECK(icfg.graph.label(1) == std::string("main.bb0"));
  CHECK(icfg.graph.label(2) == std::string("main.bb0.1"));
  CHECK(icfg.graph.label(3) == std::string("main.bb0.2"));
  CHECK(icfg.graph.label(4) == std::string("h.$entry"));

  CHECK(edge_set(icfg.graph) == EdgeSet{{0, 1}, {1, 4}, {4, 5}, {5, 2}, {2, 3}});
  CHECK(icfg.call_edges == EdgeSet{{1, 4}});
  CHECK(icfg.return_edges == EdgeSet{{5, 2}});

  CHECK(lp.origin[2].function == 0);
  CHECK(lp.origin[2].block == 0);
  CHECK(lp.origin[2].segment == 1);
  CHECK(lp.origin[3].segment == 2);
  CHECK(lp.block_vertex[0][0] == 1);
  CHECK(lp.block_vertex[1][0] == 5);
}

TEST_CASE("two call sites of one callee pair up in ascending order") {
  const char* text =
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  x := call h(a);\n"
      "  goto bb1;\n"
      "bb1:\n"
      "  y := call h(x);\n"
      "  return y;\n"
      "}\n"
      "fn h(p) {\n"
      "bb0:\n"
      "  return p;\n"
      "}\n";
  const MiniProgram p = parse_program(text);
  const LoweredProgram lp = build_icfg(p);
  const ICfg& icfg = lp.icfg;

  // main: entry, bb0 call, bb0.1 site, bb1 call, bb1.1 site, bb1.2 exit;
  // h: entry, exit.
  REQUIRE(icfg.vertex_count() == 8);
  CHECK(icfg.call_edges == EdgeSet{{1, 6}, {3, 6}});
  CHECK(icfg.return_edges == EdgeSet{{7, 2}, {7, 4}});
  const auto sites = call_sites_of(icfg, icfg.function_of[6]);
  REQUIRE(sites.size() == 2);
  CHECK(sites[0] == Edge{1, 2});
  CHECK(sites[1] == Edge{3, 4});
}

TEST_CASE("blocks unreachable from the function entry get no vertices") {
  const char* text =
      "input a in [0, 3];\n"
      "fn main(a) {\n"
      "bb0:\n"
      "  return a;\n"
      "bb1:\n"
      "  return 0;\n"
      "}\n";
  const MiniProgram p = parse_program(text);
  const LoweredProgram lp = build_icfg(p);
  CHECK(lp.icfg.vertex_count() == 2);
  CHECK(lp.block_vertex[0][0] == 1);
  CHECK(lp.block_vertex[0][1] == kNoVertex);
}

TEST_CASE("calls to a function that never returns are left unwired") {
  const MiniProgram p = parse_program(kSpinCallee);
  const LoweredProgram lp = build_icfg(p);
  const ICfg& icfg = lp.icfg;

  // main: entry, bb0 (kept whole, becomes the exit); spin: entry, bb0, bb1.
  REQUIRE(icfg.vertex_count() == 5);
  CHECK(icfg.kinds[1] == NodeKind::kExit);
  CHECK(icfg.call_edges.empty());
  CHECK(icfg.return_edges.empty());
  CHECK(edge_set(icfg.graph) == EdgeSet{{0, 1}, {2, 3}, {3, 4}, {4, 3}});
  CHECK(icfg.back_edges == EdgeSet{{4, 3}});
}

TEST_CASE("loop back edges are annotated on the lowered graph") {
  const char* text =
      "fn main() {\n"
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
      "}\n";
  const LoweredProgram lp = build_icfg(parse_program(text));
  // entry=0, bb0=1, bb1=2, bb2=3, bb3=4
  CHECK(lp.icfg.back_edges == EdgeSet{{3, 2}});
  CHECK(lp.icfg.kinds[2] == NodeKind::kBranch);
}

TEST_CASE("concrete runs of the example program follow the decided arms") {
  const MiniProgram p = parse_program(fig1_program());

  ConcreteResult r = run_concrete(p, {{"a", 0}, {"b", 0}, {"c", 0}});
  CHECK(r.trace.blocks ==
        std::vector<BlockRef>{{0, 0}, {0, 1}, {0, 3}, {0, 5}, {0, 6}, {0, 8}});
  CHECK(r.trace.decisions == std::vector<bool>{true, true, true});
  CHECK(r.steps == 6);
  CHECK_FALSE(r.truncated);
  CHECK(r.return_value == 4);  // x=3, y=x+1

  r = run_concrete(p, {{"a", 5}, {"b", 0}, {"c", 9}});
  CHECK(r.trace.blocks == std::vector<BlockRef>{{0, 0}, {0, 2}, {0, 5}, {0, 7}, {0, 8}});
  CHECK(r.trace.decisions == std::vector<bool>{false, false});
  CHECK(r.return_value == 4);  // x=2, y=x+2
}

TEST_CASE("a returning call resumes its block without re-entering it") {
  const MiniProgram p = parse_program(kCallInMiddle);
  const ConcreteResult r = run_concrete(p, {{"a", 1}});
  CHECK(r.trace.blocks == std::vector<BlockRef>{{0, 0}, {1, 0}});
  CHECK(r.steps == 2);
  CHECK(r.return_value == 3);  // h(1)=2, y=3
}

TEST_CASE("loop iterations re-enter the header on every pass") {
  const char* text =
      "fn main() {\n"
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
      "}\n";
  const ConcreteResult r = run_concrete(parse_program(text), {});
  CHECK(r.trace.blocks == std::vector<BlockRef>{{0, 0}, {0, 1}, {0, 2}, {0, 1},
                                                {0, 2}, {0, 1}, {0, 3}});
  CHECK(r.trace.decisions == std::vector<bool>{true, true, false});
  CHECK(r.return_value == 2);
}

TEST_CASE("recursion completes inside the depth budget and truncates beyond it") {
  const MiniProgram p = parse_program(kCountdown);

  ConcreteResult r = run_concrete(p, {{"a", 3}});
  CHECK_FALSE(r.truncated);
  CHECK(r.return_value == 3);

  r = run_concrete(p, {{"a", 3}}, 100000, 3);
  CHECK(r.truncated);
  CHECK(r.stop_reason == "recursion depth");

  r = run_concrete(p, {{"a", 5}});  // depth 7 with the default budget of 8
  CHECK_FALSE(r.truncated);
  CHECK(r.return_value == 5);
}

TEST_CASE("a run that never returns stops at the step budget") {
  const MiniProgram p = parse_program(kSpinCallee);
  const ConcreteResult r = run_concrete(p, {{"a", 0}}, 50);
  CHECK(r.truncated);
  CHECK(r.stop_reason == "step budget");
  CHECK(r.steps == 50);
  CHECK(r.trace.blocks.size() == 50);
}

TEST_CASE("concrete runs validate the input assignment") {
  const MiniProgram p = parse_program(fig1_program());
  CHECK_THROWS_AS(run_concrete(p, {{"a", 0}, {"b", 0}}), ValidationError);
  CHECK_THROWS_AS(run_concrete(p, {{"a", 0}, {"b", 0}, {"c", 10}}), ValidationError);
  CHECK_THROWS_AS(run_concrete(p, {{"a", 0}, {"b", 0}, {"c", 0}, {"d", 0}}),
                  ValidationError);
}

TEST_CASE("feasibility finds witnesses exactly when some input fits the prefix") {
  const MiniProgram p = parse_program(fig1_program());

  SUBCASE("reachable prefixes come back with a replayable witness") {
    const PathPrefix pre = prefix_of({{0, 0}, {0, 1}});
    const FeasibilityResult fr = feasible(p, pre);
    REQUIRE(fr.feasible);
    REQUIRE(fr.witness.has_value());
    CHECK(run_concrete(p, *fr.witness).trace.starts_with(pre));
  }

  SUBCASE("a full path through the else arms is feasible") {
    const FeasibilityResult fr =
        feasible(p, prefix_of({{0, 0}, {0, 2}, {0, 5}, {0, 6}, {0, 8}}, {false, true}));
    CHECK(fr.feasible);
    CHECK((*fr.witness).at("a") >= 3);
    CHECK((*fr.witness).at("c") < 5);
  }

  SUBCASE("blocks that are not successors make an infeasible prefix") {
    const FeasibilityResult fr = feasible(p, prefix_of({{0, 0}, {0, 3}}));
    CHECK_FALSE(fr.feasible);
    CHECK_FALSE(fr.unknown);
  }

  SUBCASE("decisions contradicting the block sequence are infeasible") {
    const FeasibilityResult fr = feasible(p, prefix_of({{0, 0}, {0, 1}}, {false}));
    CHECK_FALSE(fr.feasible);
    CHECK_FALSE(fr.unknown);
  }

  SUBCASE("the empty prefix is trivially feasible") {
    const FeasibilityResult fr = feasible(p, {});
    CHECK(fr.feasible);
    CHECK(*fr.witness == lows(p));
  }

  SUBCASE("an input space beyond the assignment budget is unknown") {
    FeasibilityBudget b;
    b.max_assignments = 10;  // the example has 1000 assignments
    const FeasibilityResult fr = feasible(p, prefix_of({{0, 0}}), b);
    CHECK_FALSE(fr.feasible);
    CHECK(fr.unknown);
  }
}

TEST_CASE("runs cut short while still on the prefix never report infeasible") {
  const MiniProgram p = parse_program(kSpinCallee);
  FeasibilityBudget b;
  b.max_steps = 5;

  // Extend a truncated trace by one more spin block: no bounded run can
  // confirm it, and none can refute it.
  ConcreteResult short_run = run_concrete(p, {{"a", 0}}, b.max_steps);
  REQUIRE(short_run.truncated);
  PathPrefix pre = short_run.trace;
  pre.blocks.push_back({1, 0});

  const FeasibilityResult fr = feasible(p, pre, b);
  CHECK_FALSE(fr.feasible);
  CHECK(fr.unknown);

  // With enough steps the same prefix is decided feasible.
  const FeasibilityResult deep = feasible(p, pre);
  CHECK(deep.feasible);
}

TEST_CASE("every prefix of a real trace is feasible") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const MiniProgram p = parse_program(generate_program_text(Shape::kMixed, seed));
    std::map<std::string, long long> mids;
    for (const InputDecl& d : p.inputs) mids[d.name] = (d.lo + d.hi) / 2;
    const ConcreteResult r = run_concrete(p, mids);
    REQUIRE_FALSE(r.truncated);

    // The whole trace, decisions included, must be witnessed (by mids if
    // nothing smaller comes first).
    CHECK(feasible(p, r.trace).feasible);

    // Block-only cuts at several depths.
    for (std::size_t i = 0; i < r.trace.blocks.size(); i += 3) {
      PathPrefix pre;
      pre.blocks.assign(r.trace.blocks.begin(), r.trace.blocks.begin() + i + 1);
      CHECK(feasible(p, pre).feasible);
      ++checked;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("generated corpus programs parse, lower, and start feasibly") {
  const auto corpus = generate_corpus(7, 50, Shape::kMixed);
  REQUIRE(corpus.size() == 50);
  for (const std::string& text : corpus) {
    const MiniProgram p = parse_program(text);
    const LoweredProgram lp = build_icfg(p);

    // Vertex bookkeeping stays mutually consistent.
    for (VertexId v = 0; v < lp.icfg.vertex_count(); ++v) {
      CHECK(lp.origin[v].function == lp.icfg.function_of[v]);
    }
    for (std::size_t fi = 0; fi < p.functions.size(); ++fi) {
      CHECK(lp.fn_from_icfg[lp.fn_to_icfg[fi]] == fi);
      for (std::size_t b = 0; b < p.functions[fi].blocks.size(); ++b) {
        const VertexId v = lp.block_vertex[fi][b];
        if (v == kNoVertex) continue;
        CHECK(lp.origin[v].function == lp.fn_to_icfg[fi]);
        CHECK(lp.origin[v].block == static_cast<VertexId>(b));
        CHECK(lp.origin[v].segment == 0);
      }
    }

    // Program text stays within the generator's contract.
    std::size_t blocks = 0;
    for (const Function& f : p.functions) blocks += f.blocks.size();
    CHECK(blocks <= 30);

    // The all-lows run completes, and its trace only visits lowered blocks.
    const ConcreteResult r = run_concrete(p, lows(p));
    CHECK_FALSE(r.truncated);
    for (const auto& [fn, block] : r.trace.blocks) {
      CHECK(lp.block_vertex[fn][block] != kNoVertex);
    }

    // Entering the program is feasible, witnessed by a real assignment.
    const FeasibilityResult fr =
        feasible(p, prefix_of({{static_cast<std::uint32_t>(p.entry_function), 0}}));
    CHECK(fr.feasible);
  }
}

TEST_CASE("the strategy corpus is twenty programs led by the example") {
  const auto corpus = strategy_corpus(123);
  REQUIRE(corpus.size() == 20);
  CHECK(corpus[0] == fig1_program());
  for (const std::string& text : corpus) {
    const MiniProgram p = parse_program(text);
    build_icfg(p);
    const ConcreteResult r = run_concrete(p, lows(p));
    CHECK_FALSE(r.truncated);
  }
  CHECK(strategy_corpus(123) == corpus);  // seed-pinned
}

TEST_CASE("run and feasibility are deterministic") {
  const MiniProgram p = parse_program(generate_program_text(Shape::kCalls, 42));
  std::map<std::string, long long> in = lows(p);
  const ConcreteResult a = run_concrete(p, in);
  const ConcreteResult b = run_concrete(p, in);
  CHECK(a.trace.blocks == b.trace.blocks);
  CHECK(a.trace.decisions == b.trace.decisions);
  CHECK(a.return_value == b.return_value);

  const PathPrefix pre = prefix_of({a.trace.blocks.front()});
  const FeasibilityResult f1 = feasible(p, pre);
  const FeasibilityResult f2 = feasible(p, pre);
  REQUIRE(f1.feasible);
  CHECK(*f1.witness == *f2.witness);
}

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pcsym/icfg.hpp"

namespace pcsym {

/// A tiny integer-only imperative IR: affine expressions, comparison
/// branches, direct calls. Programs are parsed from a line-oriented text
/// format (grammar in the README), validated structurally, lowered to an
/// interprocedural CFG, and executed concretely. Path feasibility is decided
/// exactly by bounded enumeration of the (finite) input space.

/// One summand of an affine expression: coeff * var, or a bare constant when
/// var is empty. An expression is the sum of its terms in source order.
struct AffineTerm {
  long long coeff = 0;
  std::string var;  // empty: constant term
};

struct AffineExpr {
  std::vector<AffineTerm> terms;

  long long eval(const std::map<std::string, long long>& env) const;
  static AffineExpr constant(long long c) { return {{{c, ""}}}; }
};

enum class CmpOp : std::uint8_t { kLt, kLe, kEq, kNe };

struct Condition {
  AffineExpr lhs;
  CmpOp op = CmpOp::kLt;
  AffineExpr rhs;

  bool eval(const std::map<std::string, long long>& env) const;
};

struct Statement {
  enum class Kind : std::uint8_t { kAssign, kCall, kNop };
  Kind kind = Kind::kNop;
  std::string dest;              // assign, call
  AffineExpr value;              // assign
  std::string callee;            // call
  std::vector<AffineExpr> args;  // call
  int line = 0, col = 0;
};

struct Terminator {
  enum class Kind : std::uint8_t { kBranch, kGoto, kReturn };
  Kind kind = Kind::kReturn;
  Condition cond;           // branch
  std::string then_target;  // branch; also the goto target
  std::string else_target;  // branch
  AffineExpr value;         // return
  int line = 0, col = 0;
};

struct BasicBlock {
  std::string label;
  std::vector<Statement> statements;
  Terminator term;
  int line = 0, col = 0;
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  std::vector<BasicBlock> blocks;  // blocks[0] is the entry block
  int line = 0, col = 0;

  const BasicBlock* find_block(const std::string& label) const;
  std::size_t block_index(const std::string& label) const;  // throws if absent
};

struct InputDecl {
  std::string name;
  long long lo = 0, hi = 0;  // inclusive interval
  int line = 0, col = 0;
};

struct MiniProgram {
  std::vector<InputDecl> inputs;
  std::vector<Function> functions;  // source order; the entry is named "main"
  std::size_t entry_function = 0;   // index into functions

  const Function* find_function(const std::string& name) const;
  std::size_t function_index(const std::string& name) const;  // throws if absent
};

/// Parse failure with a 1-based source position; what() reads
/// "line:col: message".
struct ParseError : std::runtime_error {
  ParseError(int line, int col, const std::string& message);
  int line = 0, col = 0;
};

/// Parses and validates a program. Validation enforces: exactly one function
/// named "main" (the entry); input declarations match main's parameters
/// one-to-one; nonempty input domains (lo <= hi); unique block labels and
/// resolvable branch/goto targets within each function; no branch or goto
/// targeting its own block; distinct branch arms; known callees with
/// matching arity; parameters never assigned; every other variable defined
/// before use along every intraprocedural path (call results count as
/// definitions). A function with an empty body gets the single block
/// `bb0: return 0;`.
MiniProgram parse_program(const std::string& text);

/// Canonical text form; parse_program(print_program(p)) reproduces p exactly
/// for any program that came out of parse_program.
std::string print_program(const MiniProgram& p);

/// Provenance of one icfg vertex: which function and basic block it came
/// from. Synthetic function-entry vertices carry block == kNoVertex.
struct VertexOrigin {
  std::uint32_t function = 0;  // icfg function id
  VertexId block = kNoVertex;  // block index within the mini-IR function
  std::uint32_t segment = 0;   // segment index within the block
};

/// A mini-IR program lowered to an interprocedural CFG.
///
/// Vertices per function: one synthetic kEntry vertex, then each reachable
/// basic block in order, split into segments: a call statement ends its
/// segment (kCall) and the rest of the block resumes at a kReturnSite
/// segment; a block whose terminator is `return` ends in a dedicated kExit
/// segment holding just the return. Blocks unreachable from the function's
/// entry block get no vertices. Calls to functions with no (reachable)
/// return block are kept as plain statements: the iCFG gives them no
/// call/return wiring because control never comes back. Back edges are
/// detected per function (natural-loop analysis) and annotated.
///
/// Function ids: main becomes id 0; other functions follow in source order.
struct LoweredProgram {
  ICfg icfg;
  std::vector<VertexOrigin> origin;          // per icfg vertex
  std::vector<std::uint32_t> fn_to_icfg;     // mini function index -> icfg id
  std::vector<std::uint32_t> fn_from_icfg;   // icfg id -> mini function index
  std::vector<std::vector<VertexId>> block_vertex;  // [mini fn][block] -> first
                                                    // segment vertex, kNoVertex
                                                    // if pruned
};
LoweredProgram build_icfg(const MiniProgram& p);

/// A straight-line record of control flow from the program entry: every
/// basic block in entry order, plus the branch decisions taken (true =
/// then-arm), in the order the branches executed. Resuming a block after a
/// call returns does not re-enter it; iterating a loop does.
struct PathPrefix {
  std::vector<std::pair<std::uint32_t, VertexId>> blocks;  // (mini fn, block)
  std::vector<bool> decisions;

  bool starts_with(const PathPrefix& prefix) const;
};

struct ConcreteResult {
  PathPrefix trace;
  std::size_t steps = 0;          // blocks entered
  bool truncated = false;         // a bound below cut the run short
  std::string stop_reason;        // "step budget" | "recursion depth" | ""
  long long return_value = 0;     // meaningful only when !truncated
};

/// Deterministic big-step execution. `inputs` must assign every declared
/// input a value inside its domain (ValidationError otherwise). One step =
/// one basic-block entry. Exceeding max_steps or nesting calls deeper than
/// max_depth truncates the run (truncated flag; the trace keeps everything
/// entered so far).
ConcreteResult run_concrete(const MiniProgram& p,
                            const std::map<std::string, long long>& inputs,
                            std::size_t max_steps = 100000, std::size_t max_depth = 8);

struct FeasibilityBudget {
  std::size_t max_assignments = 1000000;  // input-space size ceiling
  std::size_t max_steps = 100000;         // per concrete run
  std::size_t max_depth = 8;
};

struct FeasibilityResult {
  bool feasible = false;
  bool unknown = false;  // budget exceeded; never silently infeasible
  std::optional<std::map<std::string, long long>> witness;
};

/// Exact feasibility by exhaustive input enumeration: feasible iff some
/// assignment's concrete trace starts with `prefix`. When the input space
/// exceeds max_assignments, or every non-witnessing run was truncated while
/// still on the prefix, the result is unknown rather than infeasible.
FeasibilityResult feasible(const MiniProgram& p, const PathPrefix& prefix,
                           const FeasibilityBudget& budget = {});

}  // namespace pcsym

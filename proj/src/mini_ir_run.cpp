#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pcsym/mini_ir.hpp"

namespace pcsym {

bool PathPrefix::starts_with(const PathPrefix& prefix) const {
  if (prefix.blocks.size() > blocks.size() || prefix.decisions.size() > decisions.size()) {
    return false;
  }
  for (std::size_t i = 0; i < prefix.blocks.size(); ++i) {
    if (blocks[i] != prefix.blocks[i]) return false;
  }
  for (std::size_t i = 0; i < prefix.decisions.size(); ++i) {
    if (decisions[i] != prefix.decisions[i]) return false;
  }
  return true;
}

namespace {

struct Frame {
  const Function* f = nullptr;
  std::size_t fn = 0;     // mini function index
  std::size_t block = 0;  // current block index
  std::size_t stmt = 0;   // next statement; points at the call while suspended
  std::map<std::string, long long> env;
};

}  // namespace

ConcreteResult run_concrete(const MiniProgram& p,
                            const std::map<std::string, long long>& inputs,
                            std::size_t max_steps, std::size_t max_depth) {
  for (const InputDecl& d : p.inputs) {
    const auto it = inputs.find(d.name);
    if (it == inputs.end()) {
      throw ValidationError("run: missing value for input '" + d.name + "'");
    }
    if (it->second < d.lo || it->second > d.hi) {
      throw ValidationError("run: input '" + d.name + "' = " + std::to_string(it->second) +
                            " outside [" + std::to_string(d.lo) + ", " +
                            std::to_string(d.hi) + "]");
    }
  }
  for (const auto& [name, value] : inputs) {
    (void)value;
    bool declared = false;
    for (const InputDecl& d : p.inputs) declared |= d.name == name;
    if (!declared) throw ValidationError("run: unknown input '" + name + "'");
  }

  ConcreteResult r;
  std::vector<Frame> stack;
  {
    Frame main;
    main.f = &p.functions[p.entry_function];
    main.fn = p.entry_function;
    for (const std::string& param : main.f->params) main.env[param] = inputs.at(param);
    stack.push_back(std::move(main));
  }

  bool entering = true;  // fresh entry into stack.back()'s current block
  for (;;) {
    Frame& fr = stack.back();
    if (entering) {
      if (r.steps >= max_steps) {
        r.truncated = true;
        r.stop_reason = "step budget";
        return r;
      }
      ++r.steps;
      r.trace.blocks.emplace_back(static_cast<std::uint32_t>(fr.fn),
                                  static_cast<VertexId>(fr.block));
      entering = false;
    }
    const BasicBlock& bb = fr.f->blocks[fr.block];
    if (fr.stmt < bb.statements.size()) {
      const Statement& s = bb.statements[fr.stmt];
      switch (s.kind) {
        case Statement::Kind::kNop:
          ++fr.stmt;
          continue;
        case Statement::Kind::kAssign:
          fr.env[s.dest] = s.value.eval(fr.env);
          ++fr.stmt;
          continue;
        case Statement::Kind::kCall: {
          if (stack.size() >= max_depth) {
            r.truncated = true;
            r.stop_reason = "recursion depth";
            return r;
          }
          Frame callee;
          callee.fn = p.function_index(s.callee);
          callee.f = &p.functions[callee.fn];
          for (std::size_t i = 0; i < s.args.size(); ++i) {
            callee.env[callee.f->params[i]] = s.args[i].eval(fr.env);
          }
          // fr.stmt stays on the call; the return resumes past it.
          stack.push_back(std::move(callee));
          entering = true;
          continue;
        }
      }
    }
    const Terminator& t = bb.term;
    switch (t.kind) {
      case Terminator::Kind::kBranch: {
        const bool taken = t.cond.eval(fr.env);
        r.trace.decisions.push_back(taken);
        fr.block = fr.f->block_index(taken ? t.then_target : t.else_target);
        fr.stmt = 0;
        entering = true;
        continue;
      }
      case Terminator::Kind::kGoto:
        fr.block = fr.f->block_index(t.then_target);
        fr.stmt = 0;
        entering = true;
        continue;
      case Terminator::Kind::kReturn: {
        const long long value = t.value.eval(fr.env);
        stack.pop_back();
        if (stack.empty()) {
          r.return_value = value;
          return r;
        }
        Frame& caller = stack.back();
        const Statement& call = caller.f->blocks[caller.block].statements[caller.stmt];
        caller.env[call.dest] = value;
        ++caller.stmt;
        // Resuming mid-block: no fresh block entry, no trace append.
        continue;
      }
    }
  }
}

FeasibilityResult feasible(const MiniProgram& p, const PathPrefix& prefix,
                           const FeasibilityBudget& budget) {
  FeasibilityResult res;

  // Size of the input space, with an early exit on overflow of the budget.
  std::size_t total = 1;
  for (const InputDecl& d : p.inputs) {
    const auto span = static_cast<unsigned long long>(d.hi) -
                      static_cast<unsigned long long>(d.lo) + 1;
    if (span > budget.max_assignments ||
        total > budget.max_assignments / static_cast<std::size_t>(span)) {
      res.unknown = true;
      return res;
    }
    total *= static_cast<std::size_t>(span);
  }
  if (total > budget.max_assignments) {
    res.unknown = true;
    return res;
  }

  std::vector<long long> value(p.inputs.size());
  for (std::size_t i = 0; i < p.inputs.size(); ++i) value[i] = p.inputs[i].lo;

  bool inconclusive = false;
  for (std::size_t n = 0; n < total; ++n) {
    std::map<std::string, long long> assignment;
    for (std::size_t i = 0; i < p.inputs.size(); ++i) assignment[p.inputs[i].name] = value[i];

    const ConcreteResult run =
        run_concrete(p, assignment, budget.max_steps, budget.max_depth);
    if (run.trace.starts_with(prefix)) {
      res.feasible = true;
      res.witness = std::move(assignment);
      return res;
    }
    if (run.truncated && prefix.starts_with(run.trace)) {
      // Cut short while still agreeing with the prefix: this assignment is
      // neither a witness nor a refutation.
      inconclusive = true;
    }

    // Odometer increment, last input fastest.
    for (std::size_t i = p.inputs.size(); i-- > 0;) {
      if (value[i] < p.inputs[i].hi) {
        ++value[i];
        break;
      }
      value[i] = p.inputs[i].lo;
    }
  }

  res.unknown = inconclusive;
  return res;
}

}  // namespace pcsym

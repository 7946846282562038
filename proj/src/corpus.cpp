#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pcsym/corpus.hpp"
#include "pcsym/graph.hpp"

namespace pcsym {

std::string to_string(Shape s) {
  switch (s) {
    case Shape::kFig1: return "fig1";
    case Shape::kChain: return "chain";
    case Shape::kDiamonds: return "diamonds";
    case Shape::kLoop: return "loop";
    case Shape::kLoopDiamond: return "loopdiamond";
    case Shape::kCalls: return "calls";
    case Shape::kMixed: return "mixed";
  }
  return "mixed";
}

Shape shape_from_string(const std::string& text) {
  if (text == "fig1") return Shape::kFig1;
  if (text == "chain") return Shape::kChain;
  if (text == "diamonds") return Shape::kDiamonds;
  if (text == "loop") return Shape::kLoop;
  if (text == "loopdiamond") return Shape::kLoopDiamond;
  if (text == "calls") return Shape::kCalls;
  if (text == "mixed") return Shape::kMixed;
  throw ValidationError("corpus: unknown shape '" + text + "'");
}

std::string fig1_program() {
  return "input a in [0, 9];\n"
         "input b in [0, 9];\n"
         "input c in [0, 9];\n"
         "\n"
         "fn main(a, b, c) {\n"
         "bb0:\n"
         "  br a < 3 ? bb1 : bb2;\n"
         "bb1:\n"
         "  br b < 5 ? bb3 : bb4;\n"
         "bb2:\n"
         "  x := 2;\n"
         "  goto bb5;\n"
         "bb3:\n"
         "  x := 3;\n"
         "  goto bb5;\n"
         "bb4:\n"
         "  x := 4;\n"
         "  goto bb5;\n"
         "bb5:\n"
         "  br c < 5 ? bb6 : bb7;\n"
         "bb6:\n"
         "  y := x + 1;\n"
         "  goto bb8;\n"
         "bb7:\n"
         "  y := x + 2;\n"
         "  goto bb8;\n"
         "bb8:\n"
         "  return y;\n"
         "}\n";
}

namespace {

/// All randomness goes through these two helpers so the stream is pinned by
/// the seed alone (standard distribution classes vary across libraries).
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  long long pick(long long lo, long long hi) {
    return lo + static_cast<long long>(eng() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool chance(unsigned num, unsigned den) { return eng() % den < num; }
};

struct InputVar {
  std::string name;
  long long hi = 0;  // domain is [0, hi]
};

/// Accumulates one function's blocks as formatted text.
struct FnText {
  std::string name;
  std::vector<std::string> params;
  std::vector<std::string> lines;
  int next_block = 0;

  std::string fresh_label() { return "bb" + std::to_string(next_block++); }
  void block(const std::string& label, const std::vector<std::string>& stmts,
             const std::string& term) {
    lines.push_back(label + ":");
    for (const std::string& s : stmts) lines.push_back("  " + s);
    lines.push_back("  " + term);
  }
  std::string render() const {
    std::string out = "fn " + name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) out += ", ";
      out += params[i];
    }
    out += ") {\n";
    for (const std::string& l : lines) out += l + "\n";
    out += "}\n";
    return out;
  }
};

/// Generation state for one function body. `vars` holds only variables that
/// are definitely assigned on every path to the current point, so drawing
/// expression operands from it keeps the program valid.
struct Ctx {
  Rng& rng;
  FnText fn;
  std::vector<std::string> vars;
  std::vector<std::string> input_names;  // never reassigned
  std::vector<InputVar> inputs;
  bool interior_conds = false;  // conditions only test inputs against interior
                                // thresholds, keeping every arm feasible
  std::size_t cond_cycle = 0;   // rotates the tested input so consecutive
                                // forks stay independent
  int next_var = 0;

  explicit Ctx(Rng& r) : rng(r) {}
  std::string fresh_var() { return "x" + std::to_string(next_var++); }
  bool reassignable(const std::string& v) const {
    return std::find(input_names.begin(), input_names.end(), v) == input_names.end();
  }
};

std::string pick_var(Ctx& c) { return c.vars[c.rng.pick(0, c.vars.size() - 1)]; }

std::string affine(Ctx& c) {
  if (c.vars.empty() || c.rng.chance(1, 5)) return std::to_string(c.rng.pick(0, 9));
  const std::string v = pick_var(c);
  switch (c.rng.pick(0, 4)) {
    case 0: return v;
    case 1: return v + " + " + std::to_string(c.rng.pick(1, 9));
    case 2: return v + " - " + std::to_string(c.rng.pick(1, 9));
    case 3: return "2*" + v + " + " + std::to_string(c.rng.pick(0, 5));
    default: return v + " + " + pick_var(c);
  }
}

std::string cond(Ctx& c) {
  if (c.interior_conds) {
    const InputVar& in = c.inputs[c.cond_cycle++ % c.inputs.size()];
    return in.name + " < " + std::to_string(c.rng.pick(1, in.hi));
  }
  const std::string lhs = c.vars.empty() ? std::to_string(c.rng.pick(0, 9)) : pick_var(c);
  const char* ops[] = {"<", "<=", "==", "!="};
  const std::string op = ops[c.rng.pick(0, 3)];
  const std::string rhs = !c.rng.chance(1, 4) || c.vars.empty()
                              ? std::to_string(c.rng.pick(0, 9))
                              : pick_var(c);
  return lhs + " " + op + " " + rhs;
}

std::string assign_stmt(Ctx& c) {
  std::string dest;
  if (c.rng.chance(3, 10)) {
    std::vector<std::string> locals;
    for (const std::string& v : c.vars) {
      if (c.reassignable(v)) locals.push_back(v);
    }
    if (!locals.empty()) dest = locals[c.rng.pick(0, locals.size() - 1)];
  }
  const bool fresh = dest.empty();
  if (fresh) dest = c.fresh_var();
  const std::string s = dest + " := " + affine(c) + ";";
  if (fresh) c.vars.push_back(dest);
  return s;
}

/// `len` straight blocks from `entry`, ending in `goto next`.
void piece_chain(Ctx& c, std::string entry, const std::string& next, int len) {
  for (int k = 0; k < len; ++k) {
    std::vector<std::string> stmts;
    const long long n = c.rng.pick(1, 2);
    for (long long i = 0; i < n; ++i) stmts.push_back(assign_stmt(c));
    if (c.rng.chance(1, 8)) stmts.push_back("nop;");
    const std::string to = k + 1 == len ? next : c.fn.fresh_label();
    c.fn.block(entry, stmts, "goto " + to + ";");
    entry = to;
  }
}

/// Fork at `entry`, two arm blocks, rejoining at `next`. Both arms assign
/// the same fresh variable so it stays usable after the join.
void piece_diamond(Ctx& c, const std::string& entry, const std::string& next) {
  const std::string t = c.fn.fresh_label();
  const std::string e = c.fn.fresh_label();
  c.fn.block(entry, {}, "br " + cond(c) + " ? " + t + " : " + e + ";");
  const std::string v = c.fresh_var();
  c.fn.block(t, {v + " := " + affine(c) + ";"}, "goto " + next + ";");
  c.fn.block(e, {v + " := " + affine(c) + ";"}, "goto " + next + ";");
  c.vars.push_back(v);
}

/// Bounded counting loop: init block at `entry`, header testing the counter,
/// body (optionally forked) climbing it, exiting to `next`. The bound is a
/// small constant, or an input when available and interior mode is off.
void piece_loop(Ctx& c, const std::string& entry, const std::string& next,
                bool diamond_body) {
  const std::string head = c.fn.fresh_label();
  const std::string body = c.fn.fresh_label();
  const std::string i = c.fresh_var();
  const std::string acc = c.fresh_var();
  c.fn.block(entry, {i + " := 0;", acc + " := " + std::to_string(c.rng.pick(0, 3)) + ";"},
             "goto " + head + ";");
  std::string bound = std::to_string(c.rng.pick(2, 3));
  if (!c.interior_conds && !c.inputs.empty() && c.rng.chance(1, 2)) {
    bound = c.inputs[c.rng.pick(0, c.inputs.size() - 1)].name;
  }
  c.fn.block(head, {}, "br " + i + " < " + bound + " ? " + body + " : " + next + ";");
  c.vars.push_back(i);
  c.vars.push_back(acc);
  if (diamond_body) {
    const std::string a1 = c.fn.fresh_label();
    const std::string a2 = c.fn.fresh_label();
    const std::string latch = c.fn.fresh_label();
    c.fn.block(body, {i + " := " + i + " + 1;"},
               "br " + cond(c) + " ? " + a1 + " : " + a2 + ";");
    c.fn.block(a1, {acc + " := " + acc + " + 1;"}, "goto " + latch + ";");
    c.fn.block(a2, {acc + " := " + acc + " + 2;"}, "goto " + latch + ";");
    c.fn.block(latch, {}, "goto " + head + ";");
  } else {
    c.fn.block(body,
               {i + " := " + i + " + 1;", acc + " := " + acc + " + " + affine(c) + ";"},
               "goto " + head + ";");
  }
}

/// One call-site block: `v := call callee(arg); goto next;`.
void piece_call(Ctx& c, const std::string& entry, const std::string& next,
                const std::string& callee, const std::string& arg) {
  const std::string v = c.fresh_var();
  c.fn.block(entry, {v + " := call " + callee + "(" + arg + ");"}, "goto " + next + ";");
  c.vars.push_back(v);
}

/// Helper with one parameter and a diamond body; the threshold stays
/// interior to [0, arg_hi] so both arms are reachable for pass-through
/// input arguments.
std::string diamond_helper(Rng& rng, const std::string& name, long long arg_hi) {
  FnText f;
  f.name = name;
  f.params = {"p"};
  const long long t = rng.pick(1, std::max<long long>(1, arg_hi));
  f.block("bb0", {}, "br p < " + std::to_string(t) + " ? bb1 : bb2;");
  f.block("bb1", {"r := p + " + std::to_string(rng.pick(0, 4)) + ";"}, "goto bb3;");
  f.block("bb2", {"r := 2*p + " + std::to_string(rng.pick(0, 4)) + ";"}, "goto bb3;");
  f.block("bb3", {}, "return r;");
  return f.render();
}

/// Self-calling helper counting down to zero; callers keep the argument
/// small so the stack stays inside the default depth budget.
std::string rec_helper(const std::string& name) {
  FnText f;
  f.name = name;
  f.params = {"k"};
  f.block("bb0", {}, "br k < 1 ? bb1 : bb2;");
  f.block("bb1", {}, "return 0;");
  f.block("bb2", {"r := call " + name + "(k - 1);"}, "return r + 1;");
  return f.render();
}

std::string render_program(const std::vector<InputVar>& inputs, const FnText& main_fn,
                           const std::vector<std::string>& helpers) {
  std::string out;
  for (const InputVar& in : inputs) {
    out += "input " + in.name + " in [0, " + std::to_string(in.hi) + "];\n";
  }
  if (!inputs.empty()) out += "\n";
  out += main_fn.render();
  for (const std::string& h : helpers) out += "\n" + h;
  return out;
}

std::vector<InputVar> make_inputs(Rng& rng, std::size_t count) {
  static const char* kNames[] = {"a", "b", "c", "d"};
  std::vector<InputVar> ins;
  for (std::size_t i = 0; i < count && i < 4; ++i) {
    ins.push_back({kNames[i], rng.pick(3, 9)});
  }
  return ins;
}

Ctx main_ctx(Rng& rng, const std::vector<InputVar>& inputs, bool interior) {
  Ctx c(rng);
  c.fn.name = "main";
  c.inputs = inputs;
  c.interior_conds = interior;
  for (const InputVar& in : inputs) {
    c.fn.params.push_back(in.name);
    c.vars.push_back(in.name);
    c.input_names.push_back(in.name);
  }
  return c;
}

using Piece = std::function<void(Ctx&, const std::string&, const std::string&)>;

/// Pieces strung between fresh labels; the tail block returns an affine of
/// whatever is definitely assigned.
std::string assemble_main(Ctx& c, const std::vector<Piece>& pieces,
                          const std::vector<std::string>& helpers) {
  std::string cur = c.fn.fresh_label();
  for (const Piece& piece : pieces) {
    const std::string next = c.fn.fresh_label();
    piece(c, cur, next);
    cur = next;
  }
  c.fn.block(cur, {}, "return " + affine(c) + ";");
  return render_program(c.inputs, c.fn, helpers);
}

std::string gen_chain(Rng& rng, int diamonds, bool interior) {
  const auto inputs = make_inputs(rng, 1 + static_cast<std::size_t>(rng.pick(0, 1)));
  Ctx c = main_ctx(rng, inputs, interior);
  std::vector<Piece> pieces;
  pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
    piece_chain(cc, en, nx, static_cast<int>(cc.rng.pick(2, 4)));
  });
  for (int i = 0; i < diamonds; ++i) {
    pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
      piece_diamond(cc, en, nx);
    });
  }
  return assemble_main(c, pieces, {});
}

std::string gen_diamonds(Rng& rng, int branches, bool interior) {
  const auto inputs = make_inputs(rng, 2 + static_cast<std::size_t>(rng.pick(0, 1)));
  Ctx c = main_ctx(rng, inputs, interior);
  const int diamonds = branches < 0 ? static_cast<int>(rng.pick(2, 5)) : std::max(1, branches);
  std::vector<Piece> pieces;
  for (int i = 0; i < diamonds; ++i) {
    pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
      piece_diamond(cc, en, nx);
    });
  }
  return assemble_main(c, pieces, {});
}

std::string gen_loop(Rng& rng, bool diamond_body, bool interior, bool post_diamond) {
  const auto inputs = make_inputs(rng, 1 + static_cast<std::size_t>(rng.pick(0, 1)));
  Ctx c = main_ctx(rng, inputs, interior);
  std::vector<Piece> pieces;
  pieces.push_back([diamond_body](Ctx& cc, const std::string& en, const std::string& nx) {
    piece_loop(cc, en, nx, diamond_body);
  });
  if (post_diamond) {
    pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
      piece_diamond(cc, en, nx);
    });
  }
  return assemble_main(c, pieces, {});
}

std::string gen_calls(Rng& rng, int branches, bool interior) {
  const auto inputs = make_inputs(rng, 2);
  Ctx c = main_ctx(rng, inputs, interior);
  const long long shared_hi = std::min(inputs[0].hi, inputs[1].hi);
  std::vector<std::string> helpers;
  helpers.push_back(diamond_helper(rng, "h0", shared_hi));
  const int diamonds = branches < 0 ? 1 : std::max(1, branches - 1);
  std::vector<Piece> pieces;
  // The same helper called from two sites, fed pass-through inputs so its
  // branch stays two-way feasible from both.
  pieces.push_back([&inputs](Ctx& cc, const std::string& en, const std::string& nx) {
    piece_call(cc, en, nx, "h0", inputs[0].name);
  });
  for (int i = 0; i < diamonds; ++i) {
    pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
      piece_diamond(cc, en, nx);
    });
  }
  pieces.push_back([&inputs](Ctx& cc, const std::string& en, const std::string& nx) {
    piece_call(cc, en, nx, "h0", inputs[1].name);
  });
  return assemble_main(c, pieces, helpers);
}

std::string gen_mixed(Rng& rng) {
  const auto inputs = make_inputs(rng, 2 + static_cast<std::size_t>(rng.pick(0, 1)));
  Ctx c = main_ctx(rng, inputs, false);
  std::vector<std::string> helpers;
  std::vector<Piece> pieces;

  bool have_helper = false;
  bool have_rec = false;
  const int n = static_cast<int>(rng.pick(2, 3));
  for (int i = 0; i < n; ++i) {
    switch (rng.pick(0, 5)) {
      case 0:
        pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
          piece_chain(cc, en, nx, static_cast<int>(cc.rng.pick(1, 3)));
        });
        break;
      case 1:
      case 2:
        pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
          piece_diamond(cc, en, nx);
        });
        break;
      case 3:
        pieces.push_back([](Ctx& cc, const std::string& en, const std::string& nx) {
          piece_loop(cc, en, nx, cc.rng.chance(1, 2));
        });
        break;
      case 4: {
        if (!have_helper) {
          helpers.push_back(diamond_helper(rng, "h0", inputs[0].hi));
          have_helper = true;
        }
        pieces.push_back([&inputs](Ctx& cc, const std::string& en, const std::string& nx) {
          piece_call(cc, en, nx, "h0", inputs[0].name);
        });
        break;
      }
      default: {
        if (!have_rec) {
          helpers.push_back(rec_helper("rec"));
          have_rec = true;
        }
        // Argument capped at 5: a countdown from 5 plus the outer frame
        // stays within the default call-depth budget of 8.
        const std::string arg = std::to_string(rng.pick(0, 5));
        pieces.push_back([arg](Ctx& cc, const std::string& en, const std::string& nx) {
          piece_call(cc, en, nx, "rec", arg);
        });
        break;
      }
    }
  }
  return assemble_main(c, pieces, helpers);
}

}  // namespace

std::string generate_program_text(Shape shape, std::uint64_t seed, int branches) {
  Rng rng(seed);
  switch (shape) {
    case Shape::kFig1: return fig1_program();
    case Shape::kChain: return gen_chain(rng, branches < 0 ? 0 : branches, false);
    case Shape::kDiamonds: return gen_diamonds(rng, branches, false);
    case Shape::kLoop: return gen_loop(rng, false, false, false);
    case Shape::kLoopDiamond: return gen_loop(rng, true, false, false);
    case Shape::kCalls: return gen_calls(rng, branches, false);
    case Shape::kMixed: return gen_mixed(rng);
  }
  return gen_mixed(rng);
}

std::vector<std::string> generate_corpus(std::uint64_t seed, std::size_t count,
                                         Shape shape, int branches) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate_program_text(shape, seed + i, branches));
  }
  return out;
}

std::vector<std::string> strategy_corpus(std::uint64_t seed) {
  std::vector<std::string> out;
  out.reserve(20);
  out.push_back(fig1_program());
  for (int i = 0; i < 7; ++i) {  // 1..7: diamond runs, 2..5 forks
    Rng rng(seed + 100 + static_cast<std::uint64_t>(i));
    out.push_back(gen_diamonds(rng, 2 + i % 4, true));
  }
  for (int i = 0; i < 4; ++i) {  // 8..11: loop with forked body, then a diamond
    Rng rng(seed + 200 + static_cast<std::uint64_t>(i));
    out.push_back(gen_loop(rng, true, true, true));
  }
  for (int i = 0; i < 4; ++i) {  // 12..15: shared helper plus diamonds
    Rng rng(seed + 300 + static_cast<std::uint64_t>(i));
    out.push_back(gen_calls(rng, 2 + i % 2, true));
  }
  for (int i = 0; i < 4; ++i) {  // 16..19: chain into two diamonds
    Rng rng(seed + 400 + static_cast<std::uint64_t>(i));
    out.push_back(gen_chain(rng, 2, true));
  }
  return out;
}

}  // namespace pcsym

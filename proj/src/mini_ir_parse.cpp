#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pcsym/mini_ir.hpp"

namespace pcsym {

long long AffineExpr::eval(const std::map<std::string, long long>& env) const {
  long long sum = 0;
  for (const AffineTerm& t : terms) {
    if (t.var.empty()) {
      sum += t.coeff;
    } else {
      sum += t.coeff * env.at(t.var);
    }
  }
  return sum;
}

bool Condition::eval(const std::map<std::string, long long>& env) const {
  const long long a = lhs.eval(env), b = rhs.eval(env);
  switch (op) {
    case CmpOp::kLt: return a < b;
    case CmpOp::kLe: return a <= b;
    case CmpOp::kEq: return a == b;
    case CmpOp::kNe: return a != b;
  }
  return false;
}

const BasicBlock* Function::find_block(const std::string& label) const {
  for (const BasicBlock& b : blocks) {
    if (b.label == label) return &b;
  }
  return nullptr;
}

std::size_t Function::block_index(const std::string& label) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].label == label) return i;
  }
  throw ValidationError("no block labeled '" + label + "' in function " + name);
}

const Function* MiniProgram::find_function(const std::string& fname) const {
  for (const Function& f : functions) {
    if (f.name == fname) return &f;
  }
  return nullptr;
}

std::size_t MiniProgram::function_index(const std::string& fname) const {
  for (std::size_t i = 0; i < functions.size(); ++i) {
    if (functions[i].name == fname) return i;
  }
  throw ValidationError("no function named '" + fname + "'");
}

ParseError::ParseError(int line_, int col_, const std::string& message)
    : std::runtime_error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + message),
      line(line_),
      col(col_) {}

namespace {

enum class Tok : std::uint8_t {
  kIdent,
  kInt,
  kInput,
  kFn,
  kBr,
  kGoto,
  kReturn,
  kCall,
  kNop,
  kIn,
  kAssign,  // :=
  kColon,
  kSemi,
  kComma,
  kLParen,
  kRParen,
  kLBrace,
  kRBrace,
  kLBracket,
  kRBracket,
  kQuestion,
  kPlus,
  kMinus,
  kStar,
  kLt,
  kLe,
  kEq,
  kNe,
  kEnd,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  long long value = 0;  // kInt
  int line = 1, col = 1;
};

std::string token_name(Tok k) {
  switch (k) {
    case Tok::kIdent: return "identifier";
    case Tok::kInt: return "integer";
    case Tok::kInput: return "'input'";
    case Tok::kFn: return "'fn'";
    case Tok::kBr: return "'br'";
    case Tok::kGoto: return "'goto'";
    case Tok::kReturn: return "'return'";
    case Tok::kCall: return "'call'";
    case Tok::kNop: return "'nop'";
    case Tok::kIn: return "'in'";
    case Tok::kAssign: return "':='";
    case Tok::kColon: return "':'";
    case Tok::kSemi: return "';'";
    case Tok::kComma: return "','";
    case Tok::kLParen: return "'('";
    case Tok::kRParen: return "')'";
    case Tok::kLBrace: return "'{'";
    case Tok::kRBrace: return "'}'";
    case Tok::kLBracket: return "'['";
    case Tok::kRBracket: return "']'";
    case Tok::kQuestion: return "'?'";
    case Tok::kPlus: return "'+'";
    case Tok::kMinus: return "'-'";
    case Tok::kStar: return "'*'";
    case Tok::kLt: return "'<'";
    case Tok::kLe: return "'<='";
    case Tok::kEq: return "'=='";
    case Tok::kNe: return "'!='";
    case Tok::kEnd: return "end of input";
  }
  return "?";
}

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  const auto step = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i < text.size() && text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      step(1);
      continue;
    }
    if (c == '#') {  // comment to end of line
      while (i < text.size() && text[i] != '\n') step(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) {
        ++j;
      }
      t.text = text.substr(i, j - i);
      if (t.text == "input") t.kind = Tok::kInput;
      else if (t.text == "fn") t.kind = Tok::kFn;
      else if (t.text == "br") t.kind = Tok::kBr;
      else if (t.text == "goto") t.kind = Tok::kGoto;
      else if (t.text == "return") t.kind = Tok::kReturn;
      else if (t.text == "call") t.kind = Tok::kCall;
      else if (t.text == "nop") t.kind = Tok::kNop;
      else if (t.text == "in") t.kind = Tok::kIn;
      else t.kind = Tok::kIdent;
      step(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      t.kind = Tok::kInt;
      t.text = text.substr(i, j - i);
      try {
        t.value = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        throw ParseError(line, col, "integer literal out of range");
      }
      step(j - i);
    } else {
      const auto two = text.substr(i, 2);
      if (two == ":=") {
        t.kind = Tok::kAssign;
        step(2);
      } else if (two == "<=") {
        t.kind = Tok::kLe;
        step(2);
      } else if (two == "==") {
        t.kind = Tok::kEq;
        step(2);
      } else if (two == "!=") {
        t.kind = Tok::kNe;
        step(2);
      } else {
        switch (c) {
          case ':': t.kind = Tok::kColon; break;
          case ';': t.kind = Tok::kSemi; break;
          case ',': t.kind = Tok::kComma; break;
          case '(': t.kind = Tok::kLParen; break;
          case ')': t.kind = Tok::kRParen; break;
          case '{': t.kind = Tok::kLBrace; break;
          case '}': t.kind = Tok::kRBrace; break;
          case '[': t.kind = Tok::kLBracket; break;
          case ']': t.kind = Tok::kRBracket; break;
          case '?': t.kind = Tok::kQuestion; break;
          case '+': t.kind = Tok::kPlus; break;
          case '-': t.kind = Tok::kMinus; break;
          case '*': t.kind = Tok::kStar; break;
          case '<': t.kind = Tok::kLt; break;
          default:
            throw ParseError(line, col, std::string("unexpected character '") + c + "'");
        }
        step(1);
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::kEnd;
  end.line = line;
  end.col = col;
  out.push_back(std::move(end));
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  MiniProgram program() {
    MiniProgram p;
    while (peek().kind != Tok::kEnd) {
      if (peek().kind == Tok::kInput) {
        p.inputs.push_back(input_decl());
      } else if (peek().kind == Tok::kFn) {
        p.functions.push_back(function());
      } else {
        fail("expected 'input' or 'fn'");
      }
    }
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t at = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[at];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(peek().line, peek().col, msg + ", got " + token_name(peek().kind));
  }
  Token expect(Tok k) {
    if (peek().kind != k) fail("expected " + token_name(k));
    return next();
  }

  long long integer() {
    bool neg = false;
    if (peek().kind == Tok::kMinus) {
      next();
      neg = true;
    }
    const Token t = expect(Tok::kInt);
    return neg ? -t.value : t.value;
  }

  InputDecl input_decl() {
    InputDecl d;
    const Token kw = expect(Tok::kInput);
    d.line = kw.line;
    d.col = kw.col;
    d.name = expect(Tok::kIdent).text;
    expect(Tok::kIn);
    expect(Tok::kLBracket);
    d.lo = integer();
    expect(Tok::kComma);
    d.hi = integer();
    expect(Tok::kRBracket);
    expect(Tok::kSemi);
    return d;
  }

  // term := INT '*' IDENT | INT | IDENT ; sign applied by the caller.
  AffineTerm term(bool negate) {
    AffineTerm t;
    if (peek().kind == Tok::kInt) {
      t.coeff = next().value;
      if (peek().kind == Tok::kStar) {
        next();
        t.var = expect(Tok::kIdent).text;
      }
    } else if (peek().kind == Tok::kIdent) {
      t.coeff = 1;
      t.var = next().text;
    } else {
      fail("expected integer or variable");
    }
    if (negate) t.coeff = -t.coeff;
    return t;
  }

  AffineExpr affine() {
    AffineExpr e;
    bool neg = false;
    if (peek().kind == Tok::kMinus) {
      next();
      neg = true;
    }
    e.terms.push_back(term(neg));
    while (peek().kind == Tok::kPlus || peek().kind == Tok::kMinus) {
      const bool minus = next().kind == Tok::kMinus;
      e.terms.push_back(term(minus));
    }
    return e;
  }

  Condition condition() {
    Condition c;
    c.lhs = affine();
    switch (peek().kind) {
      case Tok::kLt: c.op = CmpOp::kLt; break;
      case Tok::kLe: c.op = CmpOp::kLe; break;
      case Tok::kEq: c.op = CmpOp::kEq; break;
      case Tok::kNe: c.op = CmpOp::kNe; break;
      default: fail("expected comparison operator");
    }
    next();
    c.rhs = affine();
    return c;
  }

  Statement statement() {
    Statement s;
    s.line = peek().line;
    s.col = peek().col;
    if (peek().kind == Tok::kNop) {
      next();
      expect(Tok::kSemi);
      s.kind = Statement::Kind::kNop;
      return s;
    }
    s.dest = expect(Tok::kIdent).text;
    expect(Tok::kAssign);
    if (peek().kind == Tok::kCall) {
      next();
      s.kind = Statement::Kind::kCall;
      s.callee = expect(Tok::kIdent).text;
      expect(Tok::kLParen);
      if (peek().kind != Tok::kRParen) {
        s.args.push_back(affine());
        while (peek().kind == Tok::kComma) {
          next();
          s.args.push_back(affine());
        }
      }
      expect(Tok::kRParen);
    } else {
      s.kind = Statement::Kind::kAssign;
      s.value = affine();
    }
    expect(Tok::kSemi);
    return s;
  }

  Terminator terminator() {
    Terminator t;
    t.line = peek().line;
    t.col = peek().col;
    if (peek().kind == Tok::kBr) {
      next();
      t.kind = Terminator::Kind::kBranch;
      t.cond = condition();
      expect(Tok::kQuestion);
      t.then_target = expect(Tok::kIdent).text;
      expect(Tok::kColon);
      t.else_target = expect(Tok::kIdent).text;
    } else if (peek().kind == Tok::kGoto) {
      next();
      t.kind = Terminator::Kind::kGoto;
      t.then_target = expect(Tok::kIdent).text;
    } else if (peek().kind == Tok::kReturn) {
      next();
      t.kind = Terminator::Kind::kReturn;
      t.value = affine();
    } else {
      fail("expected 'br', 'goto', or 'return'");
    }
    expect(Tok::kSemi);
    return t;
  }

  BasicBlock block() {
    BasicBlock b;
    const Token label = expect(Tok::kIdent);
    b.label = label.text;
    b.line = label.line;
    b.col = label.col;
    expect(Tok::kColon);
    while (true) {
      const Tok k = peek().kind;
      if (k == Tok::kBr || k == Tok::kGoto || k == Tok::kReturn) {
        b.term = terminator();
        return b;
      }
      if (k == Tok::kNop || (k == Tok::kIdent && peek(1).kind == Tok::kAssign)) {
        b.statements.push_back(statement());
        continue;
      }
      fail("expected a statement or a terminator");
    }
  }

  Function function() {
    Function f;
    const Token kw = expect(Tok::kFn);
    f.line = kw.line;
    f.col = kw.col;
    f.name = expect(Tok::kIdent).text;
    expect(Tok::kLParen);
    if (peek().kind != Tok::kRParen) {
      f.params.push_back(expect(Tok::kIdent).text);
      while (peek().kind == Tok::kComma) {
        next();
        f.params.push_back(expect(Tok::kIdent).text);
      }
    }
    expect(Tok::kRParen);
    expect(Tok::kLBrace);
    while (peek().kind != Tok::kRBrace) {
      f.blocks.push_back(block());
    }
    expect(Tok::kRBrace);
    if (f.blocks.empty()) {
      BasicBlock b;
      b.label = "bb0";
      b.line = f.line;
      b.col = f.col;
      b.term.kind = Terminator::Kind::kReturn;
      b.term.value = AffineExpr::constant(0);
      b.term.line = f.line;
      b.term.col = f.col;
      f.blocks.push_back(std::move(b));
    }
    return f;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void for_each_use(const AffineExpr& e, const auto& fn) {
  for (const AffineTerm& t : e.terms) {
    if (!t.var.empty()) fn(t.var);
  }
}

/// Flow-sensitive "defined on every path here" check per function, with a
/// must-intersection fixpoint over the block graph.
void check_definite_assignment(const Function& f) {
  std::set<std::string> vars(f.params.begin(), f.params.end());
  for (const BasicBlock& b : f.blocks) {
    for (const Statement& s : b.statements) {
      if (s.kind != Statement::Kind::kNop) vars.insert(s.dest);
    }
  }
  std::vector<std::string> universe(vars.begin(), vars.end());
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < universe.size(); ++i) slot[universe[i]] = i;

  const std::size_t n = f.blocks.size();
  std::vector<std::vector<std::size_t>> succs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Terminator& t = f.blocks[i].term;
    if (t.kind == Terminator::Kind::kBranch) {
      succs[i] = {f.block_index(t.then_target), f.block_index(t.else_target)};
    } else if (t.kind == Terminator::Kind::kGoto) {
      succs[i] = {f.block_index(t.then_target)};
    }
  }

  // in[b] = set of definitely-defined variables at block entry (bitset);
  // start from "everything" and intersect, with the entry pinned to params.
  std::vector<std::vector<bool>> in(n, std::vector<bool>(universe.size(), true));
  in[0].assign(universe.size(), false);
  for (const std::string& pname : f.params) in[0][slot[pname]] = true;
  const auto flow = [&](std::size_t b) {
    std::vector<bool> d = in[b];
    for (const Statement& s : f.blocks[b].statements) {
      if (s.kind != Statement::Kind::kNop) d[slot[s.dest]] = true;
    }
    return d;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t b = 0; b < n; ++b) {
      const std::vector<bool> out = flow(b);
      for (const std::size_t s : succs[b]) {
        if (s == 0) continue;  // the entry keeps its parameter-only state
        for (std::size_t v = 0; v < universe.size(); ++v) {
          if (in[s][v] && !out[v]) {
            in[s][v] = false;
            changed = true;
          }
        }
      }
    }
  }

  for (std::size_t b = 0; b < n; ++b) {
    std::vector<bool> d = in[b];
    const auto use = [&](const std::string& v, int line, int col) {
      const auto it = slot.find(v);
      if (it == slot.end() || !d[it->second]) {
        throw ParseError(line, col, "variable '" + v + "' may be used before definition in function " +
                                        f.name);
      }
    };
    for (const Statement& s : f.blocks[b].statements) {
      if (s.kind == Statement::Kind::kAssign) {
        for_each_use(s.value, [&](const std::string& v) { use(v, s.line, s.col); });
      } else if (s.kind == Statement::Kind::kCall) {
        for (const AffineExpr& a : s.args) {
          for_each_use(a, [&](const std::string& v) { use(v, s.line, s.col); });
        }
      }
      if (s.kind != Statement::Kind::kNop) d[slot[s.dest]] = true;
    }
    const Terminator& t = f.blocks[b].term;
    if (t.kind == Terminator::Kind::kBranch) {
      for_each_use(t.cond.lhs, [&](const std::string& v) { use(v, t.line, t.col); });
      for_each_use(t.cond.rhs, [&](const std::string& v) { use(v, t.line, t.col); });
    } else if (t.kind == Terminator::Kind::kReturn) {
      for_each_use(t.value, [&](const std::string& v) { use(v, t.line, t.col); });
    }
  }
}

void validate(const MiniProgram& p) {
  // Functions: unique names, one entry named main.
  std::set<std::string> fn_names;
  for (const Function& f : p.functions) {
    if (!fn_names.insert(f.name).second) {
      throw ParseError(f.line, f.col, "duplicate function '" + f.name + "'");
    }
  }
  const Function* entry = nullptr;
  for (const Function& f : p.functions) {
    if (f.name == "main") entry = &f;
  }
  if (entry == nullptr) throw ParseError(1, 1, "no entry function: define 'main'");

  // Inputs: unique, nonempty domains, and exactly main's parameters.
  std::set<std::string> input_names;
  for (const InputDecl& d : p.inputs) {
    if (!input_names.insert(d.name).second) {
      throw ParseError(d.line, d.col, "duplicate input '" + d.name + "'");
    }
    if (d.lo > d.hi) {
      throw ParseError(d.line, d.col, "empty input domain for '" + d.name + "'");
    }
  }
  const std::set<std::string> entry_params(entry->params.begin(), entry->params.end());
  for (const InputDecl& d : p.inputs) {
    if (!entry_params.count(d.name)) {
      throw ParseError(d.line, d.col, "input '" + d.name + "' is not a parameter of main");
    }
  }
  for (const std::string& pr : entry->params) {
    if (!input_names.count(pr)) {
      throw ParseError(entry->line, entry->col,
                       "parameter '" + pr + "' of main has no input declaration");
    }
  }

  for (const Function& f : p.functions) {
    std::set<std::string> params(f.params.begin(), f.params.end());
    if (params.size() != f.params.size()) {
      throw ParseError(f.line, f.col, "duplicate parameter in function " + f.name);
    }
    std::set<std::string> labels;
    for (const BasicBlock& b : f.blocks) {
      if (!labels.insert(b.label).second) {
        throw ParseError(b.line, b.col, "duplicate block label '" + b.label + "'");
      }
    }
    for (const BasicBlock& b : f.blocks) {
      const Terminator& t = b.term;
      const auto target = [&](const std::string& l) {
        if (f.find_block(l) == nullptr) {
          throw ParseError(t.line, t.col, "no block labeled '" + l + "' in function " + f.name);
        }
        if (l == b.label) {
          throw ParseError(t.line, t.col, "block '" + b.label + "' targets its own block");
        }
      };
      if (t.kind == Terminator::Kind::kBranch) {
        target(t.then_target);
        target(t.else_target);
        if (t.then_target == t.else_target) {
          throw ParseError(t.line, t.col, "branch arms must name distinct blocks");
        }
      } else if (t.kind == Terminator::Kind::kGoto) {
        target(t.then_target);
      }
      for (const Statement& s : b.statements) {
        if (s.kind == Statement::Kind::kNop) continue;
        if (params.count(s.dest)) {
          throw ParseError(s.line, s.col, "parameter '" + s.dest + "' is read-only");
        }
        if (s.kind == Statement::Kind::kCall) {
          const Function* callee = p.find_function(s.callee);
          if (callee == nullptr) {
            throw ParseError(s.line, s.col, "unknown function '" + s.callee + "'");
          }
          if (callee->params.size() != s.args.size()) {
            throw ParseError(s.line, s.col,
                             "function '" + s.callee + "' takes " +
                                 std::to_string(callee->params.size()) + " arguments, got " +
                                 std::to_string(s.args.size()));
          }
        }
      }
    }
    check_definite_assignment(f);
  }
}

void print_affine(std::ostringstream& os, const AffineExpr& e) {
  if (e.terms.empty()) {
    os << "0";
    return;
  }
  const auto magnitude = [&](const AffineTerm& t) {
    const long long mag = t.coeff < 0 ? -t.coeff : t.coeff;
    if (t.var.empty()) {
      os << mag;
    } else if (mag == 1) {
      os << t.var;
    } else {
      os << mag << "*" << t.var;
    }
  };
  for (std::size_t i = 0; i < e.terms.size(); ++i) {
    const AffineTerm& t = e.terms[i];
    if (i == 0) {
      if (t.coeff < 0) os << "-";
    } else {
      os << (t.coeff < 0 ? " - " : " + ");
    }
    magnitude(t);
  }
}

void print_condition(std::ostringstream& os, const Condition& c) {
  print_affine(os, c.lhs);
  switch (c.op) {
    case CmpOp::kLt: os << " < "; break;
    case CmpOp::kLe: os << " <= "; break;
    case CmpOp::kEq: os << " == "; break;
    case CmpOp::kNe: os << " != "; break;
  }
  print_affine(os, c.rhs);
}

}  // namespace

MiniProgram parse_program(const std::string& text) {
  Parser parser(lex(text));
  MiniProgram p = parser.program();
  validate(p);
  p.entry_function = p.function_index("main");
  return p;
}

std::string print_program(const MiniProgram& p) {
  std::ostringstream os;
  for (const InputDecl& d : p.inputs) {
    os << "input " << d.name << " in [" << d.lo << ", " << d.hi << "];\n";
  }
  bool first = p.inputs.empty();
  for (const Function& f : p.functions) {
    if (!first) os << "\n";
    first = false;
    os << "fn " << f.name << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i > 0) os << ", ";
      os << f.params[i];
    }
    os << ") {\n";
    for (const BasicBlock& b : f.blocks) {
      os << b.label << ":\n";
      for (const Statement& s : b.statements) {
        os << "  ";
        if (s.kind == Statement::Kind::kNop) {
          os << "nop;";
        } else if (s.kind == Statement::Kind::kAssign) {
          os << s.dest << " := ";
          print_affine(os, s.value);
          os << ";";
        } else {
          os << s.dest << " := call " << s.callee << "(";
          for (std::size_t i = 0; i < s.args.size(); ++i) {
            if (i > 0) os << ", ";
            print_affine(os, s.args[i]);
          }
          os << ");";
        }
        os << "\n";
      }
      os << "  ";
      const Terminator& t = b.term;
      if (t.kind == Terminator::Kind::kBranch) {
        os << "br ";
        print_condition(os, t.cond);
        os << " ? " << t.then_target << " : " << t.else_target << ";";
      } else if (t.kind == Terminator::Kind::kGoto) {
        os << "goto " << t.then_target << ";";
      } else {
        os << "return ";
        print_affine(os, t.value);
        os << ";";
      }
      os << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

}  // namespace pcsym

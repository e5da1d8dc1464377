#include "tjit/parse.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace tjit {
namespace {

enum class Tok : std::uint8_t {
  Ident, Int, Arrow, LParen, RParen, Colon, Comma, LBracket, RBracket,
  Dot, Plus, Minus, Star, Eq, Lt, Percent, End,
};

struct Token {
  Tok kind;
  std::string text;
  std::uint64_t num = 0;
  int col = 0;
};

bool is_reserved(const std::string& w) {
  static const char* const words[] = {"Function", "version", "Nop",  "Cond",
                                      "Print",    "Call",    "Return",
                                      "MemGet",   "MemSet",  "Assume"};
  for (const char* k : words)
    if (w == k) return true;
  return false;
}

class LineLexer {
 public:
  LineLexer(std::string_view line, int line_no) : line_(line), no_(line_no) {
    next();
  }

  const Token& peek() const { return cur_; }

  Token take() {
    Token t = cur_;
    next();
    return t;
  }

  [[noreturn]] void fail(const std::string& msg, int col) const {
    throw ParseError(no_, col, msg);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(msg, cur_.col); }

  Token expect(Tok kind, const char* what) {
    if (cur_.kind != kind) fail(std::string("expected ") + what);
    return take();
  }

  void expect_keyword(const char* kw) {
    if (cur_.kind != Tok::Ident || cur_.text != kw)
      fail(std::string("expected '") + kw + "'");
    take();
  }

  void expect_end() {
    if (cur_.kind != Tok::End) fail("trailing tokens on line");
  }

  int line_no() const { return no_; }

 private:
  void next() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_])))
      ++pos_;
    cur_.col = static_cast<int>(pos_) + 1;
    if (pos_ >= line_.size() || line_[pos_] == '#') {
      cur_ = {Tok::End, "", 0, cur_.col};
      return;
    }
    char c = line_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < line_.size() &&
             (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_'))
        ++pos_;
      cur_ = {Tok::Ident, std::string(line_.substr(start, pos_ - start)), 0,
              static_cast<int>(start) + 1};
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      std::uint64_t v = 0;
      while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) {
        std::uint64_t d = static_cast<std::uint64_t>(line_[pos_] - '0');
        if (v > (UINT64_MAX - d) / 10)
          throw ParseError(no_, static_cast<int>(start) + 1,
                           "integer literal out of range");
        v = v * 10 + d;
        ++pos_;
      }
      cur_ = {Tok::Int, std::string(line_.substr(start, pos_ - start)), v,
              static_cast<int>(start) + 1};
      return;
    }
    int col = static_cast<int>(pos_) + 1;
    if (c == '<' && pos_ + 1 < line_.size() && line_[pos_ + 1] == '-') {
      pos_ += 2;
      cur_ = {Tok::Arrow, "<-", 0, col};
      return;
    }
    ++pos_;
    Tok k;
    switch (c) {
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case ':': k = Tok::Colon; break;
      case ',': k = Tok::Comma; break;
      case '[': k = Tok::LBracket; break;
      case ']': k = Tok::RBracket; break;
      case '.': k = Tok::Dot; break;
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '=': k = Tok::Eq; break;
      case '<': k = Tok::Lt; break;
      case '%': k = Tok::Percent; break;
      default:
        throw ParseError(no_, col, std::string("unexpected character '") + c + "'");
    }
    cur_ = {k, std::string(1, c), 0, col};
  }

  std::string_view line_;
  int no_;
  std::size_t pos_ = 0;
  Token cur_;
};

// Accepts "r1" and spellings like "reg1"; the id is the numeric suffix.
std::optional<std::uint32_t> prefixed_id(const std::string& word, char prefix) {
  if (word.empty() || word[0] != prefix) return std::nullopt;
  std::size_t i = 1;
  while (i < word.size() && std::isalpha(static_cast<unsigned char>(word[i]))) ++i;
  if (i >= word.size()) return std::nullopt;
  std::uint64_t v = 0;
  for (; i < word.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(word[i]))) return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(word[i] - '0');
    if (v > UINT32_MAX) return std::nullopt;
  }
  return static_cast<std::uint32_t>(v);
}

RegId parse_reg(LineLexer& lx) {
  Token t = lx.peek();
  if (t.kind != Tok::Ident) lx.fail("expected register");
  auto id = prefixed_id(t.text, 'r');
  if (!id) lx.fail("expected register");
  if (*id == 0) lx.fail("register index must be positive");
  lx.take();
  return *id;
}

LabelId parse_label(LineLexer& lx) {
  Token t = lx.peek();
  if (t.kind != Tok::Ident) lx.fail("expected label");
  auto id = prefixed_id(t.text, 'l');
  if (!id) lx.fail("expected label");
  if (*id == 0) lx.fail("label index must be positive");
  lx.take();
  return *id;
}

bool looks_like_reg(const Token& t) {
  return t.kind == Tok::Ident && prefixed_id(t.text, 'r').has_value();
}

Value parse_signed_int(LineLexer& lx, bool negative) {
  Token t = lx.expect(Tok::Int, "integer");
  constexpr std::uint64_t kMax = 1ull << 63;
  if (negative) {
    if (t.num > kMax) lx.fail("integer literal out of range", t.col);
    return static_cast<Value>(~t.num + 1);  // two's complement negate
  }
  if (t.num >= kMax) lx.fail("integer literal out of range", t.col);
  return static_cast<Value>(t.num);
}

// expr := - r | - v | v | r (+|-|*|=|<|%) r | r = 0 | r + v | r * v
Expr parse_expr(LineLexer& lx) {
  const Token& t = lx.peek();
  if (t.kind == Tok::Minus) {
    lx.take();
    if (looks_like_reg(lx.peek())) return expr_neg(parse_reg(lx));
    return expr_const(parse_signed_int(lx, true));
  }
  if (t.kind == Tok::Int) return expr_const(parse_signed_int(lx, false));
  if (!looks_like_reg(t)) lx.fail("expected expression");
  RegId a = parse_reg(lx);
  Token op = lx.take();
  auto rhs_imm = [&]() -> std::optional<Value> {
    if (lx.peek().kind == Tok::Minus) {
      lx.take();
      return parse_signed_int(lx, true);
    }
    if (lx.peek().kind == Tok::Int) return parse_signed_int(lx, false);
    return std::nullopt;
  };
  switch (op.kind) {
    case Tok::Plus: {
      if (looks_like_reg(lx.peek())) return expr_rr(ExprOp::AddRR, a, parse_reg(lx));
      auto imm = rhs_imm();
      if (!imm) lx.fail("expected register or integer");
      return expr_ri(ExprOp::AddRI, a, *imm);
    }
    case Tok::Minus:
      if (!looks_like_reg(lx.peek())) lx.fail("expected register");
      return expr_rr(ExprOp::SubRR, a, parse_reg(lx));
    case Tok::Star: {
      if (looks_like_reg(lx.peek())) return expr_rr(ExprOp::MulRR, a, parse_reg(lx));
      auto imm = rhs_imm();
      if (!imm) lx.fail("expected register or integer");
      return expr_ri(ExprOp::MulRI, a, *imm);
    }
    case Tok::Eq: {
      if (looks_like_reg(lx.peek())) return expr_rr(ExprOp::EqRR, a, parse_reg(lx));
      Token z = lx.expect(Tok::Int, "register or 0");
      if (z.num != 0) lx.fail("only 'r = 0' immediate comparison exists", z.col);
      return expr_eqz(a);
    }
    case Tok::Lt:
      if (!looks_like_reg(lx.peek())) lx.fail("expected register");
      return expr_rr(ExprOp::LtRR, a, parse_reg(lx));
    case Tok::Percent:
      if (!looks_like_reg(lx.peek())) lx.fail("expected register");
      return expr_rr(ExprOp::ModRR, a, parse_reg(lx));
    default:
      lx.fail("expected operator", op.col);
  }
}

std::vector<VarMapEntry> parse_varmap(LineLexer& lx) {
  std::vector<VarMapEntry> entries;
  lx.expect(Tok::LBracket, "'['");
  if (lx.peek().kind == Tok::RBracket) {
    lx.take();
    return entries;
  }
  while (true) {
    RegId dst = parse_reg(lx);
    lx.expect(Tok::Arrow, "'<-'");
    entries.push_back({dst, parse_expr(lx)});
    if (lx.peek().kind == Tok::Comma) {
      lx.take();
      continue;
    }
    lx.expect(Tok::RBracket, "']'");
    return entries;
  }
}

Instr parse_instr(LineLexer& lx) {
  const Token& t = lx.peek();
  if (t.kind == Tok::Ident && !looks_like_reg(t)) {
    if (t.text == "Nop") {
      lx.take();
      return NopInstr{parse_label(lx)};
    }
    if (t.text == "Cond") {
      lx.take();
      RegId g = parse_reg(lx);
      LabelId lt = parse_label(lx);
      LabelId lf = parse_label(lx);
      return CondInstr{g, lt, lf};
    }
    if (t.text == "Print") {
      lx.take();
      RegId r = parse_reg(lx);
      return PrintInstr{r, parse_label(lx)};
    }
    if (t.text == "Return") {
      lx.take();
      return ReturnInstr{parse_reg(lx)};
    }
    if (t.text == "Assume") {
      lx.take();
      RegId g = parse_reg(lx);
      Token name = lx.expect(Tok::Ident, "function name");
      if (is_reserved(name.text)) lx.fail("reserved word used as function name", name.col);
      lx.expect(Tok::Dot, "'.'");
      LabelId target = parse_label(lx);
      auto varmap = parse_varmap(lx);
      LabelId next = parse_label(lx);
      return AssumeInstr{g, name.text, target, std::move(varmap), next};
    }
    lx.fail("unknown instruction '" + t.text + "'");
  }
  RegId dst = parse_reg(lx);
  lx.expect(Tok::Arrow, "'<-'");
  const Token& head = lx.peek();
  if (head.kind == Tok::Ident && head.text == "Call") {
    lx.take();
    Token name = lx.expect(Tok::Ident, "function name");
    if (is_reserved(name.text)) lx.fail("reserved word used as function name", name.col);
    lx.expect(Tok::LParen, "'('");
    std::vector<RegId> args;
    if (lx.peek().kind != Tok::RParen) {
      while (true) {
        args.push_back(parse_reg(lx));
        if (lx.peek().kind == Tok::Comma) {
          lx.take();
          continue;
        }
        break;
      }
    }
    lx.expect(Tok::RParen, "')'");
    return CallInstr{dst, name.text, std::move(args), parse_label(lx)};
  }
  if (head.kind == Tok::Ident && head.text == "MemGet") {
    lx.take();
    RegId addr = parse_reg(lx);
    return MemGetInstr{dst, addr, parse_label(lx)};
  }
  if (head.kind == Tok::Ident && head.text == "MemSet") {
    lx.take();
    RegId src = parse_reg(lx);
    return MemSetInstr{dst, src, parse_label(lx)};
  }
  Expr e = parse_expr(lx);
  return AssignInstr{dst, e, parse_label(lx)};
}

}  // namespace

Program parse_program(std::string_view text) {
  Program p;
  Function* fun = nullptr;
  Version* version = nullptr;
  bool any_content = false;

  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

    LineLexer lx(line, line_no);
    if (lx.peek().kind == Tok::End) continue;
    any_content = true;

    if (lx.peek().kind == Tok::Ident && lx.peek().text == "Function") {
      lx.take();
      Token name = lx.expect(Tok::Ident, "function name");
      if (is_reserved(name.text)) lx.fail("reserved word used as function name", name.col);
      lx.expect(Tok::LParen, "'('");
      std::vector<RegId> params;
      if (lx.peek().kind != Tok::RParen) {
        while (true) {
          params.push_back(parse_reg(lx));
          if (lx.peek().kind == Tok::Comma) {
            lx.take();
            continue;
          }
          break;
        }
      }
      lx.expect(Tok::RParen, "')'");
      lx.expect(Tok::Colon, "':'");
      lx.expect_end();
      if (fun && version && version->code.empty())
        throw ParseError(line_no, 1, "empty version in function '" + fun->name + "'");
      for (const Function& f : p.functions)
        if (f.name == name.text)
          lx.fail("duplicate function name '" + name.text + "'", name.col);
      p.functions.push_back(Function{name.text, std::move(params), {}, {}});
      fun = &p.functions.back();
      version = &fun->base;
      continue;
    }

    if (lx.peek().kind == Tok::Ident && lx.peek().text == "version") {
      lx.take();
      lx.expect_end();
      if (!fun) throw ParseError(line_no, 1, "'version' outside a function");
      if (fun->opt) throw ParseError(line_no, 1, "function '" + fun->name +
                                                     "' already has two versions");
      if (fun->base.code.empty())
        throw ParseError(line_no, 1, "empty version in function '" + fun->name + "'");
      fun->opt.emplace();
      version = &*fun->opt;
      continue;
    }

    if (!fun) throw ParseError(line_no, 1, "instruction outside a function");
    LabelId label = parse_label(lx);
    lx.expect(Tok::Colon, "':'");
    Instr ins = parse_instr(lx);
    lx.expect_end();
    if (!version->code.emplace(label, std::move(ins)).second)
      throw ParseError(line_no, 1, "duplicate label l" + std::to_string(label) +
                                       " in function '" + fun->name + "'");
    if (version->entry == 0) version->entry = label;
  }

  if (!any_content) throw ParseError(line_no, 1, "empty input");
  if (!fun) throw ParseError(line_no, 1, "expected a function");
  if (version && version->code.empty())
    throw ParseError(line_no, 1, "empty version in function '" + fun->name + "'");
  p.rebuild_index();
  return p;
}

namespace {

std::string reg_str(RegId r) { return "r" + std::to_string(r); }
std::string label_str(LabelId l) { return "l" + std::to_string(l); }

void print_version(std::ostringstream& out, const Version& v) {
  auto line = [&](LabelId l) {
    out << label_str(l) << ": " << pretty_print(v.code.at(l)) << '\n';
  };
  line(v.entry);
  for (const auto& [l, ins] : v.code) {
    (void)ins;
    if (l != v.entry) line(l);
  }
}

}  // namespace

std::string pretty_print(const Expr& e) {
  switch (e.op) {
    case ExprOp::AddRR: return reg_str(e.a) + " + " + reg_str(e.b);
    case ExprOp::SubRR: return reg_str(e.a) + " - " + reg_str(e.b);
    case ExprOp::MulRR: return reg_str(e.a) + " * " + reg_str(e.b);
    case ExprOp::EqRR: return reg_str(e.a) + " = " + reg_str(e.b);
    case ExprOp::LtRR: return reg_str(e.a) + " < " + reg_str(e.b);
    case ExprOp::ModRR: return reg_str(e.a) + " % " + reg_str(e.b);
    case ExprOp::NegR: return "- " + reg_str(e.a);
    case ExprOp::ConstV: return std::to_string(e.imm);
    case ExprOp::EqZero: return reg_str(e.a) + " = 0";
    case ExprOp::AddRI: return reg_str(e.a) + " + " + std::to_string(e.imm);
    case ExprOp::MulRI: return reg_str(e.a) + " * " + std::to_string(e.imm);
  }
  return "?";
}

std::string pretty_print(const Instr& ins) {
  return std::visit(
      [](const auto& i) -> std::string {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, NopInstr>) {
          return "Nop " + label_str(i.next);
        } else if constexpr (std::is_same_v<T, AssignInstr>) {
          return reg_str(i.dst) + " <- " + pretty_print(i.expr) + " " + label_str(i.next);
        } else if constexpr (std::is_same_v<T, CondInstr>) {
          return "Cond " + reg_str(i.guard) + " " + label_str(i.if_true) + " " +
                 label_str(i.if_false);
        } else if constexpr (std::is_same_v<T, PrintInstr>) {
          return "Print " + reg_str(i.src) + " " + label_str(i.next);
        } else if constexpr (std::is_same_v<T, CallInstr>) {
          std::string s = reg_str(i.dst) + " <- Call " + i.callee + "(";
          for (std::size_t k = 0; k < i.args.size(); ++k) {
            if (k) s += ", ";
            s += reg_str(i.args[k]);
          }
          return s + ") " + label_str(i.next);
        } else if constexpr (std::is_same_v<T, ReturnInstr>) {
          return "Return " + reg_str(i.src);
        } else if constexpr (std::is_same_v<T, MemGetInstr>) {
          return reg_str(i.dst) + " <- MemGet " + reg_str(i.addr) + " " + label_str(i.next);
        } else if constexpr (std::is_same_v<T, MemSetInstr>) {
          return reg_str(i.addr) + " <- MemSet " + reg_str(i.src) + " " + label_str(i.next);
        } else {
          std::string s = "Assume " + reg_str(i.guard) + " " + i.target + "." +
                          label_str(i.target_label) + " [";
          for (std::size_t k = 0; k < i.varmap.size(); ++k) {
            if (k) s += ", ";
            s += reg_str(i.varmap[k].dst) + " <- " + pretty_print(i.varmap[k].expr);
          }
          return s + "] " + label_str(i.next);
        }
      },
      ins);
}

std::string pretty_print(const Program& p) {
  std::ostringstream out;
  bool first = true;
  for (const Function& f : p.functions) {
    if (!first) out << '\n';
    first = false;
    out << "Function " << f.name << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i) out << ", ";
      out << reg_str(f.params[i]);
    }
    out << "):\n";
    print_version(out, f.base);
    if (f.opt) {
      out << "version\n";
      print_version(out, *f.opt);
    }
  }
  return out.str();
}

}  // namespace tjit

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace tjit {

using Value = std::int64_t;
using RegId = std::uint32_t;    // positive
using LabelId = std::uint32_t;  // positive
using FunIdx = std::uint32_t;   // positive, assigned in declaration order
using FunName = std::string;

using RegMap = std::unordered_map<RegId, Value>;

// A goes-wrong event. Thrown by expression evaluation, runtime primitives and
// the execution tiers; run loops catch it and report an Errored behavior.
class EngineError : public std::runtime_error {
 public:
  explicit EngineError(const std::string& msg) : std::runtime_error(msg) {}
};

// Expressions are shared between CoreIR instructions and RTL operations; in
// RTL the register operands are virtual registers.
enum class ExprOp : std::uint8_t {
  AddRR,   // a + b
  SubRR,   // a - b
  MulRR,   // a * b
  EqRR,    // a = b, yields 0/1
  LtRR,    // a < b (signed), yields 0/1
  ModRR,   // a % b, errors on zero divisor
  NegR,    // - a
  ConstV,  // imm
  EqZero,  // a = 0, yields 0/1
  AddRI,   // a + imm
  MulRI,   // a * imm
};

struct Expr {
  ExprOp op{ExprOp::ConstV};
  RegId a{0};
  RegId b{0};
  Value imm{0};
  friend bool operator==(const Expr&, const Expr&) = default;
};

inline Expr expr_rr(ExprOp op, RegId a, RegId b) { return Expr{op, a, b, 0}; }
inline Expr expr_ri(ExprOp op, RegId a, Value imm) { return Expr{op, a, 0, imm}; }
inline Expr expr_neg(RegId a) { return Expr{ExprOp::NegR, a, 0, 0}; }
inline Expr expr_const(Value v) { return Expr{ExprOp::ConstV, 0, 0, v}; }
inline Expr expr_eqz(RegId a) { return Expr{ExprOp::EqZero, a, 0, 0}; }

struct NopInstr {
  LabelId next;
  friend bool operator==(const NopInstr&, const NopInstr&) = default;
};

struct AssignInstr {
  RegId dst;
  Expr expr;
  LabelId next;
  friend bool operator==(const AssignInstr&, const AssignInstr&) = default;
};

struct CondInstr {
  RegId guard;  // nonzero takes if_true
  LabelId if_true;
  LabelId if_false;
  friend bool operator==(const CondInstr&, const CondInstr&) = default;
};

struct PrintInstr {
  RegId src;
  LabelId next;
  friend bool operator==(const PrintInstr&, const PrintInstr&) = default;
};

struct CallInstr {
  RegId dst;
  FunName callee;
  std::vector<RegId> args;
  LabelId next;
  friend bool operator==(const CallInstr&, const CallInstr&) = default;
};

struct ReturnInstr {
  RegId src;
  friend bool operator==(const ReturnInstr&, const ReturnInstr&) = default;
};

struct MemGetInstr {
  RegId dst;
  RegId addr;
  LabelId next;
  friend bool operator==(const MemGetInstr&, const MemGetInstr&) = default;
};

struct MemSetInstr {
  RegId addr;  // written as "rADDR <- MemSet rSRC l"
  RegId src;
  LabelId next;
  friend bool operator==(const MemSetInstr&, const MemSetInstr&) = default;
};

struct VarMapEntry {
  RegId dst;
  Expr expr;
  friend bool operator==(const VarMapEntry&, const VarMapEntry&) = default;
};

// Speculation guard. A zero guard deoptimizes into the base version of
// `target` at `target_label`; the varmap builds the register environment of
// the deoptimized frame (every expression evaluated in the current one).
struct AssumeInstr {
  RegId guard;
  FunName target;
  LabelId target_label;
  std::vector<VarMapEntry> varmap;
  LabelId next;
  friend bool operator==(const AssumeInstr&, const AssumeInstr&) = default;
};

using Instr = std::variant<NopInstr, AssignInstr, CondInstr, PrintInstr,
                           CallInstr, ReturnInstr, MemGetInstr, MemSetInstr,
                           AssumeInstr>;

enum class VersionTag : std::uint8_t { Base, Opt };

struct Version {
  LabelId entry{0};
  std::map<LabelId, Instr> code;
  friend bool operator==(const Version&, const Version&) = default;
};

struct Function {
  FunName name;
  std::vector<RegId> params;
  Version base;
  std::optional<Version> opt;  // speculation-carrying version, if any
  friend bool operator==(const Function&, const Function&) = default;
};

struct Program {
  std::vector<Function> functions;  // declaration order; FunIdx = index + 1
  std::unordered_map<FunName, FunIdx> fun_index;

  void rebuild_index() {
    fun_index.clear();
    for (std::size_t i = 0; i < functions.size(); ++i)
      fun_index.emplace(functions[i].name, static_cast<FunIdx>(i + 1));
  }

  const Function* find(const FunName& name) const {
    auto it = fun_index.find(name);
    return it == fun_index.end() ? nullptr : &functions[it->second - 1];
  }

  const Function* by_idx(FunIdx idx) const {
    if (idx < 1 || idx > functions.size()) return nullptr;
    return &functions[idx - 1];
  }

  std::optional<FunIdx> idx_of(const FunName& name) const {
    auto it = fun_index.find(name);
    if (it == fun_index.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const Program& x, const Program& y) {
    return x.functions == y.functions;
  }
};

// The most optimized version: the one calls dispatch to.
inline const Version& current_version(const Function& f) {
  return f.opt ? *f.opt : f.base;
}

inline VersionTag current_tag(const Function& f) {
  return f.opt ? VersionTag::Opt : VersionTag::Base;
}

inline const Version& version_of(const Function& f, VersionTag tag) {
  return (tag == VersionTag::Opt && f.opt) ? *f.opt : f.base;
}

// 64-bit wrapping arithmetic.
inline Value wrap_add(Value x, Value y) {
  return static_cast<Value>(static_cast<std::uint64_t>(x) +
                            static_cast<std::uint64_t>(y));
}
inline Value wrap_sub(Value x, Value y) {
  return static_cast<Value>(static_cast<std::uint64_t>(x) -
                            static_cast<std::uint64_t>(y));
}
inline Value wrap_mul(Value x, Value y) {
  return static_cast<Value>(static_cast<std::uint64_t>(x) *
                            static_cast<std::uint64_t>(y));
}
inline Value wrap_neg(Value x) {
  return static_cast<Value>(-static_cast<std::uint64_t>(x));
}

// Signed remainder. A -1 divisor always leaves remainder 0, which also keeps
// INT64_MIN % -1 well defined.
inline Value checked_mod(Value x, Value y) {
  if (y == 0) throw EngineError("modulo by zero");
  if (y == -1) return 0;
  return x % y;
}

template <class GetReg>
Value eval_expr_with(GetReg&& reg, const Expr& e) {
  switch (e.op) {
    case ExprOp::AddRR: return wrap_add(reg(e.a), reg(e.b));
    case ExprOp::SubRR: return wrap_sub(reg(e.a), reg(e.b));
    case ExprOp::MulRR: return wrap_mul(reg(e.a), reg(e.b));
    case ExprOp::EqRR: return reg(e.a) == reg(e.b) ? 1 : 0;
    case ExprOp::LtRR: return reg(e.a) < reg(e.b) ? 1 : 0;
    case ExprOp::ModRR: return checked_mod(reg(e.a), reg(e.b));
    case ExprOp::NegR: return wrap_neg(reg(e.a));
    case ExprOp::ConstV: return e.imm;
    case ExprOp::EqZero: return reg(e.a) == 0 ? 1 : 0;
    case ExprOp::AddRI: return wrap_add(reg(e.a), e.imm);
    case ExprOp::MulRI: return wrap_mul(reg(e.a), e.imm);
  }
  throw EngineError("invalid expression");
}

template <class Map>
Value lookup_reg(const Map& env, RegId r) {
  auto it = env.find(r);
  if (it == env.end())
    throw EngineError("unbound register r" + std::to_string(r));
  return it->second;
}

inline Value eval_expr(const RegMap& env, const Expr& e) {
  return eval_expr_with([&](RegId r) { return lookup_reg(env, r); }, e);
}

}  // namespace tjit

#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "tjit/coreir.hpp"

namespace tjit {

// Status codes a compiled unit returns to the monitor.
inline constexpr Value RETRET = 0;    // function finished, value on stack
inline constexpr Value RETCALL = 1;   // wants to call, payload on stack
inline constexpr Value RETDEOPT = 2;  // deoptimizes, payload on stack

// The runtime primitives callable from compiled code.
enum class Prim : std::uint8_t { Pop, Push, HeapGet, HeapSet, Print };

const char* prim_name(Prim p);

// A primitive argument: a virtual register or an immediate. Immediates keep
// constant pushes (function indices, labels, arg counts) to one instruction.
struct Operand {
  bool is_imm = false;
  RegId reg = 0;
  Value imm = 0;
  friend bool operator==(const Operand&, const Operand&) = default;
};

inline Operand opr(RegId r) { return Operand{false, r, 0}; }
inline Operand opi(Value v) { return Operand{true, 0, v}; }

// Virtual registers are locals of a unit; units reference each other only
// through stack contents.
struct RtlOp {
  RegId dst = 0;
  Expr expr;  // register fields name vregs
  LabelId next = 0;
  friend bool operator==(const RtlOp&, const RtlOp&) = default;
};

struct RtlGoto {
  LabelId next = 0;
  friend bool operator==(const RtlGoto&, const RtlGoto&) = default;
};

struct RtlBranch {
  RegId guard = 0;  // nonzero takes if_true
  LabelId if_true = 0;
  LabelId if_false = 0;
  friend bool operator==(const RtlBranch&, const RtlBranch&) = default;
};

struct RtlCallPrim {
  RegId dst = 0;  // 0 discards the result
  Prim prim = Prim::Pop;
  std::vector<Operand> args;
  LabelId next = 0;
  friend bool operator==(const RtlCallPrim&, const RtlCallPrim&) = default;
};

struct RtlReturnStatus {
  Value code = RETRET;
  friend bool operator==(const RtlReturnStatus&, const RtlReturnStatus&) = default;
};

using RTLInstr =
    std::variant<RtlOp, RtlGoto, RtlBranch, RtlCallPrim, RtlReturnStatus>;

// Flat form executed by the RTL VM: labels are dense, label k is code[k-1].
struct RTLUnit {
  LabelId entry = 1;
  std::vector<RTLInstr> code;
  RegId vreg_count = 0;  // size of the vreg file; every vreg < vreg_count
  friend bool operator==(const RTLUnit&, const RTLUnit&) = default;
};

// Basic-block form produced by lowering. Body instructions are straight-line
// (their `next` fields are unused until flattening); the terminator is a
// Goto, Branch or ReturnStatus whose targets name block ids.
struct RtlBlock {
  std::vector<RTLInstr> body;
  RTLInstr term = RtlReturnStatus{RETRET};
  friend bool operator==(const RtlBlock&, const RtlBlock&) = default;
};

struct RTLBlockUnit {
  LabelId entry_block = 0;
  std::map<LabelId, RtlBlock> blocks;
  RegId vreg_count = 0;
  friend bool operator==(const RTLBlockUnit&, const RTLBlockUnit&) = default;
};

std::string status_name(Value code);
std::string to_string(const Operand& o);
std::string to_string(const RTLInstr& ins);

// Stable text forms; `l<k>:` per line, explicit `-> l<j>` on non-fallthrough.
std::string dump_rtl(const RTLUnit& u);
std::string dump_blocks(const RTLBlockUnit& u);

}  // namespace tjit

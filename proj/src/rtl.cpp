#include "tjit/rtl.hpp"

#include <sstream>

namespace tjit {
namespace {

std::string vreg(RegId r) { return "x" + std::to_string(r); }

std::string expr_text(const Expr& e) {
  switch (e.op) {
    case ExprOp::AddRR: return vreg(e.a) + " + " + vreg(e.b);
    case ExprOp::SubRR: return vreg(e.a) + " - " + vreg(e.b);
    case ExprOp::MulRR: return vreg(e.a) + " * " + vreg(e.b);
    case ExprOp::EqRR: return vreg(e.a) + " = " + vreg(e.b);
    case ExprOp::LtRR: return vreg(e.a) + " < " + vreg(e.b);
    case ExprOp::ModRR: return vreg(e.a) + " % " + vreg(e.b);
    case ExprOp::NegR: return "- " + vreg(e.a);
    case ExprOp::ConstV: return std::to_string(e.imm);
    case ExprOp::EqZero: return vreg(e.a) + " = 0";
    case ExprOp::AddRI: return vreg(e.a) + " + " + std::to_string(e.imm);
    case ExprOp::MulRI: return vreg(e.a) + " * " + std::to_string(e.imm);
  }
  return "?";
}

}  // namespace

const char* prim_name(Prim p) {
  switch (p) {
    case Prim::Pop: return "Pop";
    case Prim::Push: return "Push";
    case Prim::HeapGet: return "HeapGet";
    case Prim::HeapSet: return "HeapSet";
    case Prim::Print: return "Print";
  }
  return "?";
}

std::string status_name(Value code) {
  if (code == RETRET) return "RETRET";
  if (code == RETCALL) return "RETCALL";
  if (code == RETDEOPT) return "RETDEOPT";
  return std::to_string(code);
}

std::string to_string(const Operand& o) {
  return o.is_imm ? std::to_string(o.imm) : vreg(o.reg);
}

std::string to_string(const RTLInstr& ins) {
  return std::visit(
      [](const auto& i) -> std::string {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, RtlOp>) {
          return vreg(i.dst) + " = " + expr_text(i.expr);
        } else if constexpr (std::is_same_v<T, RtlGoto>) {
          return "goto l" + std::to_string(i.next);
        } else if constexpr (std::is_same_v<T, RtlBranch>) {
          return "branch " + vreg(i.guard) + " ? l" + std::to_string(i.if_true) +
                 " : l" + std::to_string(i.if_false);
        } else if constexpr (std::is_same_v<T, RtlCallPrim>) {
          std::string s = (i.dst == 0 ? "_" : vreg(i.dst)) + std::string(" = \"") +
                          prim_name(i.prim) + "\"(";
          for (std::size_t k = 0; k < i.args.size(); ++k) {
            if (k) s += ", ";
            s += to_string(i.args[k]);
          }
          return s + ")";
        } else {
          return "return " + status_name(i.code);
        }
      },
      ins);
}

namespace {

// Appends `-> l<next>` when control does not fall through to `fallthrough`.
std::string flow_suffix(const RTLInstr& ins, LabelId fallthrough) {
  LabelId next = 0;
  if (const auto* op = std::get_if<RtlOp>(&ins)) next = op->next;
  else if (const auto* cp = std::get_if<RtlCallPrim>(&ins)) next = cp->next;
  else return "";
  if (next == fallthrough) return "";
  return " -> l" + std::to_string(next);
}

}  // namespace

std::string dump_rtl(const RTLUnit& u) {
  std::ostringstream out;
  for (std::size_t k = 0; k < u.code.size(); ++k) {
    LabelId l = static_cast<LabelId>(k + 1);
    out << "  l" << l << ": " << to_string(u.code[k])
        << flow_suffix(u.code[k], l + 1) << "\n";
  }
  return out.str();
}

std::string dump_blocks(const RTLBlockUnit& u) {
  std::ostringstream out;
  for (const auto& [id, b] : u.blocks) {
    out << "  block " << id << (id == u.entry_block ? " (entry)" : "") << ":\n";
    for (const RTLInstr& ins : b.body) out << "    " << to_string(ins) << "\n";
    out << "    " << to_string(b.term) << "\n";
  }
  return out.str();
}

}  // namespace tjit

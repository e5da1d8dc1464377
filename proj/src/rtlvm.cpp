#include "tjit/rtlvm.hpp"

namespace tjit {
namespace {

Value vreg_read(const RTLState& s, RegId r) {
  if (r >= s.vregs.size()) throw EngineError("invalid vreg x" + std::to_string(r));
  return s.vregs[r];
}

void vreg_write(RTLState& s, RegId r, Value v) {
  if (r >= s.vregs.size()) throw EngineError("invalid vreg x" + std::to_string(r));
  s.vregs[r] = v;
}

Value operand_value(const RTLState& s, const Operand& o) {
  return o.is_imm ? o.imm : vreg_read(s, o.reg);
}

const RTLInstr& instr_at(const RTLState& s) {
  if (s.label < 1 || s.label > s.unit->code.size())
    throw EngineError("invalid rtl label l" + std::to_string(s.label));
  return s.unit->code[s.label - 1];
}

}  // namespace

RTLState rtl_start(const RTLUnit& u) {
  if (u.entry < 1 || u.entry > u.code.size())
    throw EngineError("invalid rtl label l" + std::to_string(u.entry));
  return RTLState{&u, u.entry, std::vector<Value>(u.vreg_count, 0)};
}

std::optional<Value> rtl_step(RTLState& s, Runtime& rt) {
  const RTLInstr& ins = instr_at(s);
  return std::visit(
      [&](const auto& i) -> std::optional<Value> {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, RtlOp>) {
          Value v = eval_expr_with([&](RegId r) { return vreg_read(s, r); },
                                   i.expr);
          vreg_write(s, i.dst, v);
          s.label = i.next;
        } else if constexpr (std::is_same_v<T, RtlGoto>) {
          s.label = i.next;
        } else if constexpr (std::is_same_v<T, RtlBranch>) {
          s.label = vreg_read(s, i.guard) != 0 ? i.if_true : i.if_false;
        } else if constexpr (std::is_same_v<T, RtlCallPrim>) {
          auto arg = [&](std::size_t k) { return operand_value(s, i.args[k]); };
          auto want = [&](std::size_t n) {
            if (i.args.size() != n)
              throw EngineError("invalid primitive call");
          };
          Value result = 0;
          switch (i.prim) {
            case Prim::Pop: want(0); result = rt.stk_pop(); break;
            case Prim::Push: want(1); rt.stk_push(arg(0)); break;
            case Prim::HeapGet: want(1); result = rt.heap_get(arg(0)); break;
            case Prim::HeapSet: {
              want(2);
              Value addr = arg(0);
              Value v = arg(1);
              rt.heap_set(addr, v);
              break;
            }
            case Prim::Print: want(1); rt.print_val(arg(0)); break;
          }
          if (i.dst != 0) vreg_write(s, i.dst, result);
          s.label = i.next;
        } else {  // RtlReturnStatus
          return i.code;
        }
        return std::nullopt;
      },
      ins);
}

// The unit-at-a-time entry point the engine uses. Same observable behavior
// as stepping with rtl_step, but with a flat dispatch loop and a per-thread
// scratch register file; primitives never call back into the VM, so reusing
// the scratch across invocations is safe.
ExecResult rtl_run(const RTLUnit& u, Runtime& rt, std::uint64_t step_cap) {
  if (u.entry < 1 || u.entry > u.code.size())
    throw EngineError("invalid rtl label l" + std::to_string(u.entry));

  static thread_local std::vector<Value> scratch;
  scratch.assign(u.vreg_count, 0);
  Value* const vregs = scratch.data();
  const std::size_t nregs = u.vreg_count;
  const RTLInstr* const code = u.code.data();
  const std::size_t nlabels = u.code.size();

  auto read = [&](RegId r) -> Value {
    if (r >= nregs) throw EngineError("invalid vreg x" + std::to_string(r));
    return vregs[r];
  };
  auto operand = [&](const Operand& o) {
    return o.is_imm ? o.imm : read(o.reg);
  };

  LabelId label = u.entry;
  for (std::uint64_t n = 0; n < step_cap; ++n) {
    if (label < 1 || label > nlabels)
      throw EngineError("invalid rtl label l" + std::to_string(label));
    const RTLInstr& ins = code[label - 1];
    if (const auto* op = std::get_if<RtlOp>(&ins)) {
      Value v = eval_expr_with(read, op->expr);
      if (op->dst >= nregs)
        throw EngineError("invalid vreg x" + std::to_string(op->dst));
      vregs[op->dst] = v;
      label = op->next;
    } else if (const auto* br = std::get_if<RtlBranch>(&ins)) {
      label = read(br->guard) != 0 ? br->if_true : br->if_false;
    } else if (const auto* go = std::get_if<RtlGoto>(&ins)) {
      label = go->next;
    } else if (const auto* cp = std::get_if<RtlCallPrim>(&ins)) {
      auto want = [&](std::size_t n_args) {
        if (cp->args.size() != n_args)
          throw EngineError("invalid primitive call");
      };
      Value result = 0;
      switch (cp->prim) {
        case Prim::Pop: want(0); result = rt.stk_pop(); break;
        case Prim::Push: want(1); rt.stk_push(operand(cp->args[0])); break;
        case Prim::HeapGet:
          want(1);
          result = rt.heap_get(operand(cp->args[0]));
          break;
        case Prim::HeapSet: {
          want(2);
          Value addr = operand(cp->args[0]);
          Value v = operand(cp->args[1]);
          rt.heap_set(addr, v);
          break;
        }
        case Prim::Print: want(1); rt.print_val(operand(cp->args[0])); break;
      }
      if (cp->dst != 0) {
        if (cp->dst >= nregs)
          throw EngineError("invalid vreg x" + std::to_string(cp->dst));
        vregs[cp->dst] = result;
      }
      label = cp->next;
    } else {
      return ExecResult{false, std::get<RtlReturnStatus>(ins).code};
    }
  }
  return ExecResult{true, 0};
}

}  // namespace tjit

#pragma once

#include <string>
#include <vector>

#include "tjit/rtl.hpp"
#include "tjit/rtlvm.hpp"
#include "tjit/runtime.hpp"

namespace testsupport {

// Executes the basic-block form directly: an independent oracle for
// flatten() + rtl_run. It walks blocks and ignores the instruction-level
// `next` fields entirely, so it shares no label arithmetic with the VM.
// Step counting differs from the flat form (gotos may be elided there);
// callers compare statuses and runtime effects, not step counts.
inline tjit::ExecResult run_blocks(const tjit::RTLBlockUnit& u,
                                   tjit::Runtime& rt,
                                   std::uint64_t step_cap) {
  using namespace tjit;

  std::vector<Value> vregs(u.vreg_count, 0);
  auto read = [&](RegId r) -> Value {
    if (r >= vregs.size())
      throw EngineError("invalid vreg x" + std::to_string(r));
    return vregs[r];
  };
  auto write = [&](RegId r, Value v) {
    if (r >= vregs.size())
      throw EngineError("invalid vreg x" + std::to_string(r));
    vregs[r] = v;
  };
  auto operand = [&](const Operand& o) {
    return o.is_imm ? o.imm : read(o.reg);
  };

  auto run_prim = [&](const RtlCallPrim& cp) {
    auto want = [&](std::size_t n) {
      if (cp.args.size() != n) throw EngineError("invalid primitive call");
    };
    Value result = 0;
    switch (cp.prim) {
      case Prim::Pop: want(0); result = rt.stk_pop(); break;
      case Prim::Push: want(1); rt.stk_push(operand(cp.args[0])); break;
      case Prim::HeapGet: want(1); result = rt.heap_get(operand(cp.args[0])); break;
      case Prim::HeapSet: {
        want(2);
        Value addr = operand(cp.args[0]);
        Value v = operand(cp.args[1]);
        rt.heap_set(addr, v);
        break;
      }
      case Prim::Print: want(1); rt.print_val(operand(cp.args[0])); break;
    }
    if (cp.dst != 0) write(cp.dst, result);
  };

  std::uint64_t steps = 0;
  LabelId block = u.entry_block;
  for (;;) {
    auto it = u.blocks.find(block);
    if (it == u.blocks.end()) throw EngineError("undefined block " + std::to_string(block));
    const RtlBlock& b = it->second;
    for (const RTLInstr& ins : b.body) {
      if (steps++ >= step_cap) return tjit::ExecResult{true, 0};
      if (const auto* op = std::get_if<RtlOp>(&ins)) {
        write(op->dst, eval_expr_with(read, op->expr));
      } else if (const auto* cp = std::get_if<RtlCallPrim>(&ins)) {
        run_prim(*cp);
      } else {
        throw EngineError("invalid block body");
      }
    }
    if (steps++ >= step_cap) return tjit::ExecResult{true, 0};
    if (const auto* go = std::get_if<RtlGoto>(&b.term)) {
      block = go->next;
    } else if (const auto* br = std::get_if<RtlBranch>(&b.term)) {
      block = read(br->guard) != 0 ? br->if_true : br->if_false;
    } else if (const auto* rs = std::get_if<RtlReturnStatus>(&b.term)) {
      return tjit::ExecResult{false, rs->code};
    } else {
      throw EngineError("invalid block body");
    }
  }
}

}  // namespace testsupport

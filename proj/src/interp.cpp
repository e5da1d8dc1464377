#include "tjit/interp.hpp"

#include <optional>
#include <type_traits>

namespace tjit {

InterpOutcome interp_slice(const Program& p, const FunName& fun, VersionTag tag,
                           LabelId label, RegMap regs, std::uint64_t fuel,
                           Runtime& rt) {
  const Function* f = p.find(fun);
  if (!f) throw EngineError("unknown function '" + fun + "'");
  const Version& ver = version_of(*f, tag);

  auto reg = [&](RegId r) { return lookup_reg(regs, r); };

  while (fuel > 0) {
    --fuel;
    auto it = ver.code.find(label);
    if (it == ver.code.end())
      throw EngineError("undefined label l" + std::to_string(label) + " in '" +
                        fun + "'");

    std::optional<InterpOutcome> out = std::visit(
        [&](const auto& i) -> std::optional<InterpOutcome> {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, NopInstr>) {
            label = i.next;
          } else if constexpr (std::is_same_v<T, AssignInstr>) {
            Value v = eval_expr_with(reg, i.expr);
            regs[i.dst] = v;
            label = i.next;
          } else if constexpr (std::is_same_v<T, CondInstr>) {
            label = reg(i.guard) != 0 ? i.if_true : i.if_false;
          } else if constexpr (std::is_same_v<T, PrintInstr>) {
            rt.print_val(reg(i.src));
            label = i.next;
          } else if constexpr (std::is_same_v<T, CallInstr>) {
            // Callee resolution and arity are the monitor's business; the
            // slice only gathers argument values and parks itself.
            std::vector<Value> args;
            args.reserve(i.args.size());
            for (RegId r : i.args) args.push_back(reg(r));
            // Park this activation before synchronizing; it resumes at the
            // instruction after the call once the callee returns.
            rt.push_irsf(IRFrame{i.dst, fun, tag, i.next, regs});
            return SyncCall{i.callee, std::move(args)};
          } else if constexpr (std::is_same_v<T, ReturnInstr>) {
            return SyncReturn{reg(i.src)};
          } else if constexpr (std::is_same_v<T, MemGetInstr>) {
            Value v = rt.heap_get(reg(i.addr));
            regs[i.dst] = v;
            label = i.next;
          } else if constexpr (std::is_same_v<T, MemSetInstr>) {
            Value addr = reg(i.addr);
            Value v = reg(i.src);
            rt.heap_set(addr, v);
            label = i.next;
          } else {  // AssumeInstr
            if (reg(i.guard) != 0) {
              label = i.next;
            } else {
              RegMap deopt_regs;
              for (const VarMapEntry& e : i.varmap)
                deopt_regs[e.dst] = eval_expr_with(reg, e.expr);
              return SyncDeopt{i.target, i.target_label,
                               std::move(deopt_regs)};
            }
          }
          return std::nullopt;
        },
        it->second);
    if (out) return std::move(*out);
  }
  return OutOfFuel{fun, tag, label, std::move(regs)};
}

}  // namespace tjit

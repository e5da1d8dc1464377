#include "tjit/refsem.hpp"

namespace tjit {
namespace {

Value reg_of(const RefFrame& f, RegId r) { return lookup_reg(f.regs, r); }

const Instr& instr_at(const Program& p, const RefFrame& f) {
  const Function* fun = p.find(f.fun);
  if (!fun) throw EngineError("unknown function '" + f.fun + "'");
  const Version& v = version_of(*fun, f.tag);
  auto it = v.code.find(f.label);
  if (it == v.code.end())
    throw EngineError("undefined label l" + std::to_string(f.label) + " in '" +
                      f.fun + "'");
  return it->second;
}

}  // namespace

RefState ref_init(const Program& p, std::size_t heap_size) {
  const Function* main = p.find("main");
  if (!main) throw EngineError("unknown function 'main'");
  RefState s;
  s.heap.assign(heap_size, 0);
  const Version& v = current_version(*main);
  s.frames.push_back(RefFrame{"main", current_tag(*main), v.entry, {}, 0});
  return s;
}

std::optional<Value> ref_step(const Program& p, RefState& s) {
  RefFrame& f = s.frames.back();
  const Instr& ins = instr_at(p, f);
  ++s.steps;

  std::optional<Value> done;
  std::visit(
      [&](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, NopInstr>) {
          f.label = i.next;
        } else if constexpr (std::is_same_v<T, AssignInstr>) {
          Value v = eval_expr_with([&](RegId r) { return reg_of(f, r); }, i.expr);
          f.regs[i.dst] = v;
          f.label = i.next;
        } else if constexpr (std::is_same_v<T, CondInstr>) {
          f.label = reg_of(f, i.guard) != 0 ? i.if_true : i.if_false;
        } else if constexpr (std::is_same_v<T, PrintInstr>) {
          s.trace.push_back(reg_of(f, i.src));
          f.label = i.next;
        } else if constexpr (std::is_same_v<T, CallInstr>) {
          const Function* callee = p.find(i.callee);
          if (!callee) throw EngineError("unknown function '" + i.callee + "'");
          if (callee->params.size() != i.args.size())
            throw EngineError("arity mismatch calling '" + i.callee + "'");
          RefFrame nf;
          nf.fun = i.callee;
          nf.tag = current_tag(*callee);
          nf.label = version_of(*callee, nf.tag).entry;
          nf.ret_reg = i.dst;
          for (std::size_t k = 0; k < i.args.size(); ++k)
            nf.regs[callee->params[k]] = reg_of(f, i.args[k]);
          f.label = i.next;
          s.frames.push_back(std::move(nf));
        } else if constexpr (std::is_same_v<T, ReturnInstr>) {
          Value v = reg_of(f, i.src);
          RegId dst = f.ret_reg;
          s.frames.pop_back();
          if (s.frames.empty())
            done = v;
          else
            s.frames.back().regs[dst] = v;
        } else if constexpr (std::is_same_v<T, MemGetInstr>) {
          Value addr = reg_of(f, i.addr);
          if (static_cast<std::uint64_t>(addr) >= s.heap.size())
            throw EngineError("MemGet out of memory range");
          f.regs[i.dst] = s.heap[static_cast<std::size_t>(addr)];
          f.label = i.next;
        } else if constexpr (std::is_same_v<T, MemSetInstr>) {
          Value addr = reg_of(f, i.addr);
          Value v = reg_of(f, i.src);
          if (static_cast<std::uint64_t>(addr) >= s.heap.size())
            throw EngineError("MemSet out of memory range");
          s.heap[static_cast<std::size_t>(addr)] = v;
          f.label = i.next;
        } else {  // AssumeInstr
          if (reg_of(f, i.guard) != 0) {
            f.label = i.next;
            return;
          }
          const Function* target = p.find(i.target);
          if (!target) throw EngineError("unknown function '" + i.target + "'");
          if (!target->base.code.count(i.target_label))
            throw EngineError("undefined label l" + std::to_string(i.target_label) +
                              " in '" + i.target + "'");
          std::map<RegId, Value> regs;
          for (const VarMapEntry& e : i.varmap)
            regs[e.dst] = eval_expr_with([&](RegId r) { return reg_of(f, r); }, e.expr);
          // The deoptimized frame replaces the current one; the caller link
          // is unchanged.
          f.fun = i.target;
          f.tag = VersionTag::Base;
          f.label = i.target_label;
          f.regs = std::move(regs);
        }
      },
      ins);
  return done;
}

Behavior ref_run(const Program& p, std::size_t heap_size, std::uint64_t step_cap) {
  RefState s;
  try {
    s = ref_init(p, heap_size);
    while (s.steps < step_cap) {
      if (auto v = ref_step(p, s)) return terminated(std::move(s.trace), *v);
    }
    return step_cap_reached(std::move(s.trace));
  } catch (const EngineError& e) {
    return errored(std::move(s.trace), e.what());
  }
}

}  // namespace tjit

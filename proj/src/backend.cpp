#include "tjit/backend.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "tjit/nativegen.hpp"

namespace tjit {
namespace {

RegId max_reg_of(const Function& f, const Version& v) {
  RegId m = 0;
  for (RegId r : f.params) m = std::max(m, r);
  for (const auto& [l, ins] : v.code) {
    for (RegId r : instr_uses(ins)) m = std::max(m, r);
    if (auto d = instr_def(ins)) m = std::max(m, *d);
  }
  return m;
}

// Live registers a call must preserve: live into the continuation, minus the
// call's own destination. Ascending, which is also the save (push) order.
std::vector<RegId> saved_regs(const LiveSets& live, const CallInstr& call) {
  std::vector<RegId> out;
  auto it = live.live_in.find(call.next);
  if (it == live.live_in.end()) return out;
  for (RegId r : it->second)
    if (r != call.dst) out.push_back(r);
  return out;
}

void set_next(RTLInstr& ins, LabelId next) {
  if (auto* op = std::get_if<RtlOp>(&ins)) op->next = next;
  else if (auto* cp = std::get_if<RtlCallPrim>(&ins)) cp->next = next;
  else throw EngineError("invalid block body");
}

}  // namespace

std::vector<Segment> split_version(const Version& v) {
  auto reach = [&](LabelId root) {
    std::set<LabelId> seen;
    std::vector<LabelId> work{root};
    while (!work.empty()) {
      LabelId l = work.back();
      work.pop_back();
      auto it = v.code.find(l);
      if (it == v.code.end()) continue;  // malformed targets fail in flatten
      if (!seen.insert(l).second) continue;
      if (std::holds_alternative<CallInstr>(it->second)) continue;  // exit
      for (LabelId s : instr_succs(it->second)) work.push_back(s);
    }
    return std::vector<LabelId>(seen.begin(), seen.end());
  };

  std::vector<Segment> out;
  out.push_back(Segment{SegmentKey::entry(), v.entry, reach(v.entry)});
  for (const auto& [l, ins] : v.code)
    if (const auto* c = std::get_if<CallInstr>(&ins))
      out.push_back(Segment{SegmentKey::cont_at(l), c->next, reach(c->next)});
  return out;
}

std::vector<Segment> split_function(const Function& f) {
  return split_version(current_version(f));
}

RTLBlockUnit gen_segment(const Program& p, const Function& f, const Version& v,
                         const Segment& seg, const LiveSets& live,
                         const CompileOptions& opts) {
  auto self = p.idx_of(f.name);
  if (!self) throw EngineError("unknown function '" + f.name + "'");

  RTLBlockUnit u;
  RegId scratch = max_reg_of(f, v) + 1;
  u.vreg_count = scratch + 1;
  LabelId aux_next = (v.code.empty() ? 0 : v.code.rbegin()->first) + 1;

  auto push_r = [](RtlBlock& b, RegId r) {
    b.body.push_back(RtlCallPrim{0, Prim::Push, {opr(r)}, 0});
  };
  auto push_i = [](RtlBlock& b, Value v_) {
    b.body.push_back(RtlCallPrim{0, Prim::Push, {opi(v_)}, 0});
  };
  auto pop_into = [](RtlBlock& b, RegId r) {
    b.body.push_back(RtlCallPrim{r, Prim::Pop, {}, 0});
  };

  RtlBlock prologue;
  if (seg.key.is_entry()) {
    // The caller pushed arguments in declaration order; pop them back out.
    for (auto it = f.params.rbegin(); it != f.params.rend(); ++it)
      pop_into(prologue, *it);
  } else {
    auto call_it = v.code.find(seg.key.cont);
    const auto* call =
        call_it == v.code.end() ? nullptr : std::get_if<CallInstr>(&call_it->second);
    if (!call) throw EngineError("invalid continuation segment");
    pop_into(prologue, call->dst);  // return value, pushed back on top
    std::vector<RegId> saved = saved_regs(live, *call);
    if (opts.scramble_cont_restore) {
      for (RegId r : saved) pop_into(prologue, r);
    } else {
      for (auto it = saved.rbegin(); it != saved.rend(); ++it)
        pop_into(prologue, *it);
    }
  }
  prologue.term = RtlGoto{seg.root};
  if (prologue.body.empty()) {
    u.entry_block = seg.root;  // nothing to pop; loops may target the root
  } else {
    u.entry_block = 0;
    u.blocks.emplace(0, std::move(prologue));
  }

  for (LabelId l : seg.labels) {
    RtlBlock b;
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, NopInstr>) {
            b.term = RtlGoto{i.next};
          } else if constexpr (std::is_same_v<T, AssignInstr>) {
            b.body.push_back(RtlOp{i.dst, i.expr, 0});
            b.term = RtlGoto{i.next};
          } else if constexpr (std::is_same_v<T, CondInstr>) {
            b.term = RtlBranch{i.guard, i.if_true, i.if_false};
          } else if constexpr (std::is_same_v<T, PrintInstr>) {
            b.body.push_back(RtlCallPrim{0, Prim::Print, {opr(i.src)}, 0});
            b.term = RtlGoto{i.next};
          } else if constexpr (std::is_same_v<T, CallInstr>) {
            for (RegId r : saved_regs(live, i)) push_r(b, r);
            push_i(b, static_cast<Value>(*self));  // Close: function index,
            push_i(b, static_cast<Value>(l));      // then the call label
            for (RegId a : i.args) push_r(b, a);
            push_i(b, static_cast<Value>(i.args.size()));
            auto callee = p.idx_of(i.callee);
            if (!callee)
              throw EngineError("unknown function '" + i.callee + "'");
            push_i(b, static_cast<Value>(*callee));
            b.term = RtlReturnStatus{RETCALL};
          } else if constexpr (std::is_same_v<T, ReturnInstr>) {
            push_r(b, i.src);
            b.term = RtlReturnStatus{RETRET};
          } else if constexpr (std::is_same_v<T, MemGetInstr>) {
            b.body.push_back(RtlCallPrim{i.dst, Prim::HeapGet, {opr(i.addr)}, 0});
            b.term = RtlGoto{i.next};
          } else if constexpr (std::is_same_v<T, MemSetInstr>) {
            b.body.push_back(
                RtlCallPrim{0, Prim::HeapSet, {opr(i.addr), opr(i.src)}, 0});
            b.term = RtlGoto{i.next};
          } else {  // AssumeInstr
            LabelId aux = aux_next++;
            b.term = RtlBranch{i.guard, i.next, aux};
            // Deoptimization exit: the payload the monitor's synth_frame
            // decodes, register ids travelling as values.
            RtlBlock d;
            for (const VarMapEntry& e : i.varmap) {
              push_i(d, static_cast<Value>(e.dst));
              if (e.expr.op == ExprOp::ConstV) {
                push_i(d, e.expr.imm);
              } else {
                d.body.push_back(RtlOp{scratch, e.expr, 0});
                push_r(d, scratch);
              }
            }
            push_i(d, static_cast<Value>(i.varmap.size()));
            push_i(d, static_cast<Value>(i.target_label));
            auto target = p.idx_of(i.target);
            if (!target)
              throw EngineError("unknown function '" + i.target + "'");
            push_i(d, static_cast<Value>(*target));
            d.term = RtlReturnStatus{RETDEOPT};
            u.blocks.emplace(aux, std::move(d));
          }
        },
        v.code.at(l));
    u.blocks.emplace(l, std::move(b));
  }
  return u;
}

RTLUnit flatten(const RTLBlockUnit& b) {
  if (!b.blocks.count(b.entry_block))
    throw EngineError("undefined block " + std::to_string(b.entry_block));

  std::vector<LabelId> order;
  order.push_back(b.entry_block);
  for (const auto& [id, blk] : b.blocks)
    if (id != b.entry_block) order.push_back(id);

  std::map<LabelId, LabelId> start;
  LabelId next_label = 1;
  for (LabelId id : order) {
    const RtlBlock& blk = b.blocks.at(id);
    std::size_t n = blk.body.size();
    if (std::holds_alternative<RtlGoto>(blk.term)) {
      if (n == 0) n = 1;  // a bare Goto keeps its footprint
    } else {
      n += 1;
    }
    start[id] = next_label;
    next_label += static_cast<LabelId>(n);
  }

  auto landing = [&](LabelId id) {
    auto it = start.find(id);
    if (it == start.end())
      throw EngineError("undefined block " + std::to_string(id));
    return it->second;
  };

  RTLUnit u;
  u.entry = 1;
  u.vreg_count = b.vreg_count;
  for (LabelId id : order) {
    const RtlBlock& blk = b.blocks.at(id);
    const auto* g = std::get_if<RtlGoto>(&blk.term);
    for (std::size_t k = 0; k < blk.body.size(); ++k) {
      RTLInstr ins = blk.body[k];
      LabelId here = static_cast<LabelId>(u.code.size() + 1);
      bool last = k + 1 == blk.body.size();
      set_next(ins, last && g ? landing(g->next) : here + 1);
      u.code.push_back(std::move(ins));
    }
    if (g) {
      if (blk.body.empty()) u.code.push_back(RtlGoto{landing(g->next)});
    } else if (const auto* br = std::get_if<RtlBranch>(&blk.term)) {
      u.code.push_back(
          RtlBranch{br->guard, landing(br->if_true), landing(br->if_false)});
    } else {
      u.code.push_back(RtlReturnStatus{std::get<RtlReturnStatus>(blk.term).code});
    }
  }
  if (u.code.size() + 1 != next_label) throw EngineError("flatten size mismatch");
  return u;
}

CompileResult compile_function(const Program& p, const FunName& fun,
                               Runtime& rt, Tier tier,
                               const CompileOptions& opts) {
  auto cancelled = [](std::string why) {
    return CompileResult{false, std::move(why)};
  };

  const Function* f = p.find(fun);
  if (!f) return cancelled("unknown function '" + fun + "'");
  FunIdx idx = *p.idx_of(fun);
  if (rt.check_installed(idx)) return cancelled("already installed");
  if (opts.inject_failure) return cancelled("injected failure");
  if (tier == Tier::Native && !native_supported())
    return cancelled("native tier unsupported on this host");

  try {
    const Version& v = current_version(*f);
    LiveSets live = compute_liveness(v);

    std::vector<std::pair<CodeKey, CompiledUnit>> built;
    for (const Segment& seg : split_version(v)) {
      CompiledUnit cu;
      cu.tier = tier;
      cu.rtl = std::make_shared<const RTLUnit>(
          flatten(gen_segment(p, *f, v, seg, live, opts)));
      if (tier == Tier::Native) cu.native = install_native(emit_unit(*cu.rtl));
      built.emplace_back(CodeKey{idx, seg.key}, std::move(cu));
    }
    for (const auto& [key, cu] : built)
      if (rt.repository().count(key)) return cancelled("already installed");
    for (auto& [key, cu] : built) rt.install_code(key, std::move(cu));
    return CompileResult{true, {}};
  } catch (const EngineError& e) {
    return cancelled(e.what());
  }
}

}  // namespace tjit

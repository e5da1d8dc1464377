#include "tjit/fuzzgen.hpp"

#include <algorithm>
#include <utility>

#include "tjit/behavior.hpp"
#include "tjit/liveness.hpp"
#include "tjit/nativegen.hpp"
#include "tjit/refsem.hpp"

namespace tjit {

namespace {

// ---- program generation ----------------------------------------------

struct Builder {
  std::vector<Instr> code;
  std::vector<RegId> defined;
  RegId next_reg = 1;

  // Label the next emitted instruction will get.
  LabelId here() const { return static_cast<LabelId>(code.size() + 1); }
  // `next` for an instruction emitted right now: the one after it.
  LabelId after() const { return static_cast<LabelId>(code.size() + 2); }

  LabelId emit(Instr i) {
    code.push_back(std::move(i));
    return static_cast<LabelId>(code.size());
  }

  bool is_defined(RegId r) const {
    return std::find(defined.begin(), defined.end(), r) != defined.end();
  }
  void define(RegId r) {
    if (!is_defined(r)) defined.push_back(r);
  }
};

RegId pick_defined(Rng& rng, const Builder& b) {
  return b.defined[rng.below(b.defined.size())];
}

// Destination register: mostly an existing one; a fresh one when allowed.
RegId pick_dst(Rng& rng, Builder& b, bool allow_fresh) {
  if (allow_fresh && b.next_reg <= 9 && (b.defined.empty() || rng.chance(45)))
    return b.next_reg++;
  if (b.defined.empty()) return b.next_reg++;
  return pick_defined(rng, b);
}

Expr random_expr(Rng& rng, const Builder& b) {
  if (b.defined.empty()) return expr_const(rng.range(-100, 100));
  RegId a = pick_defined(rng, b);
  RegId c = pick_defined(rng, b);
  switch (rng.below(12)) {
    case 0: return expr_rr(ExprOp::AddRR, a, c);
    case 1: return expr_rr(ExprOp::SubRR, a, c);
    case 2: return expr_rr(ExprOp::MulRR, a, c);
    case 3: return expr_rr(ExprOp::EqRR, a, c);
    case 4: return expr_rr(ExprOp::LtRR, a, c);
    case 5: return rng.chance(25) ? expr_rr(ExprOp::ModRR, a, c)
                                  : expr_ri(ExprOp::AddRI, a, rng.range(1, 50));
    case 6: return expr_neg(a);
    case 7: return expr_eqz(a);
    case 8: return expr_ri(ExprOp::AddRI, a, rng.range(-50, 50));
    case 9: return expr_ri(ExprOp::MulRI, a, rng.range(-8, 8));
    default: return expr_const(rng.range(-100, 100));
  }
}

void emit_simple(Rng& rng, Builder& b, bool allow_fresh) {
  std::uint64_t c = rng.below(100);
  if (c < 45 || b.defined.empty()) {
    RegId dst = pick_dst(rng, b, allow_fresh);
    b.emit(AssignInstr{dst, random_expr(rng, b), b.after()});
    b.define(dst);
  } else if (c < 60) {
    b.emit(PrintInstr{pick_defined(rng, b), b.after()});
  } else if (c < 75) {
    RegId addr;
    if (rng.chance(88)) {
      addr = pick_dst(rng, b, allow_fresh);
      b.emit(AssignInstr{addr, expr_const(rng.range(0, 4095)), b.after()});
      b.define(addr);
    } else {
      addr = pick_defined(rng, b);  // may well be out of range
    }
    if (rng.chance(50)) {
      RegId dst = pick_dst(rng, b, allow_fresh);
      b.emit(MemGetInstr{dst, addr, b.after()});
      b.define(dst);
    } else {
      b.emit(MemSetInstr{addr, pick_defined(rng, b), b.after()});
    }
  } else {
    RegId dst = pick_dst(rng, b, allow_fresh);
    b.emit(AssignInstr{dst, expr_const(rng.range(-100, 100)), b.after()});
    b.define(dst);
  }
}

using Callee = std::pair<FunName, unsigned>;  // name, arity

void emit_call(Rng& rng, Builder& b, const std::vector<Callee>& targets,
               bool allow_fresh) {
  if (targets.empty()) return;
  const Callee& t = targets[rng.below(targets.size())];
  while (b.defined.size() < t.second) {
    RegId r = b.next_reg++;
    b.emit(AssignInstr{r, expr_const(rng.range(-20, 20)), b.after()});
    b.define(r);
  }
  std::vector<RegId> args;
  for (unsigned i = 0; i < t.second; ++i) args.push_back(pick_defined(rng, b));
  RegId dst = pick_dst(rng, b, allow_fresh);
  b.emit(CallInstr{dst, t.first, std::move(args), b.after()});
  b.define(dst);
}

void emit_loop(Rng& rng, Builder& b, const std::vector<Callee>& targets) {
  RegId c = b.next_reg++;
  b.emit(AssignInstr{c, expr_const(rng.range(1, 12)), b.after()});
  RegId g = b.next_reg++;
  LabelId head = b.here();
  b.emit(AssignInstr{g, expr_eqz(c), b.after()});
  b.define(g);
  LabelId cond = b.emit(CondInstr{g, 0, b.after()});  // if_true patched below
  // The counter stays out of `defined` so no body write can unbound the loop.
  int body = static_cast<int>(rng.range(1, 3));
  for (int i = 0; i < body; ++i) emit_simple(rng, b, false);
  if (!targets.empty() && rng.chance(45)) emit_call(rng, b, targets, false);
  b.emit(AssignInstr{c, expr_ri(ExprOp::AddRI, c, -1), b.after()});
  b.emit(NopInstr{head});
  std::get<CondInstr>(b.code[cond - 1]).if_true = b.here();
  b.define(c);  // exits as 0; safe to read downstream
}

void emit_diamond(Rng& rng, Builder& b) {
  RegId g = b.next_reg++;
  b.emit(AssignInstr{g, random_expr(rng, b), b.after()});
  b.define(g);
  LabelId cond = b.emit(CondInstr{g, b.after(), 0});  // if_false patched below
  int then_len = static_cast<int>(rng.range(1, 2));
  for (int i = 0; i < then_len; ++i) emit_simple(rng, b, false);
  LabelId skip = b.emit(NopInstr{0});  // next patched to the join
  std::get<CondInstr>(b.code[cond - 1]).if_false = b.here();
  int else_len = static_cast<int>(rng.range(1, 2));
  for (int i = 0; i < else_len; ++i) emit_simple(rng, b, false);
  std::get<NopInstr>(b.code[skip - 1]).next = b.here();
}

Function gen_function(Rng& rng, FunName name, unsigned arity,
                      const std::vector<Callee>& targets) {
  Function f;
  f.name = std::move(name);
  Builder b;
  for (unsigned i = 1; i <= arity; ++i) {
    f.params.push_back(i);
    b.define(i);
    b.next_reg = i + 1;
  }

  int head = static_cast<int>(rng.range(2, 6));
  for (int i = 0; i < head; ++i) emit_simple(rng, b, true);
  if (!targets.empty() && rng.chance(40)) emit_call(rng, b, targets, true);
  if (rng.chance(45)) emit_loop(rng, b, targets);
  int mid = static_cast<int>(rng.range(1, 4));
  for (int i = 0; i < mid; ++i) emit_simple(rng, b, true);
  if (rng.chance(35)) emit_diamond(rng, b);
  if (!targets.empty() && rng.chance(30)) emit_call(rng, b, targets, true);
  b.emit(ReturnInstr{pick_defined(rng, b)});

  f.base.entry = 1;
  for (std::size_t i = 0; i < b.code.size(); ++i)
    f.base.code.emplace(static_cast<LabelId>(i + 1), std::move(b.code[i]));

  // Sometimes add a speculative version: the base body behind an entry
  // guard whose failure deoptimizes right back to the base entry.
  if (rng.chance(30)) {
    Version opt = f.base;
    RegId g = b.next_reg++;
    Expr guard;
    if (!f.params.empty() && rng.chance(60)) {
      RegId pa = f.params[rng.below(f.params.size())];
      RegId pb = f.params[rng.below(f.params.size())];
      switch (rng.below(3)) {
        case 0: guard = expr_eqz(pa); break;
        case 1: guard = expr_rr(ExprOp::LtRR, pa, pb); break;
        default: guard = expr_rr(ExprOp::EqRR, pa, pb); break;
      }
    } else {
      guard = expr_const(rng.chance(50) ? 1 : 0);
    }
    LabelId last = static_cast<LabelId>(f.base.code.size());
    LiveSets live = compute_liveness(f.base);
    std::vector<VarMapEntry> varmap;
    for (RegId r : live.live_in[f.base.entry])
      varmap.push_back({r, expr_ri(ExprOp::AddRI, r, 0)});
    opt.entry = last + 1;
    opt.code.emplace(last + 1, AssignInstr{g, guard, last + 2});
    opt.code.emplace(
        last + 2, AssumeInstr{g, f.name, f.base.entry, std::move(varmap),
                              f.base.entry});
    f.opt = std::move(opt);
  }
  return f;
}

}  // namespace

Program generate_program(Rng& rng) {
  Program p;
  int helpers = static_cast<int>(rng.range(1, 4));
  std::vector<unsigned> arity(static_cast<std::size_t>(helpers));
  for (auto& a : arity) a = static_cast<unsigned>(rng.range(0, 3));

  for (int i = 0; i < helpers; ++i) {
    std::vector<Callee> targets;
    for (int j = i + 1; j < helpers; ++j)
      targets.emplace_back("f" + std::to_string(j + 1), arity[j]);
    p.functions.push_back(
        gen_function(rng, "f" + std::to_string(i + 1), arity[i], targets));
  }
  std::vector<Callee> all;
  for (int j = 0; j < helpers; ++j)
    all.emplace_back("f" + std::to_string(j + 1), arity[j]);
  p.functions.push_back(gen_function(rng, "main", 0, all));
  p.rebuild_index();
  return p;
}

// ---- unit generation --------------------------------------------------

RTLUnit generate_unit(Rng& rng) {
  RTLUnit u;
  u.vreg_count = static_cast<RegId>(rng.range(2, 8));
  LabelId n = static_cast<LabelId>(rng.range(5, 30));

  auto vreg = [&] { return static_cast<RegId>(rng.below(u.vreg_count)); };
  auto operand = [&](bool addr) {
    if (addr) {
      if (rng.chance(70)) return opi(rng.range(0, 4095));
      if (rng.chance(30)) return opi(rng.chance(50) ? rng.range(4096, 9000)
                                                    : rng.range(-20, -1));
      return opr(vreg());
    }
    return rng.chance(50) ? opi(rng.range(-50, 50)) : opr(vreg());
  };
  // Forward-only targets keep every path terminating.
  auto fwd = [&](LabelId k, std::int64_t span) {
    return static_cast<LabelId>(
        rng.range(k + 1, std::min<std::int64_t>(k + span, n)));
  };

  for (LabelId k = 1; k < n; ++k) {
    LabelId next = rng.chance(10) ? fwd(k, 4) : k + 1;
    switch (rng.below(10)) {
      case 0:
      case 1:
      case 2: {
        Expr e;
        switch (rng.below(8)) {
          case 0: e = expr_rr(ExprOp::AddRR, vreg(), vreg()); break;
          case 1: e = expr_rr(ExprOp::SubRR, vreg(), vreg()); break;
          case 2: e = expr_rr(ExprOp::MulRR, vreg(), vreg()); break;
          case 3: e = expr_rr(ExprOp::LtRR, vreg(), vreg()); break;
          case 4: e = rng.chance(30) ? expr_rr(ExprOp::ModRR, vreg(), vreg())
                                     : expr_ri(ExprOp::AddRI, vreg(),
                                               rng.range(1, 9));
            break;
          case 5: e = expr_eqz(vreg()); break;
          case 6: e = expr_ri(ExprOp::MulRI, vreg(), rng.range(-6, 6)); break;
          default: e = expr_const(rng.range(-100, 100)); break;
        }
        u.code.push_back(RtlOp{vreg(), e, next});
        break;
      }
      case 3:
        u.code.push_back(RtlCallPrim{vreg(), Prim::Pop, {}, next});
        break;
      case 4:
      case 5:
        u.code.push_back(
            RtlCallPrim{0, Prim::Push, {operand(false)}, next});
        break;
      case 6:
        u.code.push_back(
            RtlCallPrim{vreg(), Prim::HeapGet, {operand(true)}, next});
        break;
      case 7:
        u.code.push_back(RtlCallPrim{
            0, Prim::HeapSet, {operand(true), operand(false)}, next});
        break;
      case 8:
        u.code.push_back(
            RtlCallPrim{0, Prim::Print, {operand(false)}, next});
        break;
      default:
        u.code.push_back(RtlBranch{vreg(), fwd(k, 6), fwd(k, 6)});
        break;
    }
  }
  u.code.push_back(RtlReturnStatus{rng.range(0, 2)});
  return u;
}

std::vector<Value> generate_stack(Rng& rng) {
  std::vector<Value> vs(rng.below(7));
  for (auto& v : vs) v = rng.range(-1000, 1000);
  return vs;
}

// ---- differential loop -------------------------------------------------

FuzzReport run_differential_fuzz(std::uint64_t base_seed, std::uint64_t count,
                                 const JitConfig& base_cfg) {
  FuzzReport rep;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t seed = base_seed + i;
    Rng rng(seed);
    Program p = generate_program(rng);

    JitConfig cfg = base_cfg;
    switch (i % 4) {
      case 0: cfg.hotness = 2; break;
      case 1: cfg.hotness = 1; break;
      case 2: cfg.hotness = 10; break;
      default: cfg.hotness.reset(); break;
    }
    if (i % 3 == 1) cfg.fuel = 7;
    if (i % 5 == 2) cfg.fuel = 1;
    cfg.stack_impl = (i % 2) ? StackImpl::Structured : StackImpl::Flat;
    cfg.tier = (i % 4 == 2 && native_supported()) ? Tier::Native : Tier::Rtl;

    Behavior ref = ref_run(p, cfg.heap_size, cfg.step_cap);
    Behavior jit = jit_run(p, cfg);
    ++rep.checked;
    if (!refines(ref, jit)) {
      rep.ok = false;
      rep.failing_seed = seed;
      rep.detail = "seed " + std::to_string(seed) + ": ref " + to_string(ref) +
                   " vs engine " + to_string(jit);
      return rep;
    }
  }
  return rep;
}

}  // namespace tjit

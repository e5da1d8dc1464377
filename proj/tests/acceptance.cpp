// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and budgets are pinned below; a red line here means the
// engine is wrong (or the host is too slow), never that the bar moved.
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "support/helpers.hpp"
#include "support/prim_replay.hpp"
#include "tjit/backend.hpp"
#include "tjit/bench.hpp"
#include "tjit/fuzzgen.hpp"
#include "tjit/interp.hpp"
#include "tjit/liveness.hpp"
#include "tjit/monitor.hpp"
#include "tjit/nativegen.hpp"
#include "tjit/parse.hpp"
#include "tjit/refsem.hpp"
#include "tjit/rtlvm.hpp"
#include "tjit/runtime.hpp"

using namespace tjit;
using testsupport::load_corpus;
using testsupport::load_program;

namespace {

// Pinned tolerances. Do not touch these to make a run green.
constexpr std::uint64_t kFuzzBaseSeed = 1;
constexpr std::uint64_t kFuzzPrograms = 1000;
constexpr double kRefinementBudgetSec = 120.0;
constexpr int kPrimSequences = 10000;
constexpr std::size_t kPrimMaxLen = 200;
constexpr double kPrimBudgetSec = 30.0;
constexpr std::uint64_t kNativeUnitBaseSeed = 9000;
constexpr int kNativeUnits = 100;
constexpr double kRtlSpeedupMin = 2.0;
constexpr double kNativeSpeedupMin = 5.0;
constexpr int kBenchReps = 5;
constexpr double kBenchBudgetSec = 60.0;
const char* const kOobMessage = "MemGet out of memory range";

struct Outcome {
  bool ok = true;
  bool skipped = false;
  std::string detail;
};

Outcome fail(std::string detail) { return Outcome{false, false, std::move(detail)}; }
Outcome skip(std::string detail) { return Outcome{true, true, std::move(detail)}; }

// The one diverging corpus program runs under small uniform caps; everything
// else keeps the defaults.
JitConfig tuned(const std::string& name, JitConfig cfg) {
  if (name == "infinite_loop.cir") {
    cfg.step_cap = 1000;
    cfg.exec_cap = 500;
  }
  return cfg;
}

std::uint64_t ref_cap(const std::string& name) {
  return name == "infinite_loop.cir" ? 100'000 : 10'000'000;
}

std::string describe(const Behavior& b) { return to_string(b); }

// --- criterion 1: corpus + fuzzed trace refinement ------------------------

Outcome check_refinement() {
  for (const std::string& name : testsupport::corpus_names()) {
    Program p = load_corpus(name);
    Behavior ref = ref_run(p, 4096, ref_cap(name));
    Behavior jit = jit_run(p, tuned(name, JitConfig{}));
    if (!refines(ref, jit))
      return fail(name + ": ref " + describe(ref) + " vs jit " + describe(jit));
  }
  FuzzReport r = run_differential_fuzz(kFuzzBaseSeed, kFuzzPrograms, JitConfig{});
  if (!r.ok)
    return fail("fuzz seed " + std::to_string(r.failing_seed) + ": " + r.detail);
  if (r.checked != kFuzzPrograms)
    return fail("fuzz checked " + std::to_string(r.checked) + " programs");
  return {};
}

// --- criterion 2: primitive equivalence of the two stack implementations ---

Outcome check_prim_equivalence() {
  for (int seed = 1; seed <= kPrimSequences; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    auto ops = testsupport::generate_prim_sequence(rng, kPrimMaxLen);
    StructuredRuntime s;
    FlatRuntime f;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      std::string a = testsupport::apply_op(s, ops[i]);
      std::string b = testsupport::apply_op(f, ops[i]);
      if (a != b)
        return fail("seed " + std::to_string(seed) + " op " +
                    std::to_string(i) + ": structured '" + a + "' vs flat '" +
                    b + "'");
    }
    if (!relate(s, f))
      return fail("seed " + std::to_string(seed) + ": final states unrelated");
  }
  return {};
}

// --- criterion 3: deoptimization agreement between the two routes ----------

struct DeoptCase {
  const char* corpus;
  const char* fun;
  std::vector<Value> args;
  std::optional<Value> heap0;
};

Outcome check_deopt_case(const DeoptCase& c) {
  Program p = load_corpus(c.corpus);
  const Function* f = p.find(c.fun);
  if (!f || !f->opt) return fail(std::string(c.corpus) + ": no speculative version");

  // Route A: the interpreter runs the speculative version and decides.
  StructuredRuntime ra;
  if (c.heap0) ra.heap_set(0, *c.heap0);
  RegMap regs;
  for (std::size_t i = 0; i < c.args.size(); ++i) regs[f->params[i]] = c.args[i];
  InterpOutcome out = interp_slice(p, c.fun, VersionTag::Opt, f->opt->entry,
                                   std::move(regs), 1'000'000, ra);
  const auto* sd = std::get_if<SyncDeopt>(&out);
  if (!sd) return fail(std::string(c.corpus) + ": interpreter did not deopt");

  // Route B: the same activation runs compiled; the payload travels over the
  // stack and synth_frame decodes it.
  StructuredRuntime rb;
  if (c.heap0) rb.heap_set(0, *c.heap0);
  CompileResult cr = compile_function(p, c.fun, rb, Tier::Rtl);
  if (!cr.ok) return fail(std::string(c.corpus) + ": compile failed: " + cr.reason);
  for (Value v : c.args) rb.stk_push(v);
  FunIdx idx = *p.idx_of(c.fun);
  ExecResult res = rtl_run(
      *rb.load_code(CodeKey{idx, SegmentKey::entry()}).rtl, rb, 1'000'000);
  if (res.cap_reached || res.status != RETDEOPT)
    return fail(std::string(c.corpus) + ": compiled code did not deopt");
  SynthFrame synth = synth_frame(p, rb);

  if (synth.fun != sd->target || synth.label != sd->target_label ||
      synth.regs != sd->regs)
    return fail(std::string(c.corpus) + ": synthesized frame differs");
  if (ra.trace() != rb.trace() || !ra.stack_elems().empty() ||
      !rb.stack_elems().empty())
    return fail(std::string(c.corpus) + ": residual state differs");

  // End to end the whole program must still match the reference exactly.
  Behavior ref = ref_run(p);
  Behavior jit = jit_run(p);
  if (!(jit == ref))
    return fail(std::string(c.corpus) + ": end-to-end " + describe(jit) +
                " vs ref " + describe(ref));
  return {};
}

Outcome check_deopt_agreement() {
  const DeoptCase cases[] = {
      {"speculate_poly.cir", "poly", {200}, std::nullopt},
      {"osr_loop.cir", "steps", {9}, std::nullopt},
      {"osr_crossfun.cir", "outer", {2000}, std::nullopt},
      {"osr_heap.cir", "work", {5}, Value{1}},
  };
  for (const DeoptCase& c : cases) {
    Outcome o = check_deopt_case(c);
    if (!o.ok) return o;
  }
  return {};
}

// --- criterion 4: compile failures must be invisible -----------------------

Outcome check_compile_failure_fallback() {
  for (const std::string& name : testsupport::corpus_names()) {
    Program p = load_corpus(name);
    JitConfig cfg = tuned(name, JitConfig{});
    cfg.compile.inject_failure = true;
    Behavior ref = ref_run(p, 4096, ref_cap(name));
    Behavior jit = jit_run(p, cfg);
    if (!(jit == ref))
      return fail(name + ": " + describe(jit) + " vs ref " + describe(ref));
  }
  return {};
}

// --- criterion 5: the running example lowers to the expected shapes -------

bool is_push_imm(const RTLInstr& ins, Value imm) {
  const auto* cp = std::get_if<RtlCallPrim>(&ins);
  return cp && cp->prim == Prim::Push && cp->dst == 0 && cp->args.size() == 1 &&
         cp->args[0].is_imm && cp->args[0].imm == imm;
}

bool is_push_reg(const RTLInstr& ins, RegId r) {
  const auto* cp = std::get_if<RtlCallPrim>(&ins);
  return cp && cp->prim == Prim::Push && cp->dst == 0 && cp->args.size() == 1 &&
         !cp->args[0].is_imm && cp->args[0].reg == r;
}

const RtlCallPrim* as_pop(const RTLInstr& ins) {
  const auto* cp = std::get_if<RtlCallPrim>(&ins);
  return (cp && cp->prim == Prim::Pop && cp->args.empty()) ? cp : nullptr;
}

bool returns_with(const RTLInstr& ins, Value code) {
  const auto* rs = std::get_if<RtlReturnStatus>(&ins);
  return rs && rs->code == code;
}

Outcome check_running_example_shape() {
  Program p = load_corpus("running_example.cir");
  const Function* f = p.find("Fun1");
  if (!f) return fail("running_example.cir lacks Fun1");
  LiveSets live = compute_liveness(f->base);
  auto segs = split_version(f->base);
  if (segs.size() != 2) return fail("expected two segments");
  std::vector<RTLUnit> units;
  for (const Segment& seg : segs)
    units.push_back(flatten(gen_segment(p, *f, f->base, seg, live)));

  // Entry: Pop arg, Op, Push saved reg, Push own index + call label (the
  // close pair), Push argument, Push count, Push callee index, RETCALL.
  const RTLUnit& e = units[0];
  if (e.code.size() != 9) return fail("entry unit has wrong length");
  const RtlCallPrim* pop = as_pop(e.code[0]);
  if (!pop) return fail("entry[0] is not Pop");
  RegId vr1 = pop->dst;
  const auto* add = std::get_if<RtlOp>(&e.code[1]);
  if (!add || add->expr.op != ExprOp::AddRI || add->expr.a != vr1 ||
      add->expr.imm != 4)
    return fail("entry[1] is not the +4 operation");
  RegId vr2 = add->dst;
  if (!is_push_reg(e.code[2], vr1)) return fail("entry[2] does not save the live register");
  if (!is_push_imm(e.code[3], 1)) return fail("entry[3] is not Push own index");
  if (!is_push_imm(e.code[4], 2)) return fail("entry[4] is not Push call label");
  if (!is_push_reg(e.code[5], vr2)) return fail("entry[5] does not push the argument");
  if (!is_push_imm(e.code[6], 1)) return fail("entry[6] is not Push arg count");
  if (!is_push_imm(e.code[7], 7)) return fail("entry[7] is not Push callee index");
  if (!returns_with(e.code[8], RETCALL)) return fail("entry[8] is not RETCALL");

  // Continuation: Pop result, Pop saved reg, Op, Push, RETRET.
  const RTLUnit& k = units[1];
  if (k.code.size() != 5) return fail("continuation unit has wrong length");
  const RtlCallPrim* pr = as_pop(k.code[0]);
  const RtlCallPrim* ps = as_pop(k.code[1]);
  if (!pr || !ps || pr->dst == ps->dst) return fail("continuation pops are wrong");
  const auto* sum = std::get_if<RtlOp>(&k.code[2]);
  if (!sum || sum->expr.op != ExprOp::AddRR) return fail("continuation[2] is not the addition");
  if (!is_push_reg(k.code[3], sum->dst)) return fail("continuation[3] does not push the result");
  if (!returns_with(k.code[4], RETRET)) return fail("continuation[4] is not RETRET");
  return {};
}

// --- criterion 6: behavior identity across the configuration matrix --------

Outcome check_config_matrix() {
  std::vector<Tier> tiers{Tier::Rtl};
  if (native_supported()) tiers.push_back(Tier::Native);
  const std::optional<std::uint64_t> hotness_values[] = {
      std::optional<std::uint64_t>{1}, std::optional<std::uint64_t>{2},
      std::optional<std::uint64_t>{10}, std::nullopt};
  const std::uint64_t fuel_values[] = {1, 7, 1000};

  for (const std::string& name : testsupport::corpus_names()) {
    Program p = load_corpus(name);
    std::optional<Behavior> first;
    for (Tier tier : tiers)
      for (StackImpl stack : {StackImpl::Structured, StackImpl::Flat})
        for (auto hotness : hotness_values)
          for (std::uint64_t fuel : fuel_values) {
            JitConfig cfg = tuned(name, JitConfig{});
            cfg.tier = tier;
            cfg.stack_impl = stack;
            cfg.hotness = hotness;
            cfg.fuel = fuel;
            Behavior b = jit_run(p, cfg);
            if (!first) {
              first = b;
            } else if (!(b == *first)) {
              return fail(name + " diverges: " + describe(b) + " vs " +
                          describe(*first));
            }
          }
  }
  return {};
}

// --- criterion 7: the native tier agrees with the RTL VM -------------------

struct UnitOutcome {
  std::string error;
  ExecResult res{};
};

Outcome check_native_tier() {
  if (!native_supported())
    return skip("native tier unsupported on this host");
  for (int i = 0; i < kNativeUnits; ++i) {
    std::uint64_t seed = kNativeUnitBaseSeed + static_cast<std::uint64_t>(i);
    Rng rng(seed);
    RTLUnit u = generate_unit(rng);
    std::vector<Value> preload = generate_stack(rng);
    StructuredRuntime ra, rb;
    for (Value v : preload) {
      ra.stk_push(v);
      rb.stk_push(v);
    }
    UnitOutcome a, b;
    try {
      a.res = rtl_run(u, ra, 200'000);
    } catch (const EngineError& e) {
      a.error = e.what();
    }
    try {
      b.res = native_run(*install_native(emit_unit(u)), rb, 200'000);
    } catch (const EngineError& e) {
      b.error = e.what();
    }
    if (a.error != b.error || a.res.cap_reached != b.res.cap_reached ||
        (a.error.empty() && !a.res.cap_reached && a.res.status != b.res.status))
      return fail("seed " + std::to_string(seed) + ": status mismatch");
    if (ra.trace() != rb.trace() || ra.heap() != rb.heap() ||
        !(ra.stack_elems() == rb.stack_elems()))
      return fail("seed " + std::to_string(seed) + ": post-state mismatch");
  }
  return {};
}

// --- criterion 8: the bundled benchmark shows the expected speedups --------

Outcome check_benchmark(std::string& measured) {
  Program p = load_program("bench/prime_bench.cir");
  JitConfig rtl_cfg;
  rtl_cfg.tier = Tier::Rtl;
  BenchResult rtl = run_bench(p, rtl_cfg, kBenchReps);
  char buf[160];
  if (!rtl.consistent || rtl.behavior.status != RunStatus::Terminated)
    return fail("rtl benchmark runs were not consistent");
  if (rtl.speedup < kRtlSpeedupMin) {
    std::snprintf(buf, sizeof buf, "rtl speedup %.2f < %.2f", rtl.speedup,
                  kRtlSpeedupMin);
    return fail(buf);
  }
  std::snprintf(buf, sizeof buf, "rtl %.2fx", rtl.speedup);
  measured = buf;
  if (!native_supported()) {
    measured += ", native skipped (unsupported host)";
    return {};
  }
  JitConfig native_cfg;
  native_cfg.tier = Tier::Native;
  BenchResult nat = run_bench(p, native_cfg, kBenchReps);
  if (!nat.consistent || nat.behavior.status != RunStatus::Terminated)
    return fail("native benchmark runs were not consistent");
  if (nat.speedup < kNativeSpeedupMin) {
    std::snprintf(buf, sizeof buf, "native speedup %.2f < %.2f", nat.speedup,
                  kNativeSpeedupMin);
    return fail(buf);
  }
  std::snprintf(buf, sizeof buf, ", native %.2fx", nat.speedup);
  measured += buf;
  if (!(rtl.behavior == nat.behavior))
    return fail("benchmark behaviors differ between tiers");
  return {};
}

// --- criterion 9: the out-of-range message is literal everywhere -----------

Outcome check_oob_message() {
  Program p = load_corpus("heap_oob.cir");
  Behavior ref = ref_run(p);
  if (ref.status != RunStatus::Errored || ref.error != kOobMessage)
    return fail("reference: " + describe(ref));
  std::vector<Tier> tiers{Tier::Rtl};
  if (native_supported()) tiers.push_back(Tier::Native);
  for (Tier tier : tiers)
    for (StackImpl stack : {StackImpl::Structured, StackImpl::Flat}) {
      JitConfig cfg;
      cfg.tier = tier;
      cfg.stack_impl = stack;
      cfg.hotness = 1;  // force the erring function through the compiled tier
      Behavior b = jit_run(p, cfg);
      if (b.status != RunStatus::Errored || b.error != kOobMessage ||
          b.trace != ref.trace)
        return fail("engine: " + describe(b));
    }
  return {};
}

// --- driver -----------------------------------------------------------------

int run_all() {
  int failures = 0;
  auto report = [&](int id, const char* label, const Outcome& o, double secs,
                    double budget) {
    bool over = budget > 0.0 && secs > budget;
    const char* verdict = o.skipped ? "skip" : (o.ok && !over) ? "pass" : "FAIL";
    std::printf("criterion %d: %-58s %s (%.1f s)", id, label, verdict, secs);
    if (!o.detail.empty()) std::printf(" [%s]", o.detail.c_str());
    if (over) std::printf(" [exceeded %.0f s budget]", budget);
    std::printf("\n");
    std::fflush(stdout);
    if (!o.ok || over) ++failures;
  };
  auto timed = [&](int id, const char* label, auto&& fn, double budget) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o = fn();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, label, o, secs, budget);
  };

  timed(1, "corpus + 1000 fuzzed programs refine the reference",
        check_refinement, kRefinementBudgetSec);
  timed(2, "10000 primitive sequences agree on both stack implementations",
        check_prim_equivalence, kPrimBudgetSec);
  timed(3, "deoptimization agrees between interpreter and compiled routes",
        check_deopt_agreement, 0.0);
  timed(4, "injected compile failures leave every trace unchanged",
        check_compile_failure_fallback, 0.0);
  timed(5, "the running example lowers to the expected unit shapes",
        check_running_example_shape, 0.0);
  timed(6, "behaviors identical across tier/stack/hotness/fuel matrix",
        check_config_matrix, 0.0);
  timed(7, "100 fuzzed units agree between native tier and RTL VM",
        check_native_tier, 0.0);
  std::string measured;
  timed(8, "prime benchmark speedup: rtl >= 2.0, native >= 5.0",
        [&] {
          Outcome o = check_benchmark(measured);
          if (o.ok && o.detail.empty()) o.detail = measured;
          return o;
        },
        kBenchBudgetSec);
  timed(9, "heap overrun reports the literal out-of-range message everywhere",
        check_oob_message, 0.0);

  if (failures == 0) {
    std::printf("acceptance: all 9 criteria passed\n");
  } else {
    std::printf("acceptance: %d criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main() {
  try {
    return run_all();
  } catch (const std::exception& e) {
    std::printf("acceptance: aborted: %s\n", e.what());
    return 2;
  }
}

#include "tjit/monitor.hpp"

#include <algorithm>
#include <limits>

#include "tjit/interp.hpp"
#include "tjit/nativegen.hpp"
#include "tjit/rtlvm.hpp"

namespace tjit {

void profiler_observe(ProfilerState& ps, const FunName& fun) {
  ++ps.call_counts[fun];
}

bool profiler_suggest(const ProfilerState& ps, const Program& p,
                      const Runtime& rt, const FunName& fun) {
  if (!ps.threshold) return false;
  if (ps.do_not_compile.count(fun)) return false;
  auto idx = p.idx_of(fun);
  if (!idx || rt.check_installed(*idx)) return false;
  auto it = ps.call_counts.find(fun);
  return it != ps.call_counts.end() && it->second >= *ps.threshold;
}

SynthFrame synth_frame(const Program& p, Runtime& rt) {
  constexpr Value kMaxId = std::numeric_limits<std::uint32_t>::max();
  auto corrupt = [] { return EngineError("corrupt deopt payload"); };

  Value fidx = rt.stk_pop();
  if (fidx < 1 || static_cast<std::uint64_t>(fidx) > p.functions.size())
    throw corrupt();
  Value label = rt.stk_pop();
  if (label < 1 || label > kMaxId) throw corrupt();
  Value count = rt.stk_pop();
  if (count < 0) throw corrupt();

  RegMap regs;
  for (Value k = 0; k < count; ++k) {
    Value v = rt.stk_pop();
    Value rid = rt.stk_pop();
    if (rid < 1 || rid > kMaxId) throw corrupt();
    // Entries come off in reverse varmap order; emplace keeps the last
    // varmap entry for a register, like the interpreter does.
    regs.emplace(static_cast<RegId>(rid), v);
  }
  return SynthFrame{p.by_idx(static_cast<FunIdx>(fidx))->name,
                    static_cast<LabelId>(label), std::move(regs)};
}

namespace {

// Machine states of the engine loop.
struct StMonitor {
  SynchroState sync;
};
struct StOptimization {
  FunName fun;
  DirectCall pending;
};
struct StDispatch {
  DirectCall call;
};
struct StIrExec {
  FunName fun;
  VersionTag tag = VersionTag::Base;
  LabelId label = 0;
  RegMap regs;
};
struct StNativeExec {
  CodeKey key;
};
struct StDone {
  Value value = 0;
};
struct StCapped {};

using MachineState = std::variant<StMonitor, StOptimization, StDispatch,
                                  StIrExec, StNativeExec, StDone, StCapped>;

class Engine {
 public:
  Engine(const Program& p, const JitConfig& cfg, Runtime& rt)
      : p_(p), cfg_(cfg), rt_(rt) {
    ps_.threshold = cfg.hotness;
  }

  Behavior run() {
    MachineState st = StMonitor{DirectCall{"main", {}}};
    try {
      for (std::uint64_t n = 0; n < cfg_.step_cap; ++n) {
        if (const auto* done = std::get_if<StDone>(&st))
          return terminated(trace_copy(), done->value);
        if (std::holds_alternative<StCapped>(st)) break;
        st = std::visit([&](auto&& s) { return step(std::move(s)); },
                        std::move(st));
      }
      if (const auto* done = std::get_if<StDone>(&st))
        return terminated(trace_copy(), done->value);
      return step_cap_reached(trace_copy());
    } catch (const EngineError& e) {
      return errored(trace_copy(), e.what());
    }
  }

 private:
  std::vector<Value> trace_copy() const { return rt_.trace(); }

  void log(const std::string& line) {
    if (cfg_.log) *cfg_.log << line << "\n";
  }

  MachineState step(StMonitor m) {
    return std::visit(
        [&](auto&& sync) -> MachineState {
          using T = std::decay_t<decltype(sync)>;
          if constexpr (std::is_same_v<T, DirectCall>) {
            return observe_call(std::move(sync));
          } else if constexpr (std::is_same_v<T, OnStackCall>) {
            return observe_call(normalize_call());
          } else if constexpr (std::is_same_v<T, DirectReturn>) {
            return resume_after_return(sync.value);
          } else if constexpr (std::is_same_v<T, OnStackReturn>) {
            return resume_after_return(rt_.stk_pop());
          } else if constexpr (std::is_same_v<T, DirectDeopt>) {
            if (cfg_.log)
              log("monitor: deopt -> '" + sync.target + "' base @ l" +
                  std::to_string(sync.label));
            return StIrExec{std::move(sync.target), VersionTag::Base,
                            sync.label, std::move(sync.regs)};
          } else {  // OnStackDeopt
            SynthFrame sf = synth_frame(p_, rt_);
            if (cfg_.log)
              log("monitor: deopt on stack -> '" + sf.fun + "' base @ l" +
                  std::to_string(sf.label));
            return StIrExec{std::move(sf.fun), VersionTag::Base, sf.label,
                            std::move(sf.regs)};
          }
        },
        std::move(m.sync));
  }

  DirectCall normalize_call() {
    Value fidx = rt_.stk_pop();
    const Function* f =
        (fidx >= 1 && static_cast<std::uint64_t>(fidx) <= p_.functions.size())
            ? p_.by_idx(static_cast<FunIdx>(fidx))
            : nullptr;
    if (!f) throw EngineError("corrupt stack");
    Value count = rt_.stk_pop();
    if (count < 0) throw EngineError("corrupt stack");
    std::vector<Value> args;
    for (Value k = 0; k < count; ++k) args.push_back(rt_.stk_pop());
    std::reverse(args.begin(), args.end());  // back to declaration order
    return DirectCall{f->name, std::move(args)};
  }

  MachineState observe_call(DirectCall call) {
    if (cfg_.log)
      log("monitor: call '" + call.callee + "' (" +
          std::to_string(call.args.size()) + " args)");
    profiler_observe(ps_, call.callee);
    bool suggest;
    if (cfg_.suggest_hook) {
      auto idx = p_.idx_of(call.callee);
      suggest = !ps_.do_not_compile.count(call.callee) && idx &&
                !rt_.check_installed(*idx) && cfg_.suggest_hook(ps_, call.callee);
    } else {
      suggest = profiler_suggest(ps_, p_, rt_, call.callee);
    }
    if (suggest) {
      FunName fun = call.callee;
      return StOptimization{std::move(fun), std::move(call)};
    }
    return StDispatch{std::move(call)};
  }

  MachineState resume_after_return(Value v) {
    OpenedFrame frame = rt_.open_sf();
    return std::visit(
        [&](auto&& fr) -> MachineState {
          using T = std::decay_t<decltype(fr)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            if (cfg_.log)
              log("monitor: return " + std::to_string(v) + " -> final");
            return StDone{v};
          } else if constexpr (std::is_same_v<T, IRFrame>) {
            if (cfg_.log)
              log("monitor: return " + std::to_string(v) + " -> resume '" +
                  fr.fun + "' @ l" + std::to_string(fr.resume_label));
            RegMap regs = std::move(fr.regs);
            regs[fr.ret_reg] = v;
            return StIrExec{std::move(fr.fun), fr.tag, fr.resume_label,
                            std::move(regs)};
          } else {  // NativeFrame
            CodeKey key{fr.fun, SegmentKey::cont_at(fr.cont_label)};
            if (cfg_.log)
              log("monitor: return " + std::to_string(v) + " -> continuation " +
                  to_string(key));
            rt_.stk_push(v);  // the continuation prologue pops it
            return StNativeExec{key};
          }
        },
        std::move(frame));
  }

  MachineState step(StOptimization o) {
    CompileResult r =
        compile_function(p_, o.fun, rt_, cfg_.tier, cfg_.compile);
    if (r.ok) {
      if (cfg_.log) log("optimization: compile '" + o.fun + "' -> ok");
    } else {
      ps_.do_not_compile.insert(o.fun);
      if (cfg_.log)
        log("optimization: compile '" + o.fun + "' -> cancelled: " + r.reason);
    }
    return StDispatch{std::move(o.pending)};
  }

  MachineState step(StDispatch d) {
    auto maybe_idx = p_.idx_of(d.call.callee);
    if (!maybe_idx)
      throw EngineError("unknown function '" + d.call.callee + "'");
    FunIdx idx = *maybe_idx;
    const Function* f = p_.by_idx(idx);
    if (f->params.size() != d.call.args.size())
      throw EngineError("arity mismatch calling '" + d.call.callee + "'");
    if (rt_.check_installed(idx)) {
      CodeKey key{idx, SegmentKey::entry()};
      if (cfg_.log)
        log("dispatch: '" + d.call.callee + "' -> native execution " +
            to_string(key));
      for (Value v : d.call.args) rt_.stk_push(v);
      return StNativeExec{key};
    }
    RegMap regs;
    for (std::size_t k = 0; k < f->params.size(); ++k)
      regs[f->params[k]] = d.call.args[k];
    const Version& ver = current_version(*f);
    if (cfg_.log)
      log("dispatch: '" + d.call.callee + "' -> ir execution @ l" +
          std::to_string(ver.entry));
    return StIrExec{std::move(d.call.callee), current_tag(*f), ver.entry,
                    std::move(regs)};
  }

  MachineState step(StIrExec ie) {
    InterpOutcome out = interp_slice(p_, ie.fun, ie.tag, ie.label,
                                     std::move(ie.regs), cfg_.fuel, rt_);
    return std::visit(
        [&](auto&& o) -> MachineState {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, SyncCall>) {
            return StMonitor{DirectCall{std::move(o.callee), std::move(o.args)}};
          } else if constexpr (std::is_same_v<T, SyncReturn>) {
            return StMonitor{DirectReturn{o.value}};
          } else if constexpr (std::is_same_v<T, SyncDeopt>) {
            return StMonitor{DirectDeopt{std::move(o.target), o.target_label,
                                         std::move(o.regs)}};
          } else {  // OutOfFuel
            if (cfg_.log)
              log("ir execution: '" + o.fun + "' out of fuel @ l" +
                  std::to_string(o.label));
            return StIrExec{std::move(o.fun), o.tag, o.label,
                            std::move(o.regs)};
          }
        },
        std::move(out));
  }

  MachineState step(StNativeExec ne) {
    const CompiledUnit& unit = rt_.load_code(ne.key);
    ExecResult res = unit.tier == Tier::Native
                         ? native_run(*unit.native, rt_, cfg_.exec_cap)
                         : rtl_run(*unit.rtl, rt_, cfg_.exec_cap);
    if (res.cap_reached) {
      if (cfg_.log)
        log("native execution: " + to_string(ne.key) + " -> step cap");
      return StCapped{};
    }
    if (cfg_.log)
      log("native execution: " + to_string(ne.key) + " -> " +
          status_name(res.status));
    if (res.status == RETCALL) return StMonitor{OnStackCall{}};
    if (res.status == RETRET) return StMonitor{OnStackReturn{}};
    if (res.status == RETDEOPT) return StMonitor{OnStackDeopt{}};
    throw EngineError("invalid unit status");
  }

  MachineState step(StDone d) { return d; }
  MachineState step(StCapped c) { return c; }

  const Program& p_;
  const JitConfig& cfg_;
  Runtime& rt_;
  ProfilerState ps_;
};

}  // namespace

Behavior jit_run_with(const Program& p, const JitConfig& cfg, Runtime& rt) {
  return Engine(p, cfg, rt).run();
}

Behavior jit_run(const Program& p, const JitConfig& cfg) {
  RuntimeOptions opts;
  opts.heap_size = cfg.heap_size;
  std::unique_ptr<Runtime> rt = make_runtime(cfg.stack_impl, opts);
  return jit_run_with(p, cfg, *rt);
}

}  // namespace tjit

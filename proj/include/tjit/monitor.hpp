#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <set>
#include <unordered_map>
#include <variant>

#include "tjit/backend.hpp"
#include "tjit/behavior.hpp"
#include "tjit/coreir.hpp"
#include "tjit/runtime.hpp"

namespace tjit {

// Synchronization states the tiers hand to the monitor. Direct variants come
// from the interpreter; OnStack variants from compiled code, whose payload
// still sits on the execution stack until the monitor normalizes it.
struct DirectCall {
  FunName callee;
  std::vector<Value> args;
};
struct OnStackCall {};
struct DirectReturn {
  Value value = 0;
};
struct OnStackReturn {};
struct DirectDeopt {
  FunName target;
  LabelId label = 0;
  RegMap regs;
};
struct OnStackDeopt {};

using SynchroState = std::variant<DirectCall, OnStackCall, DirectReturn,
                                  OnStackReturn, DirectDeopt, OnStackDeopt>;

struct ProfilerState {
  std::unordered_map<FunName, std::uint64_t> call_counts;
  std::optional<std::uint64_t> threshold;  // nullopt: never suggest
  std::set<FunName> do_not_compile;
};

void profiler_observe(ProfilerState& ps, const FunName& fun);

// Default heuristic: enough calls, not blacklisted, not already compiled.
// Any replacement heuristic may only change what gets compiled when, never
// the observable behavior.
bool profiler_suggest(const ProfilerState& ps, const Program& p,
                      const Runtime& rt, const FunName& fun);

// Decodes the deoptimization payload compiled code leaves on the stack and
// rebuilds what the interpreter needs: exactly the SyncDeopt it would have
// produced at the same program point.
struct SynthFrame {
  FunName fun;
  LabelId label = 0;
  RegMap regs;
};

SynthFrame synth_frame(const Program& p, Runtime& rt);

struct JitConfig {
  Tier tier = Tier::Rtl;
  StackImpl stack_impl = StackImpl::Flat;
  std::optional<std::uint64_t> hotness = 2;  // calls before compiling; nullopt: never
  std::uint64_t fuel = 1000;                 // interpreter instructions per slice
  std::size_t heap_size = 4096;
  std::uint64_t step_cap = 10'000'000;   // monitor transitions per run
  std::uint64_t exec_cap = 100'000'000;  // steps per compiled-unit invocation
  CompileOptions compile;
  // Replaces the default hotness heuristic when set (profiling transparency:
  // must not change any trace).
  std::function<bool(const ProfilerState&, const FunName&)> suggest_hook;
  std::ostream* log = nullptr;  // one line per transition when set
};

// Runs a program under the tiered engine: interpret, profile, compile hot
// functions, dispatch to compiled units, synthesize frames on
// deoptimization. The behavior refines ref_run's.
Behavior jit_run(const Program& p, const JitConfig& cfg = {});

// Same, against a caller-provided runtime (it sees the final stack, heap,
// repository and trace).
Behavior jit_run_with(const Program& p, const JitConfig& cfg, Runtime& rt);

}  // namespace tjit

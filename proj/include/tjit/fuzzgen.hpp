#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "tjit/coreir.hpp"
#include "tjit/monitor.hpp"
#include "tjit/rtl.hpp"

namespace tjit {

// Deterministic source of randomness for fuzzing: a fixed 64-bit generator
// sampled by modulo, so a seed names the same artifact on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  bool chance(unsigned percent) { return below(100) < percent; }

 private:
  std::mt19937_64 gen_;
};

// A random program that is correct by construction where divergence would be
// unobservable otherwise: every register is assigned before use on all
// paths, loops are bounded by counters, the call graph is acyclic, and
// speculation varmaps cover the registers live at their deoptimization
// target. Heap addresses are usually in range, occasionally not; modulo
// divisors are usually nonzero. Errors are therefore reachable but
// termination is guaranteed for error-free paths.
Program generate_program(Rng& rng);

// A random RTL unit for differential execution of the two tiers. Control
// flow is forward-only (so it terminates without budget intervention) over
// the full instruction and primitive repertoire; primitive errors such as
// popping an empty stack or out-of-range heap access are reachable.
RTLUnit generate_unit(Rng& rng);

// Values to preload on the execution stack before running a fuzzed unit.
std::vector<Value> generate_stack(Rng& rng);

struct FuzzReport {
  std::uint64_t checked = 0;
  bool ok = true;
  std::uint64_t failing_seed = 0;
  std::string detail;  // diagnosis of the first counterexample
};

// Runs `count` generated programs starting at `base_seed` through the engine
// (sweeping stack implementation, tier, hotness and fuel per seed) and
// checks each behavior refines the reference behavior.
FuzzReport run_differential_fuzz(std::uint64_t base_seed, std::uint64_t count,
                                 const JitConfig& base_cfg);

}  // namespace tjit

#pragma once

#include "tjit/behavior.hpp"
#include "tjit/coreir.hpp"
#include "tjit/monitor.hpp"

namespace tjit {

struct BenchResult {
  double interp_ms = 0.0;  // median wall time with compilation disabled
  double jit_ms = 0.0;     // median wall time with the given config
  double speedup = 0.0;    // interp_ms / jit_ms
  Behavior behavior;       // behavior observed on the jit runs
  bool consistent = false;  // every rep produced the same behavior
};

// Times the program under the given config against an interpreter-only
// baseline (same config, compilation threshold removed). Runs `reps`
// repetitions of each and reports medians.
BenchResult run_bench(const Program& p, const JitConfig& cfg, int reps = 5);

}  // namespace tjit

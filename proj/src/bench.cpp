#include "tjit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <vector>

namespace tjit {

namespace {

double median_ms(std::vector<double>& samples) {
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

double timed_run(const Program& p, const JitConfig& cfg, Behavior& out) {
  auto t0 = std::chrono::steady_clock::now();
  out = jit_run(p, cfg);
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace

BenchResult run_bench(const Program& p, const JitConfig& cfg, int reps) {
  if (reps < 1) reps = 1;

  JitConfig interp_cfg = cfg;
  interp_cfg.hotness.reset();  // never compile

  BenchResult r;
  r.consistent = true;

  std::vector<double> interp_times, jit_times;
  Behavior baseline;
  bool have_baseline = false;
  for (int i = 0; i < reps; ++i) {
    Behavior b;
    interp_times.push_back(timed_run(p, interp_cfg, b));
    if (!have_baseline) {
      baseline = b;
      have_baseline = true;
    } else if (!(b == baseline)) {
      r.consistent = false;
    }
  }
  for (int i = 0; i < reps; ++i) {
    Behavior b;
    jit_times.push_back(timed_run(p, cfg, b));
    if (!(b == baseline)) r.consistent = false;
    r.behavior = b;
  }

  r.interp_ms = median_ms(interp_times);
  r.jit_ms = median_ms(jit_times);
  r.speedup = r.jit_ms > 0.0 ? r.interp_ms / r.jit_ms : 0.0;
  return r;
}

}  // namespace tjit

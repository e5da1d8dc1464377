#pragma once

#include <string>
#include <vector>

#include "tjit/coreir.hpp"

namespace tjit {

enum class RunStatus : std::uint8_t { Terminated, Errored, StepCapReached };

// Observable outcome of a whole-program run: the printed trace plus how the
// run ended.
struct Behavior {
  std::vector<Value> trace;
  RunStatus status = RunStatus::Terminated;
  Value result = 0;   // meaningful when Terminated
  std::string error;  // meaningful when Errored

  friend bool operator==(const Behavior&, const Behavior&) = default;
};

inline Behavior terminated(std::vector<Value> trace, Value result) {
  return Behavior{std::move(trace), RunStatus::Terminated, result, ""};
}

inline Behavior errored(std::vector<Value> trace, std::string msg) {
  return Behavior{std::move(trace), RunStatus::Errored, 0, std::move(msg)};
}

inline Behavior step_cap_reached(std::vector<Value> trace) {
  return Behavior{std::move(trace), RunStatus::StepCapReached, 0, ""};
}

inline bool is_trace_prefix(const std::vector<Value>& prefix,
                            const std::vector<Value>& full) {
  if (prefix.size() > full.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), full.begin());
}

// Refinement of a reference behavior by an engine behavior: terminating runs
// must match exactly; erring runs must both err with the reference trace as a
// prefix; capped reference runs only require the engine to cap as well.
inline bool refines(const Behavior& ref, const Behavior& engine) {
  switch (ref.status) {
    case RunStatus::Terminated:
      return engine == ref;
    case RunStatus::Errored:
      return engine.status == RunStatus::Errored &&
             is_trace_prefix(ref.trace, engine.trace);
    case RunStatus::StepCapReached:
      return engine.status == RunStatus::StepCapReached &&
             (is_trace_prefix(ref.trace, engine.trace) ||
              is_trace_prefix(engine.trace, ref.trace));
  }
  return false;
}

std::string to_string(const Behavior& b);

// The CLI's trailing line: "status: Terminated 3" etc.
std::string status_line(const Behavior& b);

// Process exit code: 0 terminated, 1 errored, 2 step cap reached.
int exit_code(const Behavior& b);

}  // namespace tjit

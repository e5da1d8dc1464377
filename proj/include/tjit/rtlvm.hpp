#pragma once

#include <optional>

#include "tjit/rtl.hpp"
#include "tjit/runtime.hpp"

namespace tjit {

// Small-step executor for one RTLUnit invocation.
struct RTLState {
  const RTLUnit* unit = nullptr;
  LabelId label = 0;
  std::vector<Value> vregs;  // zero-initialized, size unit->vreg_count
};

// State at the unit entry. Throws if the entry label is out of range.
RTLState rtl_start(const RTLUnit& u);

// One step. Returns the final status when the unit executes ReturnStatus,
// otherwise advances the state. Primitive errors propagate as EngineError.
std::optional<Value> rtl_step(RTLState& s, Runtime& rt);

struct ExecResult {
  bool cap_reached = false;
  Value status = 0;  // meaningful when !cap_reached
};

// Steps the unit to its final status, or to the cap for diverging code.
ExecResult rtl_run(const RTLUnit& u, Runtime& rt, std::uint64_t step_cap);

}  // namespace tjit

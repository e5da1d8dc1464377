#pragma once

#include <cstddef>
#include <map>

#include "tjit/behavior.hpp"
#include "tjit/coreir.hpp"

namespace tjit {

// Reference interpreter. A deliberately direct, whole-program small-step
// semantics used as the differential oracle for the execution engine; it
// shares nothing with the engine beyond the data model and expression
// evaluation. One frame per activation, one step per instruction.
struct RefFrame {
  FunName fun;
  VersionTag tag = VersionTag::Base;
  LabelId label = 0;
  std::map<RegId, Value> regs;
  RegId ret_reg = 0;  // caller register receiving this frame's return value
};

struct RefState {
  std::vector<RefFrame> frames;
  std::vector<Value> heap;
  std::vector<Value> trace;
  std::uint64_t steps = 0;
};

RefState ref_init(const Program& p, std::size_t heap_size);

// Executes one instruction. Returns the final value when the bottom frame
// returns, std::nullopt while running. Throws EngineError on goes-wrong.
std::optional<Value> ref_step(const Program& p, RefState& s);

Behavior ref_run(const Program& p, std::size_t heap_size = 4096,
                 std::uint64_t step_cap = 10'000'000);

}  // namespace tjit

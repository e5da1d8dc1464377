#pragma once

#include <variant>

#include "tjit/coreir.hpp"
#include "tjit/runtime.hpp"

namespace tjit {

// Synchronization outcomes of a fueled interpreter slice.
struct SyncCall {
  FunName callee;
  std::vector<Value> args;
  friend bool operator==(const SyncCall&, const SyncCall&) = default;
};

struct SyncReturn {
  Value value = 0;
  friend bool operator==(const SyncReturn&, const SyncReturn&) = default;
};

struct SyncDeopt {
  FunName target;
  LabelId target_label = 0;
  RegMap regs;
  friend bool operator==(const SyncDeopt&, const SyncDeopt&) = default;
};

struct OutOfFuel {
  FunName fun;
  VersionTag tag = VersionTag::Base;
  LabelId label = 0;
  RegMap regs;
  friend bool operator==(const OutOfFuel&, const OutOfFuel&) = default;
};

using InterpOutcome = std::variant<SyncCall, SyncReturn, SyncDeopt, OutOfFuel>;

// Runs at most `fuel` instructions (fuel >= 1) of one activation through the
// runtime's primitives. Stops early at synchronization points: before
// returning SyncCall the interpreter has already parked its own activation
// on the stack via push_irsf. An exhausted slice snapshots the activation so
// a later slice can resume it; chaining slices is observationally identical
// to one larger slice. Never touches the code repository.
InterpOutcome interp_slice(const Program& p, const FunName& fun, VersionTag tag,
                           LabelId label, RegMap regs, std::uint64_t fuel,
                           Runtime& rt);

}  // namespace tjit

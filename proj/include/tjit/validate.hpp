#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tjit/coreir.hpp"

namespace tjit {

struct Violation {
  FunName fun;
  std::optional<LabelId> label;
  std::string reason;
  bool warning = false;
  friend bool operator==(const Violation&, const Violation&) = default;
};

std::string to_string(const Violation& v);

// Structural checks beyond what the parser can express: label targets exist,
// callees and deopt targets exist, varmap destinations are distinct, params
// are distinct, and "main" exists with no parameters. Speculation in a base
// version is reported as a warning only. Deterministic order: functions in
// declaration order, labels ascending.
std::vector<Violation> validate_program(const Program& p);

// True when validate_program reports no errors (warnings allowed).
bool is_valid(const Program& p);

}  // namespace tjit

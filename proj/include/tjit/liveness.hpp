#pragma once

#include <map>
#include <optional>
#include <set>

#include "tjit/coreir.hpp"

namespace tjit {

using RegSet = std::set<RegId>;

struct LiveSets {
  std::map<LabelId, RegSet> live_in;
  std::map<LabelId, RegSet> live_out;
};

RegSet expr_uses(const Expr& e);
RegSet instr_uses(const Instr& ins);
std::optional<RegId> instr_def(const Instr& ins);
std::vector<LabelId> instr_succs(const Instr& ins);

// Backward dataflow over one version's label graph, to a fixed point.
// A register is live at a label if some path from it reaches a use before
// any redefinition. Varmap expressions of an Assume count as uses: the
// deoptimization edge needs them evaluable.
LiveSets compute_liveness(const Version& v);

}  // namespace tjit

#pragma once

#include <string>
#include <vector>

#include "tjit/coreir.hpp"
#include "tjit/liveness.hpp"
#include "tjit/rtl.hpp"
#include "tjit/runtime.hpp"

namespace tjit {

// A compilation unit of one function version: the entry piece, or the
// continuation resuming after the call at `key.cont`.
struct Segment {
  SegmentKey key;
  LabelId root = 0;             // version label the segment starts at
  std::vector<LabelId> labels;  // ascending; reachable up to and incl. calls
};

// One Entry segment rooted at the version entry plus one Cont segment per
// Call instruction, rooted at that call's next label. Reachability stops at
// Call instructions: they are segment exits.
std::vector<Segment> split_version(const Version& v);
std::vector<Segment> split_function(const Function& f);

struct CompileOptions {
  // Forces Cancelled before any code is generated; the run must then keep
  // interpreting with identical observable behavior.
  bool inject_failure = false;
  // Deliberately restores saved registers in the wrong order. Never set in
  // real runs; the differential fuzzer plants it to prove it would catch a
  // calling-convention bug.
  bool scramble_cont_restore = false;
};

// Lowers one segment to basic blocks under the calling conventions:
//   block 0        entry/cont prologue (pops), omitted when empty
//   block l        the CoreIR instruction at version label l
//   blocks > max   deoptimization exits of Assume instructions
RTLBlockUnit gen_segment(const Program& p, const Function& f, const Version& v,
                         const Segment& seg, const LiveSets& live,
                         const CompileOptions& opts = {});

// Unfolds blocks into label-per-instruction form. Layout is the entry block
// first, then remaining blocks by ascending id; Goto terminators of nonempty
// blocks are elided by wiring the last instruction straight to the target.
RTLUnit flatten(const RTLBlockUnit& b);

struct CompileResult {
  bool ok = false;
  std::string reason;  // set when cancelled
};

// Compiles current_version(fun) and installs all its segments under their
// CodeKeys, all or nothing. Any failure leaves the repository unchanged and
// reports Cancelled; the caller decides never to retry.
CompileResult compile_function(const Program& p, const FunName& fun,
                               Runtime& rt, Tier tier,
                               const CompileOptions& opts = {});

}  // namespace tjit

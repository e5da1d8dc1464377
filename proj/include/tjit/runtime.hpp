#pragma once

#include <functional>
#include <map>
#include <memory>
#include <variant>
#include <vector>

#include "tjit/coreir.hpp"

namespace tjit {

// A suspended interpreter activation, parked on the stack across a call.
struct IRFrame {
  RegId ret_reg = 0;       // register receiving the callee's return value
  FunName fun;
  VersionTag tag = VersionTag::Base;
  LabelId resume_label = 0;
  RegMap regs;
  friend bool operator==(const IRFrame&, const IRFrame&) = default;
};

// A suspended compiled activation: the two integers a compiled call pushes
// to name its continuation unit (function index, then call label on top).
struct NativeFrame {
  FunIdx fun = 0;
  LabelId cont_label = 0;
  friend bool operator==(const NativeFrame&, const NativeFrame&) = default;
};

using StackElem = std::variant<Value, IRFrame>;

// open_sf result: empty stack, an interpreter frame, or a compiled frame.
using OpenedFrame = std::variant<std::monostate, IRFrame, NativeFrame>;

// Code repository key: a function's entry unit, or the continuation unit
// resuming after the call at `cont` (0 means entry).
struct SegmentKey {
  LabelId cont = 0;
  static SegmentKey entry() { return {0}; }
  static SegmentKey cont_at(LabelId l) { return {l}; }
  bool is_entry() const { return cont == 0; }
  friend auto operator<=>(const SegmentKey&, const SegmentKey&) = default;
};

struct CodeKey {
  FunIdx fun = 0;
  SegmentKey seg;
  friend auto operator<=>(const CodeKey&, const CodeKey&) = default;
};

// "$3" for an entry unit, "$3.l5" for the continuation of the call at l5.
std::string to_string(const CodeKey& key);

enum class Tier : std::uint8_t { Rtl, Native };

struct RTLUnit;
class NativeCode;

struct CompiledUnit {
  std::shared_ptr<const RTLUnit> rtl;
  std::shared_ptr<const NativeCode> native;  // set when tier == Native
  Tier tier = Tier::Rtl;
  friend bool operator==(const CompiledUnit& a, const CompiledUnit& b) {
    return a.rtl == b.rtl && a.native == b.native && a.tier == b.tier;
  }
};

struct RuntimeOptions {
  std::size_t heap_size = 4096;
  std::size_t int_stack_capacity = std::size_t{1} << 16;
  std::size_t frame_stack_capacity = std::size_t{1} << 12;
};

// The impure heart of the engine: heap, execution stack, code repository and
// print sink, exposed as primitives shared by the interpreter, the RTL
// executor and generated native code.
//
// Every primitive is atomic: on error it throws EngineError and leaves the
// state untouched. Only the stack representation differs between the two
// implementations; heap, repository and trace live in the base class.
class Runtime {
 public:
  explicit Runtime(RuntimeOptions opts);
  virtual ~Runtime() = default;

  Value heap_get(Value addr) const;
  void heap_set(Value addr, Value v);
  void print_val(Value v);
  void install_code(const CodeKey& key, CompiledUnit unit);
  const CompiledUnit& load_code(const CodeKey& key) const;
  bool check_installed(FunIdx fun) const;

  virtual void stk_push(Value v) = 0;
  virtual Value stk_pop() = 0;
  virtual void push_irsf(IRFrame f) = 0;
  virtual OpenedFrame open_sf() = 0;

  // Interleaved bottom-to-top view of the execution stack.
  virtual std::vector<StackElem> stack_elems() const = 0;

  const std::vector<Value>& heap() const { return heap_; }
  const std::vector<Value>& trace() const { return trace_; }
  const std::map<CodeKey, CompiledUnit>& repository() const { return repo_; }
  void set_print_sink(std::function<void(Value)> sink) { sink_ = std::move(sink); }

 protected:
  RuntimeOptions opts_;

 private:
  std::vector<Value> heap_;
  std::map<CodeKey, CompiledUnit> repo_;
  std::vector<Value> trace_;
  std::function<void(Value)> sink_;
};

// One interleaved stack of integers and interpreter frames.
class StructuredRuntime final : public Runtime {
 public:
  explicit StructuredRuntime(RuntimeOptions opts = {}) : Runtime(opts) {}

  void stk_push(Value v) override;
  Value stk_pop() override;
  void push_irsf(IRFrame f) override;
  OpenedFrame open_sf() override;
  std::vector<StackElem> stack_elems() const override;

 private:
  std::vector<StackElem> stack_;
};

// Split stacks: a bounded flat buffer of integers plus a separate frame
// stack. Ordering between the two is witnessed per frame by the integer
// depth at which it was pushed; the witness is what lets open_sf and stk_pop
// reproduce the structured runtime's behavior exactly, including its errors.
class FlatRuntime final : public Runtime {
 public:
  explicit FlatRuntime(RuntimeOptions opts = {});

  void stk_push(Value v) override;
  Value stk_pop() override;
  void push_irsf(IRFrame f) override;
  OpenedFrame open_sf() override;
  std::vector<StackElem> stack_elems() const override;

 private:
  // Integers above the most recent frame belong to compiled activations;
  // depth witnesses are non-decreasing because pops never cross the last
  // frame boundary.
  std::size_t boundary() const {
    return frame_depths_.empty() ? 0 : frame_depths_.back();
  }

  std::vector<Value> ints_;
  std::vector<IRFrame> frames_;
  std::vector<std::size_t> frame_depths_;  // ints_.size() at each push_irsf
};

enum class StackImpl : std::uint8_t { Structured, Flat };

std::unique_ptr<Runtime> make_runtime(StackImpl impl, RuntimeOptions opts = {});

// Executable refinement check: the flat runtime's merged stack view, heap,
// repository and trace must equal the structured runtime's.
bool relate(const StructuredRuntime& a, const FlatRuntime& b);

}  // namespace tjit

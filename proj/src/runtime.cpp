#include "tjit/runtime.hpp"

namespace tjit {
namespace {

bool valid_native_pair(Value fun, Value cont) {
  return fun >= 1 && fun <= static_cast<Value>(UINT32_MAX) && cont >= 1 &&
         cont <= static_cast<Value>(UINT32_MAX);
}

}  // namespace

std::string to_string(const CodeKey& key) {
  std::string s = "$" + std::to_string(key.fun);
  if (!key.seg.is_entry()) s += ".l" + std::to_string(key.seg.cont);
  return s;
}

Runtime::Runtime(RuntimeOptions opts) : opts_(opts) {
  heap_.assign(opts.heap_size, 0);
}

Value Runtime::heap_get(Value addr) const {
  if (static_cast<std::uint64_t>(addr) >= heap_.size())
    throw EngineError("MemGet out of memory range");
  return heap_[static_cast<std::size_t>(addr)];
}

void Runtime::heap_set(Value addr, Value v) {
  if (static_cast<std::uint64_t>(addr) >= heap_.size())
    throw EngineError("MemSet out of memory range");
  heap_[static_cast<std::size_t>(addr)] = v;
}

void Runtime::print_val(Value v) {
  trace_.push_back(v);
  if (sink_) sink_(v);
}

void Runtime::install_code(const CodeKey& key, CompiledUnit unit) {
  if (repo_.count(key)) throw EngineError("already installed");
  repo_.emplace(key, std::move(unit));
}

const CompiledUnit& Runtime::load_code(const CodeKey& key) const {
  auto it = repo_.find(key);
  if (it == repo_.end()) throw EngineError("code not installed");
  return it->second;
}

bool Runtime::check_installed(FunIdx fun) const {
  return repo_.count(CodeKey{fun, SegmentKey::entry()}) != 0;
}

// --- structured ---

void StructuredRuntime::stk_push(Value v) { stack_.emplace_back(v); }

Value StructuredRuntime::stk_pop() {
  if (stack_.empty()) throw EngineError("Pop on empty stack");
  const Value* v = std::get_if<Value>(&stack_.back());
  if (!v) throw EngineError("Pop on non-integer top");
  Value out = *v;
  stack_.pop_back();
  return out;
}

void StructuredRuntime::push_irsf(IRFrame f) { stack_.emplace_back(std::move(f)); }

OpenedFrame StructuredRuntime::open_sf() {
  if (stack_.empty()) return std::monostate{};
  if (IRFrame* f = std::get_if<IRFrame>(&stack_.back())) {
    IRFrame out = std::move(*f);
    stack_.pop_back();
    return out;
  }
  // Top integer: expect a compiled close pair, call label above the function
  // index. Validate before popping so a malformed boundary has no effect.
  if (stack_.size() < 2 || !std::holds_alternative<Value>(stack_[stack_.size() - 2]))
    throw EngineError("corrupt stack");
  Value cont = std::get<Value>(stack_.back());
  Value fun = std::get<Value>(stack_[stack_.size() - 2]);
  if (!valid_native_pair(fun, cont)) throw EngineError("corrupt stack");
  stack_.pop_back();
  stack_.pop_back();
  return NativeFrame{static_cast<FunIdx>(fun), static_cast<LabelId>(cont)};
}

std::vector<StackElem> StructuredRuntime::stack_elems() const { return stack_; }

// --- flat ---

FlatRuntime::FlatRuntime(RuntimeOptions opts) : Runtime(opts) {
  ints_.reserve(opts.int_stack_capacity);
  frames_.reserve(opts.frame_stack_capacity);
}

void FlatRuntime::stk_push(Value v) {
  if (ints_.size() >= opts_.int_stack_capacity)
    throw EngineError("stack overflow");
  ints_.push_back(v);
}

Value FlatRuntime::stk_pop() {
  if (!frames_.empty() && frame_depths_.back() == ints_.size())
    throw EngineError("Pop on non-integer top");
  if (ints_.empty()) throw EngineError("Pop on empty stack");
  Value out = ints_.back();
  ints_.pop_back();
  return out;
}

void FlatRuntime::push_irsf(IRFrame f) {
  if (frames_.size() >= opts_.frame_stack_capacity)
    throw EngineError("stack overflow");
  frames_.push_back(std::move(f));
  frame_depths_.push_back(ints_.size());
}

OpenedFrame FlatRuntime::open_sf() {
  const std::size_t above = ints_.size() - boundary();
  if (above == 0) {
    if (frames_.empty()) return std::monostate{};
    IRFrame out = std::move(frames_.back());
    frames_.pop_back();
    frame_depths_.pop_back();
    return out;
  }
  if (above < 2) throw EngineError("corrupt stack");
  Value cont = ints_[ints_.size() - 1];
  Value fun = ints_[ints_.size() - 2];
  if (!valid_native_pair(fun, cont)) throw EngineError("corrupt stack");
  ints_.pop_back();
  ints_.pop_back();
  return NativeFrame{static_cast<FunIdx>(fun), static_cast<LabelId>(cont)};
}

std::vector<StackElem> FlatRuntime::stack_elems() const {
  std::vector<StackElem> out;
  out.reserve(ints_.size() + frames_.size());
  std::size_t fi = 0;
  for (std::size_t i = 0; i <= ints_.size(); ++i) {
    while (fi < frames_.size() && frame_depths_[fi] == i) out.emplace_back(frames_[fi++]);
    if (i < ints_.size()) out.emplace_back(ints_[i]);
  }
  return out;
}

std::unique_ptr<Runtime> make_runtime(StackImpl impl, RuntimeOptions opts) {
  if (impl == StackImpl::Structured)
    return std::make_unique<StructuredRuntime>(opts);
  return std::make_unique<FlatRuntime>(opts);
}

bool relate(const StructuredRuntime& a, const FlatRuntime& b) {
  return a.stack_elems() == b.stack_elems() && a.heap() == b.heap() &&
         a.repository() == b.repository() && a.trace() == b.trace();
}

}  // namespace tjit

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "tjit/rtl.hpp"
#include "tjit/rtlvm.hpp"
#include "tjit/runtime.hpp"

namespace tjit {

// True when this build can emit and execute machine code for the host.
bool native_supported();

// An installed piece of machine code: an executable, write-protected memory
// region owned for the lifetime of the handle.
class NativeCode {
 public:
  NativeCode(const NativeCode&) = delete;
  NativeCode& operator=(const NativeCode&) = delete;
  ~NativeCode();

  const void* entry() const { return mem_; }
  std::size_t size() const { return len_; }

 private:
  NativeCode(void* mem, std::size_t len) : mem_(mem), len_(len) {}
  friend std::shared_ptr<const NativeCode> install_native(
      const std::vector<std::uint8_t>& bytes);

  void* mem_ = nullptr;
  std::size_t len_ = 0;
};

// Emits host machine code performing exactly the unit's step sequence.
// Primitives are reached indirectly through a per-invocation context, so the
// bytes contain no absolute addresses. Throws EngineError when the host is
// unsupported.
std::vector<std::uint8_t> emit_unit(const RTLUnit& u);

// Copies the bytes into fresh executable memory (write, then protect).
// Throws EngineError on allocation or protection failure.
std::shared_ptr<const NativeCode> install_native(
    const std::vector<std::uint8_t>& bytes);

// Runs installed code against the runtime, with the same contract as
// rtl_run: a status, a cap marker for diverging code, or a propagated
// primitive error.
ExecResult native_run(const NativeCode& code, Runtime& rt,
                      std::uint64_t step_cap);

}  // namespace tjit

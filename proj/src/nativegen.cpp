#include "tjit/nativegen.hpp"

#include <cstddef>
#include <cstring>
#include <limits>
#include <map>
#include <utility>

#if defined(__x86_64__) && defined(__linux__)
#define TJIT_NATIVE_X64 1
#include <sys/mman.h>
#else
#define TJIT_NATIVE_X64 0
#endif

namespace tjit {

bool native_supported() { return TJIT_NATIVE_X64 != 0; }

NativeCode::~NativeCode() {
#if TJIT_NATIVE_X64
  if (mem_) munmap(mem_, len_);
#endif
}

#if TJIT_NATIVE_X64

namespace {

// Per-invocation context the generated code holds in rbx. The first eight
// fields sit at fixed offsets the emitter hardcodes; primitives are reached
// indirectly through the function-pointer table, errors come back through
// the flag so no exception ever crosses generated frames.
struct NativeContext {
  Value (*pop)(NativeContext*);
  void (*push)(NativeContext*, Value);
  Value (*heap_get)(NativeContext*, Value);
  void (*heap_set)(NativeContext*, Value, Value);
  void (*print)(NativeContext*, Value);
  void (*fail)(NativeContext*, Value);
  std::int64_t budget;
  std::int64_t error;
  Runtime* rt;
  char message[256];
};

static_assert(offsetof(NativeContext, pop) == 0);
static_assert(offsetof(NativeContext, push) == 8);
static_assert(offsetof(NativeContext, heap_get) == 16);
static_assert(offsetof(NativeContext, heap_set) == 24);
static_assert(offsetof(NativeContext, print) == 32);
static_assert(offsetof(NativeContext, fail) == 40);
static_assert(offsetof(NativeContext, budget) == 48);
static_assert(offsetof(NativeContext, error) == 56);

void ctx_set_error(NativeContext* c, const char* what) {
  c->error = 1;
  std::strncpy(c->message, what, sizeof(c->message) - 1);
  c->message[sizeof(c->message) - 1] = '\0';
}

Value ctx_pop(NativeContext* c) {
  try {
    return c->rt->stk_pop();
  } catch (const EngineError& e) {
    ctx_set_error(c, e.what());
    return 0;
  }
}

void ctx_push(NativeContext* c, Value v) {
  try {
    c->rt->stk_push(v);
  } catch (const EngineError& e) {
    ctx_set_error(c, e.what());
  }
}

Value ctx_heap_get(NativeContext* c, Value addr) {
  try {
    return c->rt->heap_get(addr);
  } catch (const EngineError& e) {
    ctx_set_error(c, e.what());
    return 0;
  }
}

void ctx_heap_set(NativeContext* c, Value addr, Value v) {
  try {
    c->rt->heap_set(addr, v);
  } catch (const EngineError& e) {
    ctx_set_error(c, e.what());
  }
}

void ctx_print(NativeContext* c, Value v) {
  try {
    c->rt->print_val(v);
  } catch (const EngineError& e) {
    ctx_set_error(c, e.what());
  }
}

void ctx_fail(NativeContext* c, Value code) {
  ctx_set_error(c, code == 1 ? "modulo by zero" : "native fault");
}

// Exit statuses beyond the unit's own RETRET/RETCALL/RETDEOPT.
constexpr std::int64_t kStatusCap = 3;
constexpr std::int64_t kStatusError = 4;

enum class R64 : std::uint8_t { rax = 0, rcx = 1, rdx = 2, rsi = 6 };

class Emitter {
 public:
  explicit Emitter(const RTLUnit& u) : u_(u) {}

  std::vector<std::uint8_t> emit() {
    prologue();
    if (u_.entry != 1) jmp_label(u_.entry);
    for (std::size_t k = 0; k < u_.code.size(); ++k) {
      label_pos_[static_cast<LabelId>(k + 1)] = here();
      instr(static_cast<LabelId>(k + 1), u_.code[k]);
    }
    cap_pos_ = here();
    mov_eax(kStatusCap);
    exit_fix_.push_back(jmp_placeholder());
    err_pos_ = here();
    mov_eax(kStatusError);
    exit_fix_.push_back(jmp_placeholder());
    exit_pos_ = here();
    epilogue();
    patch_all();
    return std::move(code_);
  }

 private:
  std::size_t here() const { return code_.size(); }
  void u8(std::uint8_t b) { code_.push_back(b); }
  void i32(std::int32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  static std::int32_t slot(RegId v) { return -8 * (static_cast<std::int32_t>(v) + 2); }

  void prologue() {
    u8(0x55);                    // push rbp
    u8(0x48); u8(0x89); u8(0xE5);  // mov rbp, rsp
    u8(0x53);                    // push rbx
    u8(0x48); u8(0x89); u8(0xFB);  // mov rbx, rdi
    std::int32_t frame = 8 * static_cast<std::int32_t>(u_.vreg_count);
    if (frame % 16 != 8) frame += 8;  // keep calls 16-byte aligned
    u8(0x48); u8(0x81); u8(0xEC); i32(frame);  // sub rsp, frame
    u8(0x31); u8(0xC0);          // xor eax, eax
    for (RegId v = 0; v < u_.vreg_count; ++v) store_rax(v);
  }

  void epilogue() {
    u8(0x48); u8(0x8D); u8(0x65); u8(0xF8);  // lea rsp, [rbp-8]
    u8(0x5B);                                // pop rbx
    u8(0x5D);                                // pop rbp
    u8(0xC3);                                // ret
  }

  void load(R64 r, RegId v) {  // mov r, [rbp+slot]
    u8(0x48); u8(0x8B);
    u8(static_cast<std::uint8_t>(0x85 | (static_cast<int>(r) << 3)));
    i32(slot(v));
  }
  void store_rax(RegId v) {  // mov [rbp+slot], rax
    u8(0x48); u8(0x89); u8(0x85); i32(slot(v));
  }
  void mov_imm(R64 r, Value imm) {  // movabs r, imm
    u8(0x48); u8(static_cast<std::uint8_t>(0xB8 | static_cast<int>(r)));
    i64(imm);
  }
  void operand(R64 r, const Operand& o) {
    if (o.is_imm) mov_imm(r, o.imm);
    else load(r, o.reg);
  }
  void mov_eax(std::int64_t v) {  // small nonnegative constants only
    u8(0xB8); i32(static_cast<std::int32_t>(v));
  }

  std::size_t jmp_placeholder() {  // jmp rel32, returns fixup position
    u8(0xE9);
    std::size_t pos = here();
    i32(0);
    return pos;
  }
  std::size_t jcc_placeholder(std::uint8_t cc) {  // 0F cc rel32
    u8(0x0F); u8(cc);
    std::size_t pos = here();
    i32(0);
    return pos;
  }
  void patch_to(std::size_t pos, std::size_t target) {
    std::int64_t rel = static_cast<std::int64_t>(target) -
                       (static_cast<std::int64_t>(pos) + 4);
    for (int i = 0; i < 4; ++i)
      code_[pos + i] = static_cast<std::uint8_t>(rel >> (8 * i));
  }
  void patch_here(std::size_t pos) { patch_to(pos, here()); }

  void jmp_label(LabelId t) { label_fix_.emplace_back(jmp_placeholder(), t); }
  void jcc_label(std::uint8_t cc, LabelId t) {
    label_fix_.emplace_back(jcc_placeholder(cc), t);
  }

  void budget_check() {
    u8(0x48); u8(0xFF); u8(0x4B); u8(48);  // dec qword [rbx+48]
    cap_fix_.push_back(jcc_placeholder(0x8E));  // jle -> cap exit
  }
  void error_check() {
    u8(0x48); u8(0x83); u8(0x7B); u8(56); u8(0x00);  // cmp qword [rbx+56], 0
    err_fix_.push_back(jcc_placeholder(0x85));       // jne -> error exit
  }
  void call_prim(std::uint8_t ctx_off) {
    u8(0x48); u8(0x89); u8(0xDF);       // mov rdi, rbx
    u8(0xFF); u8(0x53); u8(ctx_off);    // call qword [rbx+off]
  }

  // Control transfer for a straight-line instruction: nothing on
  // fallthrough, a budget-checked jump on a backward edge.
  void flow(LabelId from, LabelId next) {
    if (next == from + 1) return;
    if (next <= from) budget_check();
    jmp_label(next);
  }

  void compare_rax_rcx(std::uint8_t setcc) {
    u8(0x48); u8(0x39); u8(0xC8);  // cmp rax, rcx
    u8(0x0F); u8(setcc); u8(0xC0);  // setcc al
    u8(0x0F); u8(0xB6); u8(0xC0);   // movzx eax, al
  }

  void op_expr(const Expr& e) {  // result in rax
    switch (e.op) {
      case ExprOp::AddRR:
        load(R64::rax, e.a); load(R64::rcx, e.b);
        u8(0x48); u8(0x01); u8(0xC8);  // add rax, rcx
        break;
      case ExprOp::SubRR:
        load(R64::rax, e.a); load(R64::rcx, e.b);
        u8(0x48); u8(0x29); u8(0xC8);  // sub rax, rcx
        break;
      case ExprOp::MulRR:
        load(R64::rax, e.a); load(R64::rcx, e.b);
        u8(0x48); u8(0x0F); u8(0xAF); u8(0xC1);  // imul rax, rcx
        break;
      case ExprOp::EqRR:
        load(R64::rax, e.a); load(R64::rcx, e.b);
        compare_rax_rcx(0x94);  // sete
        break;
      case ExprOp::LtRR:
        load(R64::rax, e.a); load(R64::rcx, e.b);
        compare_rax_rcx(0x9C);  // setl
        break;
      case ExprOp::ModRR: {
        load(R64::rax, e.a); load(R64::rcx, e.b);
        u8(0x48); u8(0x85); u8(0xC9);  // test rcx, rcx
        std::size_t ok = jcc_placeholder(0x85);  // jne ok
        u8(0x48); u8(0x89); u8(0xDF);            // mov rdi, rbx
        u8(0xBE); i32(1);                        // mov esi, 1
        u8(0xFF); u8(0x53); u8(40);              // call qword [rbx+40] (fail)
        err_fix_.push_back(jmp_placeholder());
        patch_here(ok);
        u8(0x48); u8(0x83); u8(0xF9); u8(0xFF);  // cmp rcx, -1
        std::size_t div = jcc_placeholder(0x85);  // jne div
        u8(0x31); u8(0xC0);                       // xor eax, eax
        std::size_t done = jmp_placeholder();
        patch_here(div);
        u8(0x48); u8(0x99);                     // cqo
        u8(0x48); u8(0xF7); u8(0xF9);           // idiv rcx
        u8(0x48); u8(0x89); u8(0xD0);           // mov rax, rdx
        patch_here(done);
        break;
      }
      case ExprOp::NegR:
        load(R64::rax, e.a);
        u8(0x48); u8(0xF7); u8(0xD8);  // neg rax
        break;
      case ExprOp::ConstV:
        mov_imm(R64::rax, e.imm);
        break;
      case ExprOp::EqZero:
        load(R64::rax, e.a);
        u8(0x48); u8(0x85); u8(0xC0);   // test rax, rax
        u8(0x0F); u8(0x94); u8(0xC0);   // sete al
        u8(0x0F); u8(0xB6); u8(0xC0);   // movzx eax, al
        break;
      case ExprOp::AddRI:
        load(R64::rax, e.a); mov_imm(R64::rcx, e.imm);
        u8(0x48); u8(0x01); u8(0xC8);  // add rax, rcx
        break;
      case ExprOp::MulRI:
        load(R64::rax, e.a); mov_imm(R64::rcx, e.imm);
        u8(0x48); u8(0x0F); u8(0xAF); u8(0xC1);  // imul rax, rcx
        break;
    }
  }

  void instr(LabelId at, const RTLInstr& ins) {
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, RtlOp>) {
            op_expr(i.expr);
            store_rax(i.dst);
            flow(at, i.next);
          } else if constexpr (std::is_same_v<T, RtlGoto>) {
            flow(at, i.next);
          } else if constexpr (std::is_same_v<T, RtlBranch>) {
            budget_check();
            load(R64::rax, i.guard);
            u8(0x48); u8(0x85); u8(0xC0);  // test rax, rax
            if (i.if_false == at + 1) {
              jcc_label(0x85, i.if_true);  // jne true
            } else if (i.if_true == at + 1) {
              jcc_label(0x84, i.if_false);  // je false
            } else {
              jcc_label(0x85, i.if_true);
              jmp_label(i.if_false);
            }
          } else if constexpr (std::is_same_v<T, RtlCallPrim>) {
            switch (i.prim) {
              case Prim::Pop:
                call_prim(0);
                break;
              case Prim::Push:
                operand(R64::rsi, i.args.at(0));
                call_prim(8);
                break;
              case Prim::HeapGet:
                operand(R64::rsi, i.args.at(0));
                call_prim(16);
                break;
              case Prim::HeapSet:
                operand(R64::rsi, i.args.at(0));
                operand(R64::rdx, i.args.at(1));
                call_prim(24);
                break;
              case Prim::Print:
                operand(R64::rsi, i.args.at(0));
                call_prim(32);
                break;
            }
            error_check();
            if (i.dst != 0) store_rax(i.dst);
            flow(at, i.next);
          } else {  // RtlReturnStatus
            mov_eax(i.code);
            exit_fix_.push_back(jmp_placeholder());
          }
        },
        ins);
  }

  void patch_all() {
    for (const auto& [pos, label] : label_fix_) {
      auto it = label_pos_.find(label);
      if (it == label_pos_.end())
        throw EngineError("invalid rtl label l" + std::to_string(label));
      patch_to(pos, it->second);
    }
    for (std::size_t pos : cap_fix_) patch_to(pos, cap_pos_);
    for (std::size_t pos : err_fix_) patch_to(pos, err_pos_);
    for (std::size_t pos : exit_fix_) patch_to(pos, exit_pos_);
  }

  const RTLUnit& u_;
  std::vector<std::uint8_t> code_;
  std::map<LabelId, std::size_t> label_pos_;
  std::vector<std::pair<std::size_t, LabelId>> label_fix_;
  std::vector<std::size_t> cap_fix_, err_fix_, exit_fix_;
  std::size_t cap_pos_ = 0, err_pos_ = 0, exit_pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> emit_unit(const RTLUnit& u) {
  if (u.entry < 1 || u.entry > u.code.size())
    throw EngineError("invalid rtl label l" + std::to_string(u.entry));
  return Emitter(u).emit();
}

std::shared_ptr<const NativeCode> install_native(
    const std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) throw EngineError("native install failed");
  void* mem = mmap(nullptr, bytes.size(), PROT_READ | PROT_WRITE,
                   MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
  if (mem == MAP_FAILED) throw EngineError("native install failed");
  std::memcpy(mem, bytes.data(), bytes.size());
  if (mprotect(mem, bytes.size(), PROT_READ | PROT_EXEC) != 0) {
    munmap(mem, bytes.size());
    throw EngineError("native install failed");
  }
  return std::shared_ptr<const NativeCode>(new NativeCode(mem, bytes.size()));
}

ExecResult native_run(const NativeCode& code, Runtime& rt,
                      std::uint64_t step_cap) {
  NativeContext ctx;
  ctx.pop = &ctx_pop;
  ctx.push = &ctx_push;
  ctx.heap_get = &ctx_heap_get;
  ctx.heap_set = &ctx_heap_set;
  ctx.print = &ctx_print;
  ctx.fail = &ctx_fail;
  ctx.budget = step_cap > static_cast<std::uint64_t>(
                              std::numeric_limits<std::int64_t>::max())
                   ? std::numeric_limits<std::int64_t>::max()
                   : static_cast<std::int64_t>(step_cap);
  ctx.error = 0;
  ctx.rt = &rt;
  ctx.message[0] = '\0';

  using Fn = std::int64_t (*)(NativeContext*);
  Fn fn = reinterpret_cast<Fn>(const_cast<void*>(code.entry()));
  std::int64_t status = fn(&ctx);
  if (ctx.error || status == kStatusError) throw EngineError(ctx.message);
  if (status == kStatusCap) return ExecResult{true, 0};
  return ExecResult{false, status};
}

#else  // !TJIT_NATIVE_X64

std::vector<std::uint8_t> emit_unit(const RTLUnit&) {
  throw EngineError("native tier unsupported on this host");
}

std::shared_ptr<const NativeCode> install_native(
    const std::vector<std::uint8_t>&) {
  throw EngineError("native tier unsupported on this host");
}

ExecResult native_run(const NativeCode&, Runtime&, std::uint64_t) {
  throw EngineError("native tier unsupported on this host");
}

#endif

}  // namespace tjit

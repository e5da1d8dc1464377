#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <memory>
#include <vector>

#include "doctest.h"
#include "support/prim_replay.hpp"
#include "tjit/fuzzgen.hpp"
#include "tjit/rtl.hpp"
#include "tjit/runtime.hpp"

using namespace tjit;

namespace {

IRFrame sample_frame(LabelId at = 4) {
  IRFrame f;
  f.ret_reg = 2;
  f.fun = "caller";
  f.tag = VersionTag::Base;
  f.resume_label = at;
  f.regs = {{1, 10}, {3, -7}};
  return f;
}

CompiledUnit dummy_unit() {
  auto u = std::make_shared<RTLUnit>();
  u->entry = 1;
  u->code = {RtlReturnStatus{RETRET}};
  u->vreg_count = 1;
  return CompiledUnit{std::move(u), nullptr, Tier::Rtl};
}

}  // namespace

TEST_CASE("heap is zeroed and bounds-checked with the exact messages") {
  StructuredRuntime rt{RuntimeOptions{.heap_size = 8}};
  CHECK(rt.heap() == std::vector<Value>(8, 0));
  rt.heap_set(7, 42);
  CHECK(rt.heap_get(7) == 42);
  CHECK_THROWS_WITH_AS(rt.heap_get(8), "MemGet out of memory range",
                       EngineError);
  CHECK_THROWS_WITH_AS(rt.heap_get(-1), "MemGet out of memory range",
                       EngineError);
  CHECK_THROWS_WITH_AS(rt.heap_set(8, 1), "MemSet out of memory range",
                       EngineError);
  CHECK_THROWS_WITH_AS(rt.heap_set(-3, 1), "MemSet out of memory range",
                       EngineError);
  CHECK(rt.heap_get(7) == 42);  // failed accesses changed nothing
}

TEST_CASE("print appends to the trace and feeds the sink") {
  FlatRuntime rt;
  std::vector<Value> seen;
  rt.set_print_sink([&](Value v) { seen.push_back(v); });
  rt.print_val(3);
  rt.print_val(-9);
  CHECK(rt.trace() == std::vector<Value>{3, -9});
  CHECK(seen == rt.trace());
}

TEST_CASE("code repository install, load, check") {
  StructuredRuntime rt;
  CodeKey entry{2, SegmentKey::entry()};
  CodeKey cont{2, SegmentKey::cont_at(5)};
  CHECK(!rt.check_installed(2));
  CHECK_THROWS_WITH_AS(rt.load_code(entry), "code not installed", EngineError);

  rt.install_code(cont, dummy_unit());
  CHECK(!rt.check_installed(2));  // only the entry unit counts as installed

  rt.install_code(entry, dummy_unit());
  CHECK(rt.check_installed(2));
  CHECK(rt.load_code(entry).tier == Tier::Rtl);
  CHECK_THROWS_WITH_AS(rt.install_code(entry, dummy_unit()),
                       "already installed", EngineError);

  CHECK(to_string(entry) == "$2");
  CHECK(to_string(cont) == "$2.l5");
}

TEST_CASE("structured stack push, pop and their errors") {
  StructuredRuntime rt;
  CHECK_THROWS_WITH_AS(rt.stk_pop(), "Pop on empty stack", EngineError);
  rt.stk_push(5);
  rt.push_irsf(sample_frame());
  CHECK_THROWS_WITH_AS(rt.stk_pop(), "Pop on non-integer top", EngineError);
  CHECK(rt.stack_elems().size() == 2);  // failed pop left it intact
}

TEST_CASE("open_sf decodes the three frame shapes") {
  for (StackImpl impl : {StackImpl::Structured, StackImpl::Flat}) {
    CAPTURE(static_cast<int>(impl));
    auto rt = make_runtime(impl);

    CHECK(std::holds_alternative<std::monostate>(rt->open_sf()));

    IRFrame f = sample_frame();
    rt->push_irsf(f);
    OpenedFrame got = rt->open_sf();
    REQUIRE(std::holds_alternative<IRFrame>(got));
    CHECK(std::get<IRFrame>(got) == f);

    // A compiled close pushes the function index, then the call label.
    rt->stk_push(3);
    rt->stk_push(7);
    OpenedFrame nf = rt->open_sf();
    REQUIRE(std::holds_alternative<NativeFrame>(nf));
    CHECK(std::get<NativeFrame>(nf) == NativeFrame{3, 7});
    CHECK(rt->stack_elems().empty());
  }
}

TEST_CASE("open_sf validates before popping") {
  for (StackImpl impl : {StackImpl::Structured, StackImpl::Flat}) {
    CAPTURE(static_cast<int>(impl));
    auto rt = make_runtime(impl);

    rt->stk_push(9);  // a single integer is not a close pair
    CHECK_THROWS_WITH_AS(rt->open_sf(), "corrupt stack", EngineError);
    CHECK(rt->stack_elems().size() == 1);

    rt->stk_push(0);  // label 0 is invalid
    CHECK_THROWS_WITH_AS(rt->open_sf(), "corrupt stack", EngineError);
    CHECK(rt->stack_elems().size() == 2);

    rt->stk_push(-2);  // negative function index is invalid
    CHECK_THROWS_WITH_AS(rt->open_sf(), "corrupt stack", EngineError);
    CHECK(rt->stack_elems().size() == 3);
  }
}

TEST_CASE("flat stack enforces its capacities") {
  RuntimeOptions small;
  small.int_stack_capacity = 4;
  small.frame_stack_capacity = 2;
  FlatRuntime rt{small};
  for (int i = 0; i < 4; ++i) rt.stk_push(i);
  CHECK_THROWS_WITH_AS(rt.stk_push(99), "stack overflow", EngineError);
  rt.push_irsf(sample_frame());
  rt.push_irsf(sample_frame());
  CHECK_THROWS_WITH_AS(rt.push_irsf(sample_frame()), "stack overflow",
                       EngineError);
  CHECK(rt.stack_elems().size() == 6);
}

TEST_CASE("flat view interleaves integers and frames at push depth") {
  StructuredRuntime a;
  FlatRuntime b;
  auto both = [&](auto&& fn) { fn(a); fn(b); };

  both([](Runtime& rt) { rt.stk_push(1); });
  both([](Runtime& rt) { rt.push_irsf(sample_frame(2)); });
  both([](Runtime& rt) { rt.stk_push(2); });
  both([](Runtime& rt) { rt.stk_push(3); });
  both([](Runtime& rt) { rt.push_irsf(sample_frame(9)); });

  CHECK(a.stack_elems() == b.stack_elems());
  CHECK(relate(a, b));

  // Pop back down across the boundary in lockstep.
  both([](Runtime& rt) { CHECK(std::holds_alternative<IRFrame>(rt.open_sf())); });
  both([](Runtime& rt) { CHECK(rt.stk_pop() == 3); });
  CHECK(relate(a, b));
}

TEST_CASE("differential replay of random primitive sequences") {
  std::uint64_t mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    Rng rng(seed);
    auto ops = testsupport::generate_prim_sequence(rng);
    StructuredRuntime a;
    FlatRuntime b;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      std::string ra = testsupport::apply_op(a, ops[i]);
      std::string rb = testsupport::apply_op(b, ops[i]);
      if (ra != rb) {
        CAPTURE(seed);
        CAPTURE(i);
        CHECK(ra == rb);
        ++mismatches;
        break;
      }
    }
    if (!relate(a, b)) {
      CAPTURE(seed);
      CHECK(relate(a, b));
      ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

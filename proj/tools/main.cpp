#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tjit/behavior.hpp"
#include "tjit/bench.hpp"
#include "tjit/fuzzgen.hpp"
#include "tjit/monitor.hpp"
#include "tjit/nativegen.hpp"
#include "tjit/parse.hpp"
#include "tjit/refsem.hpp"
#include "tjit/rtl.hpp"
#include "tjit/validate.hpp"

namespace {

constexpr int kUsageExit = 3;

struct RunFlags {
  std::string file;
  std::string mode = "jit";
  std::string tier = "rtl";
  std::string stack = "flat";
  std::string hotness = "2";
  std::uint64_t fuel = 1000;
  std::uint64_t heap_size = 4096;
  std::uint64_t step_cap = 10'000'000;
  std::uint64_t exec_cap = 100'000'000;
  bool log = false;
  bool dump_rtl = false;
  bool inject_compile_failure = false;
};

void add_engine_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--tier", f.tier, "Compilation tier")
      ->check(CLI::IsMember({"rtl", "native"}));
  cmd->add_option("--stack-impl", f.stack, "Execution stack implementation")
      ->check(CLI::IsMember({"structured", "flat"}));
  cmd->add_option("--hotness", f.hotness,
                  "Calls before a function is compiled; 'inf' disables "
                  "compilation");
  cmd->add_option("--fuel", f.fuel, "Interpreter instructions per slice")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--heap-size", f.heap_size, "Heap cells");
  cmd->add_option("--step-cap", f.step_cap, "Engine transition cap");
  cmd->add_option("--exec-cap", f.exec_cap,
                  "Step cap per compiled-unit invocation");
}

int parse_hotness(const std::string& text,
                  std::optional<std::uint64_t>& out) {
  if (text == "inf") {
    out.reset();
    return 0;
  }
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    out = v;
  } catch (const std::exception&) {
    std::cerr << "invalid --hotness value '" << text << "'\n";
    return kUsageExit;
  }
  return 0;
}

int load_program(const std::string& path, tjit::Program& p) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open '" << path << "'\n";
    return kUsageExit;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    p = tjit::parse_program(buf.str());
  } catch (const tjit::ParseError& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kUsageExit;
  }
  bool bad = false;
  for (const auto& v : tjit::validate_program(p)) {
    std::cerr << path << ": " << to_string(v) << "\n";
    bad = bad || !v.warning;
  }
  return bad ? kUsageExit : 0;
}

int make_config(const RunFlags& f, tjit::JitConfig& cfg) {
  cfg.tier = f.tier == "native" ? tjit::Tier::Native : tjit::Tier::Rtl;
  cfg.stack_impl = f.stack == "structured" ? tjit::StackImpl::Structured
                                           : tjit::StackImpl::Flat;
  if (int rc = parse_hotness(f.hotness, cfg.hotness)) return rc;
  cfg.fuel = f.fuel;
  cfg.heap_size = f.heap_size;
  cfg.step_cap = f.step_cap;
  cfg.exec_cap = f.exec_cap;
  cfg.compile.inject_failure = f.inject_compile_failure;
  if (f.log) cfg.log = &std::cerr;
  return 0;
}

void print_behavior(const tjit::Behavior& b) {
  for (tjit::Value v : b.trace) std::cout << v << "\n";
  std::cout << tjit::status_line(b) << "\n";
}

void dump_repository(const tjit::Runtime& rt, const std::string& only_fun,
                     const tjit::Program& p, std::ostream& os) {
  for (const auto& [key, unit] : rt.repository()) {
    const tjit::Function* f = p.by_idx(key.fun);
    if (!only_fun.empty() && (!f || f->name != only_fun)) continue;
    os << to_string(key);
    if (f) os << "  (" << f->name << ")";
    os << "\n" << dump_rtl(*unit.rtl);
  }
}

int cmd_run(const RunFlags& f) {
  tjit::Program p;
  if (int rc = load_program(f.file, p)) return rc;

  if (f.mode == "ref") {
    tjit::Behavior b = tjit::ref_run(p, f.heap_size, f.step_cap);
    print_behavior(b);
    return tjit::exit_code(b);
  }

  tjit::JitConfig cfg;
  if (int rc = make_config(f, cfg)) return rc;
  auto rt = tjit::make_runtime(cfg.stack_impl,
                               tjit::RuntimeOptions{cfg.heap_size,
                                                    std::size_t{1} << 16,
                                                    std::size_t{1} << 12});
  tjit::Behavior b = tjit::jit_run_with(p, cfg, *rt);
  if (f.dump_rtl) dump_repository(*rt, "", p, std::cerr);
  print_behavior(b);
  return tjit::exit_code(b);
}

int cmd_dump(const std::string& file, const std::string& fun) {
  tjit::Program p;
  if (int rc = load_program(file, p)) return rc;
  tjit::StructuredRuntime rt;
  for (const auto& fn : p.functions) {
    if (!fun.empty() && fn.name != fun) continue;
    auto res = tjit::compile_function(p, fn.name, rt, tjit::Tier::Rtl);
    if (!res.ok)
      std::cerr << fn.name << ": cancelled: " << res.reason << "\n";
  }
  dump_repository(rt, fun, p, std::cout);
  return 0;
}

int cmd_fuzz(std::uint64_t seed, std::uint64_t count) {
  tjit::FuzzReport rep = tjit::run_differential_fuzz(seed, count, {});
  if (!rep.ok) {
    std::cout << rep.detail << "\n";
    return 1;
  }
  std::cout << "checked " << rep.checked << " programs, all refine\n";
  return 0;
}

int cmd_bench(const RunFlags& f, int reps) {
  tjit::Program p;
  if (int rc = load_program(f.file, p)) return rc;
  tjit::JitConfig cfg;
  if (int rc = make_config(f, cfg)) return rc;
  tjit::BenchResult r = tjit::run_bench(p, cfg, reps);
  std::cout << "interp median: " << r.interp_ms << " ms\n"
            << "engine median: " << r.jit_ms << " ms\n"
            << "speedup: " << r.speedup << "\n"
            << "consistent: " << (r.consistent ? "yes" : "no") << "\n";
  return r.consistent ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiered execution engine for CoreIR programs"};
  app.require_subcommand(1);

  RunFlags rf;
  CLI::App* run = app.add_subcommand("run", "Execute a program");
  run->add_option("file", rf.file, "Program file")->required();
  run->add_option("--mode", rf.mode, "Execution mode")
      ->check(CLI::IsMember({"ref", "jit"}));
  add_engine_flags(run, rf);
  run->add_flag("--log", rf.log, "Log engine transitions to stderr");
  run->add_flag("--dump-rtl", rf.dump_rtl,
                "Dump compiled units to stderr after the run");
  run->add_flag("--inject-compile-failure", rf.inject_compile_failure,
                "Force every compilation to cancel");

  std::string dump_file, dump_fun;
  CLI::App* dump = app.add_subcommand("dump", "Compile and print RTL units");
  dump->add_option("file", dump_file, "Program file")->required();
  dump->add_option("--fun", dump_fun, "Only this function");

  std::uint64_t seed = 1, count = 100;
  CLI::App* fuzz = app.add_subcommand("fuzz", "Differential fuzzing");
  fuzz->add_option("--seed", seed, "Base seed");
  fuzz->add_option("--count", count, "Programs to generate");

  RunFlags bf;
  int reps = 5;
  CLI::App* bench = app.add_subcommand("bench", "Time engine vs interpreter");
  bench->add_option("file", bf.file, "Program file")->required();
  bench->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);
  add_engine_flags(bench, bf);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (run->parsed()) return cmd_run(rf);
    if (dump->parsed()) return cmd_dump(dump_file, dump_fun);
    if (fuzz->parsed()) return cmd_fuzz(seed, count);
    if (bench->parsed()) return cmd_bench(bf, reps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  }
  return 0;
}

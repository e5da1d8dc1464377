#include "tjit/validate.hpp"

#include <set>

namespace tjit {
namespace {

void check_version(const Program& p, const Function& f, const Version& v,
                   bool is_base, std::vector<Violation>& out) {
  auto err = [&](std::optional<LabelId> at, std::string reason) {
    out.push_back({f.name, at, std::move(reason), false});
  };
  auto warn = [&](std::optional<LabelId> at, std::string reason) {
    out.push_back({f.name, at, std::move(reason), true});
  };

  if (v.code.empty()) {
    err(std::nullopt, "empty version");
    return;
  }
  if (!v.code.count(v.entry))
    err(std::nullopt, "entry label l" + std::to_string(v.entry) + " undefined");

  auto check_target = [&](LabelId at, LabelId target) {
    if (!v.code.count(target))
      err(at, "undefined label l" + std::to_string(target));
  };

  for (const auto& [label, ins] : v.code) {
    const LabelId at = label;
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, NopInstr>) {
            check_target(at, i.next);
          } else if constexpr (std::is_same_v<T, AssignInstr>) {
            check_target(at, i.next);
          } else if constexpr (std::is_same_v<T, CondInstr>) {
            check_target(at, i.if_true);
            check_target(at, i.if_false);
          } else if constexpr (std::is_same_v<T, PrintInstr>) {
            check_target(at, i.next);
          } else if constexpr (std::is_same_v<T, CallInstr>) {
            check_target(at, i.next);
            if (!p.find(i.callee)) err(at, "unknown callee '" + i.callee + "'");
          } else if constexpr (std::is_same_v<T, ReturnInstr>) {
            // no successors
          } else if constexpr (std::is_same_v<T, MemGetInstr>) {
            check_target(at, i.next);
          } else if constexpr (std::is_same_v<T, MemSetInstr>) {
            check_target(at, i.next);
          } else {
            check_target(at, i.next);
            const Function* target = p.find(i.target);
            if (!target) {
              err(at, "unknown deopt target '" + i.target + "'");
            } else if (!target->base.code.count(i.target_label)) {
              err(at, "deopt target label l" + std::to_string(i.target_label) +
                          " not in base version of '" + i.target + "'");
            }
            std::set<RegId> seen;
            for (const VarMapEntry& e : i.varmap)
              if (!seen.insert(e.dst).second)
                err(at, "duplicate register r" + std::to_string(e.dst) +
                            " in deopt varmap");
            if (is_base) warn(at, "speculation in base version");
          }
        },
        ins);
  }
}

}  // namespace

std::vector<Violation> validate_program(const Program& p) {
  std::vector<Violation> out;
  const Function* main = p.find("main");
  if (!main)
    out.push_back({"main", std::nullopt, "missing entry function 'main'", false});
  else if (!main->params.empty())
    out.push_back({"main", std::nullopt, "'main' must take no parameters", false});

  for (const Function& f : p.functions) {
    std::set<RegId> seen;
    for (RegId r : f.params)
      if (!seen.insert(r).second)
        out.push_back({f.name, std::nullopt,
                       "duplicate parameter r" + std::to_string(r), false});
    check_version(p, f, f.base, true, out);
    if (f.opt) check_version(p, f, *f.opt, false, out);
  }
  return out;
}

bool is_valid(const Program& p) {
  for (const Violation& v : validate_program(p))
    if (!v.warning) return false;
  return true;
}

std::string to_string(const Violation& v) {
  std::string s = v.fun;
  if (v.label) s += ":l" + std::to_string(*v.label);
  s += ": ";
  if (v.warning) s += "warning: ";
  return s + v.reason;
}

}  // namespace tjit

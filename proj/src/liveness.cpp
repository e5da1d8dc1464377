#include "tjit/liveness.hpp"

#include <algorithm>
#include <deque>
#include <type_traits>

namespace tjit {

RegSet expr_uses(const Expr& e) {
  switch (e.op) {
    case ExprOp::AddRR:
    case ExprOp::SubRR:
    case ExprOp::MulRR:
    case ExprOp::EqRR:
    case ExprOp::LtRR:
    case ExprOp::ModRR:
      return {e.a, e.b};
    case ExprOp::NegR:
    case ExprOp::EqZero:
    case ExprOp::AddRI:
    case ExprOp::MulRI:
      return {e.a};
    case ExprOp::ConstV:
      return {};
  }
  return {};
}

RegSet instr_uses(const Instr& ins) {
  return std::visit(
      [](const auto& i) -> RegSet {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, NopInstr>) {
          return {};
        } else if constexpr (std::is_same_v<T, AssignInstr>) {
          return expr_uses(i.expr);
        } else if constexpr (std::is_same_v<T, CondInstr>) {
          return {i.guard};
        } else if constexpr (std::is_same_v<T, PrintInstr>) {
          return {i.src};
        } else if constexpr (std::is_same_v<T, CallInstr>) {
          return RegSet(i.args.begin(), i.args.end());
        } else if constexpr (std::is_same_v<T, ReturnInstr>) {
          return {i.src};
        } else if constexpr (std::is_same_v<T, MemGetInstr>) {
          return {i.addr};
        } else if constexpr (std::is_same_v<T, MemSetInstr>) {
          return {i.addr, i.src};
        } else {  // AssumeInstr
          RegSet s{i.guard};
          for (const VarMapEntry& e : i.varmap) s.merge(expr_uses(e.expr));
          return s;
        }
      },
      ins);
}

std::optional<RegId> instr_def(const Instr& ins) {
  return std::visit(
      [](const auto& i) -> std::optional<RegId> {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, AssignInstr> ||
                      std::is_same_v<T, CallInstr> ||
                      std::is_same_v<T, MemGetInstr>)
          return i.dst;
        else
          return std::nullopt;
      },
      ins);
}

std::vector<LabelId> instr_succs(const Instr& ins) {
  return std::visit(
      [](const auto& i) -> std::vector<LabelId> {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, CondInstr>)
          return {i.if_true, i.if_false};
        else if constexpr (std::is_same_v<T, ReturnInstr>)
          return {};
        else
          return {i.next};
      },
      ins);
}

LiveSets compute_liveness(const Version& v) {
  LiveSets ls;
  std::map<LabelId, std::vector<LabelId>> preds;
  for (const auto& [l, ins] : v.code) {
    ls.live_in[l];
    ls.live_out[l];
    for (LabelId s : instr_succs(ins))
      if (v.code.count(s)) preds[s].push_back(l);
  }

  std::deque<LabelId> work;
  std::set<LabelId> queued;
  for (const auto& [l, ins] : v.code) {
    work.push_back(l);
    queued.insert(l);
  }

  while (!work.empty()) {
    LabelId l = work.front();
    work.pop_front();
    queued.erase(l);
    const Instr& ins = v.code.at(l);

    RegSet out;
    for (LabelId s : instr_succs(ins)) {
      auto it = ls.live_in.find(s);
      if (it == ls.live_in.end()) continue;
      out.insert(it->second.begin(), it->second.end());
    }

    RegSet in = out;
    if (auto d = instr_def(ins)) in.erase(*d);
    in.merge(instr_uses(ins));

    ls.live_out[l] = std::move(out);
    if (in != ls.live_in[l]) {
      ls.live_in[l] = std::move(in);
      for (LabelId pr : preds[l])
        if (queued.insert(pr).second) work.push_back(pr);
    }
  }
  return ls;
}

}  // namespace tjit

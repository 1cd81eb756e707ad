#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "atlaas/ir.hpp"
#include "atlaas/print.hpp"

namespace atlaas {

/// Golden structural outcomes recorded at generation time, one `key = value`
/// line each. Keys are `<stage>.<function>.<metric>` for per-stage function
/// metrics or `taidl.<metric>` for assembled-spec metrics.
struct Expectations {
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string &key, const std::string &value) {
    entries.emplace_back(key, value);
  }
  void add(const std::string &key, int64_t value) {
    entries.emplace_back(key, std::to_string(value));
  }

  std::string to_text() const {
    std::string out;
    for (const auto &[k, v] : entries) out += k + " = " + v + "\n";
    return out;
  }

  static Expectations parse(std::string_view text) {
    Expectations e;
    size_t pos = 0;
    while (pos < text.size()) {
      size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      std::string_view line = text.substr(pos, eol - pos);
      pos = eol + 1;
      size_t eq = line.find(" = ");
      if (eq == std::string_view::npos) continue;
      e.entries.emplace_back(std::string(line.substr(0, eq)),
                             std::string(line.substr(eq + 3)));
    }
    return e;
  }
};

namespace detail {

struct SliceIndex {
  std::map<ValueId, const Operation *> def;
  struct BlockArg {
    const Operation *owner;  // the scf.for op
    size_t index;            // 0 = induction variable, >= 1 iter_arg
  };
  std::map<ValueId, BlockArg> block_args;

  void build(const Block &b) {
    for (const auto &op : b.ops) {
      for (ValueId r : op.results) def[r] = &op;
      if (op.op == Op::For)
        for (size_t i = 0; i < op.regions[0].args.size(); ++i)
          block_args[op.regions[0].args[i]] = {&op, i};
      for (const auto &r : op.regions) build(r);
    }
  }
};

inline const Operation *terminator(const Block &b) {
  return b.ops.empty() ? nullptr : &b.ops.back();
}

/// Operations reachable backward from `root`, through loop-carried values and
/// region yields. Terminators themselves are not counted.
inline std::set<const Operation *> backward_slice(const Function &f,
                                                  ValueId root) {
  SliceIndex index;
  index.build(f.body);
  std::set<const Operation *> ops;
  std::set<ValueId> seen;
  std::vector<ValueId> worklist{root};
  while (!worklist.empty()) {
    ValueId v = worklist.back();
    worklist.pop_back();
    if (!seen.insert(v).second) continue;
    auto d = index.def.find(v);
    if (d != index.def.end()) {
      const Operation *op = d->second;
      if (ops.insert(op).second) {
        for (ValueId o : op->operands) worklist.push_back(o);
        for (const auto &r : op->regions)
          if (const Operation *t = terminator(r))
            for (ValueId o : t->operands) worklist.push_back(o);
      }
      continue;
    }
    auto ba = index.block_args.find(v);
    if (ba != index.block_args.end() && ba->second.index >= 1) {
      const Operation *for_op = ba->second.owner;
      size_t k = ba->second.index - 1;
      if (k < for_op->operands.size()) worklist.push_back(for_op->operands[k]);
      if (const Operation *t = terminator(for_op->regions[0]))
        if (k < t->operands.size()) worklist.push_back(t->operands[k]);
      ops.insert(for_op);
    }
  }
  return ops;
}

inline size_t core_op_count(const Function &f) {
  if (f.body.ops.empty() || f.body.ops.back().op != Op::Return ||
      f.body.ops.back().operands.empty())
    return 0;
  return backward_slice(f, f.body.ops.back().operands[0]).size();
}

inline bool slice_touches_arg(const Function &f, ValueId v, ValueId arg) {
  if (v == arg) return true;
  auto slice = backward_slice(f, v);
  for (const Operation *op : slice)
    for (ValueId o : op->operands)
      if (o == arg) return true;
  return false;
}

inline std::string ann_to_metric_string(const AnnValue &v) {
  if (auto *i = std::get_if<int64_t>(&v)) return std::to_string(*i);
  if (auto *s = std::get_if<std::string>(&v)) return *s;
  const auto &list = std::get<std::vector<int64_t>>(v);
  std::string out;
  for (size_t i = 0; i < list.size(); ++i)
    out += (i ? "," : "") + std::to_string(list[i]);
  return out;
}

}  // namespace detail

/// Evaluates one structural metric on a function. Unknown metrics yield
/// "<unknown-metric>".
inline std::string measure_metric(const Function &f, std::string_view metric) {
  auto starts_with = [&](std::string_view p) {
    return metric.substr(0, p.size()) == p;
  };
  if (metric == "op_count") return std::to_string(count_ops(f));
  if (metric == "core_ops") return std::to_string(detail::core_op_count(f));
  if (starts_with("count.")) {
    std::string name(metric.substr(6));
    size_t n = 0;
    walk_ops(f, [&](const Operation &op) { n += name == op_name(op.op); });
    return std::to_string(n);
  }
  if (metric == "loop_count") return std::to_string(count_ops(f, Op::For));
  if (metric == "dot_loops" || metric == "max_loops") {
    std::string want = metric == "dot_loops" ? "dot_product" : "max_reduce";
    size_t n = 0;
    walk_ops(f, [&](const Operation &op) {
      if (op.op != Op::For) return;
      auto it = op.attrs.find(ann::kLinalgOp);
      if (it != op.attrs.end()) {
        auto *s = std::get_if<std::string>(&it->second);
        n += s && *s == want;
      }
    });
    return std::to_string(n);
  }
  if (metric == "loop_trip") {
    int64_t trip = 0;
    walk_ops(f, [&](const Operation &op) {
      if (op.op != Op::For || op.step < 1) return;
      int64_t t = (op.upper - op.lower + op.step - 1) / op.step;
      trip = std::max(trip, t);
    });
    return std::to_string(trip);
  }
  if (metric == "iter_args_max") {
    size_t n = 0;
    walk_ops(f, [&](const Operation &op) {
      if (op.op == Op::For) n = std::max(n, op.operands.size());
    });
    return std::to_string(n);
  }
  if (metric == "compute") {
    auto it = f.attrs.find(ann::kCompute);
    if (it == f.attrs.end()) return "unset";
    auto *s = std::get_if<std::string>(&it->second);
    return s ? *s : "unset";
  }
  if (metric == "clamp") {
    std::string found = "none";
    walk_ops(f, [&](const Operation &op) {
      auto it = op.attrs.find(ann::kClamp);
      if (it != op.attrs.end())
        found = detail::ann_to_metric_string(it->second);
    });
    return found;
  }
  if (metric == "clamp_range") {
    auto it = f.attrs.find(ann::kTaidlClamp);
    if (it == f.attrs.end()) return "none";
    return detail::ann_to_metric_string(it->second);
  }
  if (metric == "coord") {
    auto it = f.attrs.find(ann::kCoord);
    if (it == f.attrs.end()) return "none";
    return detail::ann_to_metric_string(it->second);
  }
  if (starts_with("selects_on.")) {
    std::string signal(metric.substr(11));
    auto arg = f.find_arg(signal);
    if (!arg) return "0";
    size_t n = 0;
    walk_ops(f, [&](const Operation &op) {
      if (op.op == Op::Select &&
          detail::slice_touches_arg(f, op.operands[0], *arg))
        ++n;
    });
    return std::to_string(n);
  }
  if (starts_with("role.") || starts_with("port.")) {
    bool role = starts_with("role.");
    std::string signal(metric.substr(5));
    for (const auto &a : f.args) {
      if (f.name_of(a.value) != signal) continue;
      auto it = a.attrs.find(role ? ann::kRole : ann::kPortClass);
      if (it == a.attrs.end()) return "unset";
      return detail::ann_to_metric_string(it->second);
    }
    return "no-such-arg";
  }
  return "<unknown-metric>";
}

/// Checks every non-taidl expectation against per-stage module snapshots.
/// Returns one human-readable message per failed entry.
inline std::vector<std::string> check_function_expectations(
    const Expectations &expect, const std::map<std::string, Module> &stages) {
  std::vector<std::string> failures;
  for (const auto &[key, want] : expect.entries) {
    if (key.rfind("taidl.", 0) == 0) continue;
    size_t d1 = key.find('.');
    if (d1 == std::string::npos) continue;
    std::string stage = key.substr(0, d1);
    std::string rest = key.substr(d1 + 1);
    size_t d2 = rest.find('.');
    if (d2 == std::string::npos) continue;
    std::string fn_name = rest.substr(0, d2);
    std::string metric = rest.substr(d2 + 1);
    auto st = stages.find(stage);
    if (st == stages.end()) {
      failures.push_back(key + ": no snapshot for stage '" + stage + "'");
      continue;
    }
    const Function *fn = st->second.find_function(fn_name);
    if (!fn) {
      failures.push_back(key + ": no function @" + fn_name);
      continue;
    }
    std::string got = measure_metric(*fn, metric);
    if (got != want)
      failures.push_back(key + ": expected '" + want + "', got '" + got + "'");
  }
  return failures;
}

}  // namespace atlaas

#pragma once

#include <set>
#include <string>

#include "atlaas/expectations.hpp"
#include "atlaas/passes/common.hpp"

namespace atlaas {
namespace passes {
namespace detail {

/// All SSA versions reachable from a memref argument: the argument itself,
/// store results, loop-carried copies, and region merge results.
inline std::set<ValueId> memref_versions(const Function &f, ValueId arg) {
  std::set<ValueId> versions{arg};
  bool changed = true;
  while (changed) {
    changed = false;
    walk_ops(f, [&](const Operation &op) {
      auto in = [&](ValueId v) { return versions.count(v) != 0; };
      auto add = [&](ValueId v) { changed |= versions.insert(v).second; };
      switch (op.op) {
        case Op::Store:
          if (in(op.operands[1])) add(op.results[0]);
          break;
        case Op::Select:
          if (in(op.operands[1]) || in(op.operands[2])) add(op.results[0]);
          break;
        case Op::For: {
          const Block &body = op.regions[0];
          for (size_t k = 0; k < op.operands.size(); ++k) {
            const Operation *y =
                body.ops.empty() ? nullptr : &body.ops.back();
            bool carried = in(op.operands[k]) ||
                           (y && y->op == Op::Yield &&
                            k < y->operands.size() && in(y->operands[k]));
            if (carried) {
              add(body.args[k + 1]);
              if (k < op.results.size()) add(op.results[k]);
            }
          }
          break;
        }
        case Op::If: {
          for (const auto &r : op.regions) {
            const Operation *y = r.ops.empty() ? nullptr : &r.ops.back();
            if (!y || y->op != Op::Yield) continue;
            for (size_t k = 0; k < op.results.size() && k < y->operands.size();
                 ++k)
              if (in(y->operands[k])) add(op.results[k]);
          }
          break;
        }
        default:
          break;
      }
    });
  }
  return versions;
}

inline std::string classify_port(const std::string &signal) {
  if (signal.find("dram") != std::string::npos) return "dram_addr";
  if (signal.find("spad") != std::string::npos ||
      signal.find("acc") != std::string::npos)
    return "spad_addr";
  return "data";
}

inline std::optional<std::vector<int64_t>> coord_from_asv(
    std::string_view asv) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : asv) {
    if (c == '_') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  auto numeric = [](const std::string &s) {
    if (s.empty()) return false;
    for (char c : s)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  };
  for (size_t i = parts.size(); i-- > 1;) {
    if (numeric(parts[i]) && numeric(parts[i - 1]))
      return std::vector<int64_t>{std::stoll(parts[i - 1]),
                                  std::stoll(parts[i])};
  }
  return std::nullopt;
}

// maximum(x, 0): select(cmpi sgt x, 0; x; 0)
inline bool slice_has_relu(const Function &f,
                           const std::set<const Operation *> &slice) {
  DefIndex index(const_cast<Function &>(f));
  for (const Operation *op : slice) {
    if (op->op != Op::Select) continue;
    Operation *cmp = index.def_op(op->operands[0], Op::Cmpi);
    if (!cmp || cmp->pred != CmpPred::Sgt) continue;
    auto zero = index.const_value(cmp->operands[1]);
    if (!zero || zero->bits != 0) continue;
    if (op->operands[1] == cmp->operands[0] &&
        op->operands[2] == cmp->operands[1])
      return true;
  }
  return false;
}

}  // namespace detail

inline void emit_taidl_metadata_impl(Function &f, PassReport &report) {
  auto annotate = [&](Annotations &attrs, const char *key, AnnValue v) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !(it->second == v)) {
      attrs[key] = std::move(v);
      ++report.annotations_added;
    }
  };

  // Argument roles from load/store footprints; port classes from the signal
  // naming convention.
  for (auto &a : f.args) {
    const Type &t = f.type_of(a.value);
    const std::string &signal = f.name_of(a.value);
    if (t.is_memref()) {
      auto versions = detail::memref_versions(f, a.value);
      bool loads = false, stores = false;
      walk_ops(f, [&](const Operation &op) {
        if (op.op == Op::Load) loads |= versions.count(op.operands[0]) != 0;
        if (op.op == Op::Store) stores |= versions.count(op.operands[1]) != 0;
      });
      const char *role = loads && stores ? "state"
                         : stores        ? "output"
                                         : "input";
      annotate(a.attrs, ann::kRole, std::string(role));
    } else {
      annotate(a.attrs, ann::kRole, std::string("attribute"));
    }
    annotate(a.attrs, ann::kPortClass, detail::classify_port(signal));
  }

  // Grid coordinates from the target ASV's trailing numeric suffix pair.
  if (auto coord = detail::coord_from_asv(f.target_asv()))
    annotate(f.attrs, ann::kCoord, *coord);

  // Compute classification: a tagged loop wins; a straight-line MAC on the
  // returned value is the degenerate single-element dot; anything else is
  // opaque and assembles into a safe stub.
  std::string compute = "opaque";
  bool has_dot = false, has_max = false;
  walk_ops(f, [&](const Operation &op) {
    if (op.op != Op::For) return;
    auto it = op.attrs.find(ann::kLinalgOp);
    if (it == op.attrs.end()) return;
    auto *s = std::get_if<std::string>(&it->second);
    if (!s) return;
    has_dot |= *s == "dot_product";
    has_max |= *s == "max_reduce";
  });
  std::set<const Operation *> slice;
  if (!f.body.ops.empty() && f.body.ops.back().op == Op::Return &&
      !f.body.ops.back().operands.empty())
    slice = atlaas::detail::backward_slice(f, f.body.ops.back().operands[0]);
  if (has_dot) {
    compute = "dot_product";
  } else if (has_max) {
    compute = "max_reduce";
  } else {
    for (const Operation *op : slice)
      if (op->attrs.count(ann::kMac)) compute = "dot_product";
  }
  // A pre-annotated hint (e.g. im2col) survives unless lifting found a shape.
  if (compute == "opaque") {
    auto it = f.attrs.find(ann::kCompute);
    if (it != f.attrs.end())
      if (auto *s = std::get_if<std::string>(&it->second); s && !s->empty())
        compute = *s;
  }
  annotate(f.attrs, ann::kCompute, compute);

  for (const Operation *op : slice) {
    if (auto clamp = decode_clamp(*op)) {
      annotate(f.attrs, ann::kTaidlClamp,
               std::vector<int64_t>{clamp->lo, clamp->hi});
      break;
    }
  }
  if (detail::slice_has_relu(f, slice))
    annotate(f.attrs, ann::kActivation, std::string("relu"));

  // Close the vocabulary: no foreign keys survive this pass.
  auto scrub = [&](Annotations &attrs) {
    for (auto it = attrs.begin(); it != attrs.end();) {
      if (!ann::closed_vocabulary().count(it->first))
        it = attrs.erase(it);
      else
        ++it;
    }
  };
  scrub(f.attrs);
  for (auto &a : f.args) scrub(a.attrs);
  walk_ops(f, [&](Operation &op) { scrub(op.attrs); });
}

}  // namespace passes

inline std::pair<Function, PassReport> emit_taidl_metadata(const Function &f) {
  Function out = f;
  PassReport report;
  report.pass = "emit-taidl-metadata";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::emit_taidl_metadata_impl(out, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

}  // namespace atlaas

#pragma once

#include <functional>
#include <thread>
#include <vector>

#include "atlaas/ir.hpp"
#include "atlaas/passes/canonicalize.hpp"
#include "atlaas/passes/detect.hpp"
#include "atlaas/passes/loops.hpp"
#include "atlaas/passes/metadata.hpp"
#include "atlaas/passes/specialize.hpp"
#include "atlaas/verify.hpp"

namespace atlaas {

struct PipelineOptions {
  unsigned mac_width_bound = 32;  // operand width above which a multiply is
                                  // treated as a bit-packing artifact
  unsigned workers = 1;
  /// Called after each pass has run over every function.
  std::function<void(const std::string &flag, const Module &)> observer;
};

inline const std::vector<std::string> &pipeline_pass_flags() {
  static const std::vector<std::string> flags = {
      "canon-bitmanip",    "narrow-types",      "detect-mac",
      "specialize-control", "detect-clamp",     "reconstruct-loops",
      "lift-to-linalg",    "emit-taidl-metadata",
  };
  return flags;
}

inline bool is_known_pass_flag(std::string_view flag) {
  for (const auto &f : pipeline_pass_flags())
    if (f == flag) return true;
  return false;
}

namespace passes {

/// Runs one pass over one function. On error the function is left unchanged
/// and the report carries the diagnostic (the fallback philosophy: never
/// abort the module for one function).
inline PassReport apply_pass_to_function(Function &f, std::string_view flag,
                                         const Descriptor *descriptor,
                                         const PipelineOptions &opts) {
  PassReport report;
  report.pass = std::string(flag);
  report.function = f.name;
  report.ops_before = count_ops(f);
  Function work = f;
  try {
    if (flag == "canon-bitmanip") {
      canon_bitmanip_impl(work, report);
    } else if (flag == "narrow-types") {
      narrow_types_impl(work, report);
    } else if (flag == "detect-mac") {
      detect_mac_impl(work, opts.mac_width_bound, report);
    } else if (flag == "specialize-control") {
      if (descriptor) specialize_control_impl(work, *descriptor, report);
    } else if (flag == "detect-clamp") {
      detect_clamp_impl(work, report);
    } else if (flag == "reconstruct-loops") {
      reconstruct_loops_impl(work, report);
    } else if (flag == "lift-to-linalg") {
      lift_to_linalg_impl(work, report);
    } else if (flag == "emit-taidl-metadata") {
      emit_taidl_metadata_impl(work, report);
    } else {
      throw PassError("unknown pass flag '" + std::string(flag) + "'");
    }
    f = std::move(work);
  } catch (const PassError &e) {
    report.note = e.what();
  }
  report.ops_after = count_ops(f);
  return report;
}

inline void for_each_function(Module &m, unsigned workers,
                              const std::function<void(size_t)> &body) {
  size_t n = m.functions.size();
  if (workers <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w)
    threads.emplace_back([&, w] {
      for (size_t i = w; i < n; i += workers) body(i);
    });
  for (auto &t : threads) t.join();
}

}  // namespace passes

/// Runs one pass over every function of the module; reports in function order.
inline std::vector<PassReport> apply_pass(Module &m, std::string_view flag,
                                          const PipelineOptions &opts = {}) {
  std::vector<PassReport> reports(m.functions.size());
  passes::for_each_function(m, opts.workers, [&](size_t i) {
    Function &f = m.functions[i];
    const Descriptor *d = m.find_descriptor(f.instruction());
    reports[i] = passes::apply_pass_to_function(f, flag, d, opts);
  });
  return reports;
}

struct PipelineResult {
  Module module;
  std::vector<PassReport> reports;
};

/// The full eight-pass lift. Pre-validates the module (including descriptor
/// control keys); pass order is fixed; running it twice is a fixpoint.
inline PipelineResult run_pipeline(Module m, const PipelineOptions &opts = {}) {
  auto violations = verify(m);
  if (!violations.empty()) throw VerifyError(std::move(violations));
  PipelineResult out;
  for (const auto &flag : pipeline_pass_flags()) {
    auto reports = apply_pass(m, flag, opts);
    for (auto &r : reports) out.reports.push_back(std::move(r));
    if (opts.observer) opts.observer(flag, m);
  }
  out.module = std::move(m);
  return out;
}

/// Spec-facing pipeline entry point mirroring the per-pass signatures.
inline PipelineResult run_pipeline(const Module &m,
                                   const std::vector<Descriptor> &descriptors,
                                   const PipelineOptions &opts = {}) {
  Module copy = m;
  for (const auto &d : descriptors)
    if (!copy.find_descriptor(d.instruction)) copy.descriptors.push_back(d);
  return run_pipeline(std::move(copy), opts);
}

}  // namespace atlaas

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "atlaas/eval.hpp"
#include "atlaas/ir.hpp"

namespace atlaas {

struct Budget {
  unsigned exhaustive_bits = 20;
  uint64_t samples = 10000;
  uint64_t seed = 0;
  unsigned workers = 1;
};

/// Pins a bit field of a scalar argument, e.g. rs1[4:3] = 2.
struct FieldPin {
  std::string arg;
  unsigned hi = 0, lo = 0;
  uint64_t value = 0;
};

/// Domain restriction: fully fixed arguments (one value per memref element)
/// plus pinned encoding fields.
struct Restriction {
  std::map<std::string, std::vector<int64_t>> fixed;
  std::vector<FieldPin> pins;

  bool empty() const { return fixed.empty() && pins.empty(); }
};

/// Derives the restricted input domain a descriptor's fixed controls imply
/// for one function. Control keys naming encoding fields become field pins.
inline Restriction restriction_from(const Descriptor &d, const Function &f) {
  Restriction r;
  for (const auto &[key, vals] : d.fixed_controls) {
    if (f.find_arg(key)) {
      r.fixed[key] = vals;
      continue;
    }
    if (const EncodingField *field = d.find_field(key)) {
      if (f.find_arg(field->arg) && !vals.empty())
        r.pins.push_back(FieldPin{field->arg, field->hi, field->lo,
                                  static_cast<uint64_t>(vals[0])});
    }
  }
  return r;
}

struct SignatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Counterexample {
  Environment env;
  std::string out_left, out_right;
};

struct EquivReport {
  enum class Verdict { Equivalent, CounterexampleFound, SampledNoMismatch };
  enum class Strategy { Exhaustive, Random };

  Verdict verdict = Verdict::Equivalent;
  Strategy strategy = Strategy::Exhaustive;
  uint64_t free_bits = 0;
  uint64_t samples_run = 0;
  uint64_t seed = 0;
  uint64_t mismatches = 0;
  std::optional<Counterexample> cex;

  bool holds() const { return verdict != Verdict::CounterexampleFound; }

  std::string to_text() const {
    std::string out;
    out += "verdict = ";
    switch (verdict) {
      case Verdict::Equivalent: out += "equivalent"; break;
      case Verdict::CounterexampleFound: out += "counterexample"; break;
      case Verdict::SampledNoMismatch: out += "domain_too_large_sampled"; break;
    }
    out += "\nstrategy = ";
    out += strategy == Strategy::Exhaustive ? "exhaustive" : "random";
    out += "\nfree_bits = " + std::to_string(free_bits);
    out += "\nsamples = " + std::to_string(samples_run);
    out += "\nseed = " + std::to_string(seed);
    out += "\nmismatches = " + std::to_string(mismatches);
    out += "\n";
    if (cex) {
      for (const auto &[k, v] : cex->env.args)
        out += "cex." + k + " = " + runtime_value_to_string(v) + "\n";
      out += "cex.out_left = " + cex->out_left + "\n";
      out += "cex.out_right = " + cex->out_right + "\n";
    }
    return out;
  }
};

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class DomainSampler {
 public:
  DomainSampler(const Function &f, const Restriction &r, uint64_t seed)
      : f_(f), r_(r), seed_(seed) {
    for (const auto &a : f.args) {
      const std::string &name = f.name_of(a.value);
      const Type &t = f.type_of(a.value);
      ArgInfo info{name, t, r.fixed.count(name) > 0, {}};
      for (const auto &p : r.pins)
        if (p.arg == name) info.pins.push_back(p);
      args_.push_back(std::move(info));
    }
    build_bit_slots();
    build_corners();
  }

  uint64_t free_bits() const { return bit_slots_.size(); }
  uint64_t corner_count() const { return corner_total_; }

  /// Base environment: zeros with fixed controls and pins applied.
  Environment base_env() const {
    Environment env = Environment::zeros(f_);
    apply_restriction(env);
    return env;
  }

  Environment exhaustive_env(uint64_t n) const {
    Environment env = base_env();
    for (size_t i = 0; i < bit_slots_.size(); ++i) {
      if (!((n >> i) & 1)) continue;
      const BitSlot &s = bit_slots_[i];
      RuntimeValue &rv = env.args[s.arg];
      if (auto *b = std::get_if<BitVec>(&rv))
        b->bits |= u128{1} << s.bit;
      else
        std::get<MemrefValue>(rv).elems[s.elem].bits |= u128{1} << s.bit;
    }
    return env;
  }

  /// Deterministic per-index environment: corner values first, then seeded
  /// random samples. Corner coverage makes boundary-sensitive mutations
  /// falsifiable without a solver.
  Environment sample_env(uint64_t index) const {
    if (index < corner_total_) return corner_env(index);
    Environment env = base_env();
    std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(index)));
    for (const auto &a : args_) {
      if (a.fixed) continue;
      RuntimeValue &rv = env.args[a.name];
      if (auto *b = std::get_if<BitVec>(&rv))
        *b = random_bits(rng, b->width);
      else {
        auto &m = std::get<MemrefValue>(rv);
        for (auto &e : m.elems) e = random_bits(rng, e.width);
      }
    }
    apply_restriction(env);
    return env;
  }

 private:
  struct ArgInfo {
    std::string name;
    Type type;
    bool fixed;
    std::vector<FieldPin> pins;
  };
  struct BitSlot {
    std::string arg;
    size_t elem;
    unsigned bit;
  };

  static BitVec random_bits(std::mt19937_64 &rng, unsigned width) {
    u128 v = rng();
    if (width > 64) v |= u128{rng()} << 64;
    return BitVec::make(width, v);
  }

  void apply_restriction(Environment &env) const {
    for (const auto &a : args_) {
      RuntimeValue &rv = env.args.at(a.name);
      auto fixed_it = r_.fixed.find(a.name);
      if (fixed_it != r_.fixed.end()) {
        const auto &vals = fixed_it->second;
        if (auto *b = std::get_if<BitVec>(&rv)) {
          *b = BitVec::make_signed(b->width, vals.empty() ? 0 : vals[0]);
        } else {
          auto &m = std::get<MemrefValue>(rv);
          for (size_t i = 0; i < m.elems.size(); ++i)
            m.elems[i] = BitVec::make_signed(
                m.elems[i].width, i < vals.size() ? vals[i] : vals.back());
        }
      }
      for (const auto &p : a.pins) {
        if (auto *b = std::get_if<BitVec>(&rv)) {
          unsigned fw = p.hi - p.lo + 1;
          u128 field_mask = BitVec::mask(fw);
          b->bits &= ~(field_mask << p.lo);
          b->bits |= (u128{p.value} & field_mask) << p.lo;
          b->bits &= BitVec::mask(b->width);
        }
      }
    }
  }

  void build_bit_slots() {
    for (const auto &a : args_) {
      if (a.fixed) continue;
      unsigned w = a.type.is_index() ? 64 : a.type.width;
      size_t elems =
          a.type.is_memref() ? static_cast<size_t>(a.type.element_count()) : 1;
      for (size_t e = 0; e < elems; ++e)
        for (unsigned bit = 0; bit < w; ++bit) {
          bool pinned = false;
          if (!a.type.is_memref())
            for (const auto &p : a.pins)
              pinned |= bit >= p.lo && bit <= p.hi;
          if (!pinned) bit_slots_.push_back(BitSlot{a.name, e, bit});
        }
    }
  }

  void build_corners() {
    corner_total_ = 1;
    for (const auto &a : args_) {
      if (a.fixed) {
        corner_choices_.push_back({});
        continue;
      }
      unsigned w = a.type.is_index() ? 64 : a.type.width;
      std::vector<u128> vals = {0, 1, BitVec::mask(w),
                                u128{1} << (w - 1),          // min signed
                                BitVec::mask(w) >> 1};       // max signed
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      corner_choices_.push_back(vals);
      corner_total_ *= vals.size();
      if (corner_total_ > kMaxCorners) {
        corner_total_ = kMaxCorners;
      }
    }
  }

  Environment corner_env(uint64_t index) const {
    Environment env = base_env();
    uint64_t n = index;
    for (size_t i = 0; i < args_.size(); ++i) {
      const auto &choices = corner_choices_[i];
      if (choices.empty()) continue;
      u128 v = choices[n % choices.size()];
      n /= choices.size();
      RuntimeValue &rv = env.args.at(args_[i].name);
      if (auto *b = std::get_if<BitVec>(&rv))
        *b = BitVec::make(b->width, v);
      else {
        auto &m = std::get<MemrefValue>(rv);
        for (auto &e : m.elems) e = BitVec::make(e.width, v);
      }
    }
    apply_restriction(env);
    return env;
  }

  static constexpr uint64_t kMaxCorners = 4096;

  const Function &f_;
  const Restriction &r_;
  uint64_t seed_;
  std::vector<ArgInfo> args_;
  std::vector<BitSlot> bit_slots_;
  std::vector<std::vector<u128>> corner_choices_;
  uint64_t corner_total_ = 1;
};

inline bool runtime_equal(const RuntimeValue &a, const RuntimeValue &b) {
  if (auto *x = std::get_if<BitVec>(&a)) {
    auto *y = std::get_if<BitVec>(&b);
    return y && *x == *y;
  }
  auto *y = std::get_if<MemrefValue>(&b);
  return y && std::get<MemrefValue>(a) == *y;
}

}  // namespace detail

inline void check_signatures_match(const Function &f, const Function &g) {
  if (f.args.size() != g.args.size())
    throw SignatureError("argument count differs between @" + f.name +
                         " and @" + g.name);
  for (size_t i = 0; i < f.args.size(); ++i) {
    if (f.name_of(f.args[i].value) != g.name_of(g.args[i].value) ||
        !(f.type_of(f.args[i].value) == g.type_of(g.args[i].value)))
      throw SignatureError("argument " + std::to_string(i) +
                           " differs between @" + f.name + " and @" + g.name);
  }
}

/// Compares two functions over the (possibly restricted) input domain:
/// exhaustively when the free input bits fit the budget, otherwise with
/// seeded corner + random sampling. Any counterexample replays exactly.
inline EquivReport check_equivalence(const Function &f, const Function &g,
                                     const Restriction &restriction = {},
                                     const Budget &budget = {}) {
  check_signatures_match(f, g);
  detail::DomainSampler sampler(f, restriction, budget.seed);

  EquivReport report;
  report.free_bits = sampler.free_bits();
  report.seed = budget.seed;

  bool exhaustive = sampler.free_bits() <= budget.exhaustive_bits &&
                    sampler.free_bits() < 63;
  uint64_t total = exhaustive ? (uint64_t{1} << sampler.free_bits())
                              : budget.samples;
  report.strategy = exhaustive ? EquivReport::Strategy::Exhaustive
                               : EquivReport::Strategy::Random;
  report.samples_run = total;

  auto env_at = [&](uint64_t i) {
    return exhaustive ? sampler.exhaustive_env(i) : sampler.sample_env(i);
  };

  // Workers partition the index space; the lowest-index counterexample wins,
  // so the verdict is independent of the worker count.
  unsigned workers = std::max(1u, budget.workers);
  std::vector<std::optional<std::pair<uint64_t, Counterexample>>> found(workers);
  auto run_range = [&](unsigned w) {
    for (uint64_t i = w; i < total; i += workers) {
      Environment env = env_at(i);
      RuntimeValue left = evaluate(f, env);
      RuntimeValue right = evaluate(g, env);
      if (!detail::runtime_equal(left, right)) {
        found[w] = {i, Counterexample{std::move(env),
                                      runtime_value_to_string(left),
                                      runtime_value_to_string(right)}};
        return;
      }
    }
  };
  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w)
      threads.emplace_back(run_range, w);
    for (auto &t : threads) t.join();
  }

  std::optional<std::pair<uint64_t, Counterexample>> best;
  for (auto &c : found)
    if (c && (!best || c->first < best->first)) best = std::move(c);

  if (best) {
    report.verdict = EquivReport::Verdict::CounterexampleFound;
    report.mismatches = 1;
    report.cex = std::move(best->second);
  } else {
    report.verdict = exhaustive ? EquivReport::Verdict::Equivalent
                                : EquivReport::Verdict::SampledNoMismatch;
  }
  return report;
}

}  // namespace atlaas

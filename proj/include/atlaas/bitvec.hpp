#pragma once

#include <cstdint>
#include <string>

namespace atlaas {

using u128 = unsigned __int128;
using s128 = __int128;

/// Fixed-width two's-complement integer, 1..128 bits.
///
/// Arithmetic wraps at the declared width. Shifts follow Verilog semantics:
/// shifting by >= width yields 0 (shl, lshr) or sign fill (ashr).
struct BitVec {
  unsigned width = 1;
  u128 bits = 0;  // invariant: bits == bits & mask(width)

  static constexpr u128 mask(unsigned w) {
    return w >= 128 ? ~u128{0} : ((u128{1} << w) - 1);
  }

  static BitVec make(unsigned w, u128 v) { return BitVec{w, v & mask(w)}; }
  static BitVec make_signed(unsigned w, s128 v) {
    return make(w, static_cast<u128>(v));
  }

  bool sign_bit() const { return width > 0 && ((bits >> (width - 1)) & 1); }

  s128 to_signed() const {
    if (!sign_bit()) return static_cast<s128>(bits);
    return static_cast<s128>(bits | ~mask(width));
  }
  u128 to_unsigned() const { return bits; }

  BitVec zext(unsigned w) const { return make(w, bits); }
  BitVec sext(unsigned w) const {
    return make(w, static_cast<u128>(to_signed()));
  }
  BitVec trunc(unsigned w) const { return make(w, bits); }

  friend BitVec operator+(const BitVec &a, const BitVec &b) {
    return make(a.width, a.bits + b.bits);
  }
  friend BitVec operator-(const BitVec &a, const BitVec &b) {
    return make(a.width, a.bits - b.bits);
  }
  friend BitVec operator*(const BitVec &a, const BitVec &b) {
    return make(a.width, a.bits * b.bits);
  }
  friend BitVec operator&(const BitVec &a, const BitVec &b) {
    return make(a.width, a.bits & b.bits);
  }
  friend BitVec operator|(const BitVec &a, const BitVec &b) {
    return make(a.width, a.bits | b.bits);
  }
  friend BitVec operator^(const BitVec &a, const BitVec &b) {
    return make(a.width, a.bits ^ b.bits);
  }

  BitVec shl(const BitVec &amount) const {
    u128 n = amount.bits;
    if (n >= width) return make(width, 0);
    return make(width, bits << static_cast<unsigned>(n));
  }
  BitVec lshr(const BitVec &amount) const {
    u128 n = amount.bits;
    if (n >= width) return make(width, 0);
    return make(width, bits >> static_cast<unsigned>(n));
  }
  BitVec ashr(const BitVec &amount) const {
    u128 n = amount.bits;
    if (n >= width) return make(width, sign_bit() ? mask(width) : 0);
    u128 shifted = bits >> static_cast<unsigned>(n);
    if (sign_bit())
      shifted |= mask(width) & ~(mask(width) >> static_cast<unsigned>(n));
    return make(width, shifted);
  }

  friend bool operator==(const BitVec &a, const BitVec &b) {
    return a.width == b.width && a.bits == b.bits;
  }
  friend bool operator!=(const BitVec &a, const BitVec &b) {
    return !(a == b);
  }

  /// Signed decimal, except width 1 which prints as 0/1.
  std::string to_string() const {
    if (width == 1) return bits ? "1" : "0";
    return signed_decimal(to_signed());
  }
  std::string to_unsigned_string() const { return unsigned_decimal(bits); }

  static std::string unsigned_decimal(u128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v != 0) {
      out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    return out;
  }
  static std::string signed_decimal(s128 v) {
    if (v < 0) return "-" + unsigned_decimal(static_cast<u128>(-v));
    return unsigned_decimal(static_cast<u128>(v));
  }
};

}  // namespace atlaas

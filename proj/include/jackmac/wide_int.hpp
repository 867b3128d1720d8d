#pragma once

// Fixed-width two's-complement integer used as the Jack unit's accumulator.
// This is the datapath's own adder model; the verification oracles never use
// it.

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace jackmac {

class WideInt {
 public:
  static constexpr int kLimbs = 16;
  static constexpr int kBits = kLimbs * 64;

  WideInt() = default;
  static WideInt from_int64(std::int64_t v);

  // *this += (negative ? -1 : 1) * magnitude * 2^shift. Throws
  // std::overflow_error when the shifted term does not fit below the sign bit.
  void add_shifted(std::uint64_t magnitude, bool negative, int shift);
  WideInt& operator+=(const WideInt& o);
  WideInt shifted_left(int shift) const;
  WideInt negated() const;

  bool is_zero() const;
  bool is_negative() const { return (limbs_[kLimbs - 1] >> 63) != 0; }
  WideInt magnitude() const { return is_negative() ? negated() : *this; }

  // Position of the leading one plus one; 0 for zero. Only meaningful for
  // non-negative values.
  int bit_length() const;
  bool bit(int pos) const;
  // Bits [lo, lo + count) as an unsigned integer; positions below 0 read as 0.
  std::uint64_t extract(int lo, int count) const;
  // Any set bit strictly below pos.
  bool any_below(int pos) const;

  std::optional<std::int64_t> to_int64() const;
  std::string to_hex() const;  // signed, e.g. "-0x1f"

  friend bool operator==(const WideInt&, const WideInt&) = default;

 private:
  std::array<std::uint64_t, kLimbs> limbs_{};
};

}  // namespace jackmac

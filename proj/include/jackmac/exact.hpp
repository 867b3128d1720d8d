#pragma once

// Exact dyadic rationals: (-1)^s * significand * 2^exponent.
//
// Every value produced by a binary format (and every sum or product of such
// values) is dyadic, so this is closed under the operations the oracles need.
// Representation is unique: the significand is odd, or the value is zero.

#include <compare>
#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace jackmac {

using BigInt = boost::multiprecision::cpp_int;

class ExactValue {
 public:
  ExactValue() = default;  // +0

  static ExactValue zero(bool negative = false);
  static ExactValue from_parts(bool negative, BigInt significand, std::int64_t exponent);
  static ExactValue from_int(std::int64_t v);
  static ExactValue pow2(std::int64_t k);
  // Throws std::domain_error("unrepresentable") for NaN/Inf.
  static ExactValue from_double(double v);

  bool is_zero() const { return significand_ == 0; }
  bool negative() const { return negative_; }
  int sign() const { return negative_ ? -1 : 1; }
  const BigInt& significand() const { return significand_; }
  std::int64_t exponent() const { return exponent_; }

  // floor(log2(|v|)); undefined for zero.
  std::int64_t floor_log2() const;

  ExactValue operator-() const;
  ExactValue abs() const;
  ExactValue ldexp(std::int64_t k) const;

  friend ExactValue operator+(const ExactValue& a, const ExactValue& b);
  friend ExactValue operator-(const ExactValue& a, const ExactValue& b);
  friend ExactValue operator*(const ExactValue& a, const ExactValue& b);
  ExactValue& operator+=(const ExactValue& o) { return *this = *this + o; }

  // Value comparison; +0 and -0 compare equal.
  friend bool operator==(const ExactValue& a, const ExactValue& b);
  friend std::strong_ordering operator<=>(const ExactValue& a, const ExactValue& b);

  // Bit-level identity including the sign of zero.
  bool identical(const ExactValue& o) const;

  // Nearest double (ties-to-even via long division is not attempted; this is
  // correctly rounded only when the significand fits in 53 bits).
  double to_double() const;
  std::string to_string() const;  // e.g. "-3*2^-1", "+0"

 private:
  void normalize();

  bool negative_ = false;
  BigInt significand_ = 0;
  std::int64_t exponent_ = 0;
};

}  // namespace jackmac

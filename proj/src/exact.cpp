#include "jackmac/exact.hpp"

#include <cmath>
#include <stdexcept>

namespace jackmac {

namespace {

std::int64_t msb(const BigInt& v) { return static_cast<std::int64_t>(boost::multiprecision::msb(v)); }

}  // namespace

ExactValue ExactValue::zero(bool negative) {
  ExactValue v;
  v.negative_ = negative;
  return v;
}

ExactValue ExactValue::from_parts(bool negative, BigInt significand, std::int64_t exponent) {
  if (significand < 0) throw std::invalid_argument("ExactValue significand must be non-negative");
  ExactValue v;
  v.negative_ = negative;
  v.significand_ = std::move(significand);
  v.exponent_ = exponent;
  v.normalize();
  return v;
}

ExactValue ExactValue::from_int(std::int64_t v) {
  // Avoid negating INT64_MIN in signed arithmetic.
  const bool neg = v < 0;
  const std::uint64_t mag = neg ? (~static_cast<std::uint64_t>(v) + 1) : static_cast<std::uint64_t>(v);
  return from_parts(neg, BigInt(mag), 0);
}

ExactValue ExactValue::pow2(std::int64_t k) { return from_parts(false, BigInt(1), k); }

ExactValue ExactValue::from_double(double v) {
  if (!std::isfinite(v)) throw std::domain_error("unrepresentable");
  const bool neg = std::signbit(v);
  if (v == 0.0) return zero(neg);
  int e = 0;
  const double frac = std::frexp(std::fabs(v), &e);  // frac in [0.5, 1)
  const auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  return from_parts(neg, BigInt(mant), static_cast<std::int64_t>(e) - 53);
}

void ExactValue::normalize() {
  if (significand_ == 0) {
    exponent_ = 0;
    return;
  }
  const auto tz = static_cast<std::int64_t>(boost::multiprecision::lsb(significand_));
  if (tz > 0) {
    significand_ >>= static_cast<unsigned>(tz);
    exponent_ += tz;
  }
}

std::int64_t ExactValue::floor_log2() const {
  if (is_zero()) throw std::domain_error("floor_log2 of zero");
  return exponent_ + msb(significand_);
}

ExactValue ExactValue::operator-() const {
  ExactValue v = *this;
  v.negative_ = !negative_;
  return v;
}

ExactValue ExactValue::abs() const {
  ExactValue v = *this;
  v.negative_ = false;
  return v;
}

ExactValue ExactValue::ldexp(std::int64_t k) const {
  ExactValue v = *this;
  if (!v.is_zero()) v.exponent_ += k;
  return v;
}

ExactValue operator*(const ExactValue& a, const ExactValue& b) {
  const bool neg = a.negative_ != b.negative_;
  if (a.is_zero() || b.is_zero()) return ExactValue::zero(neg);
  return ExactValue::from_parts(neg, a.significand_ * b.significand_, a.exponent_ + b.exponent_);
}

ExactValue operator+(const ExactValue& a, const ExactValue& b) {
  if (a.is_zero() && b.is_zero()) return ExactValue::zero(a.negative_ && b.negative_);
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const std::int64_t e = std::min(a.exponent_, b.exponent_);
  BigInt sa = a.significand_ << static_cast<unsigned>(a.exponent_ - e);
  BigInt sb = b.significand_ << static_cast<unsigned>(b.exponent_ - e);
  if (a.negative_) sa = -sa;
  if (b.negative_) sb = -sb;
  BigInt s = sa + sb;
  if (s == 0) return ExactValue::zero();
  const bool neg = s < 0;
  if (neg) s = -s;
  return ExactValue::from_parts(neg, std::move(s), e);
}

ExactValue operator-(const ExactValue& a, const ExactValue& b) { return a + (-b); }

bool operator==(const ExactValue& a, const ExactValue& b) {
  if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero();
  return a.negative_ == b.negative_ && a.exponent_ == b.exponent_ && a.significand_ == b.significand_;
}

std::strong_ordering operator<=>(const ExactValue& a, const ExactValue& b) {
  const ExactValue d = a - b;
  if (d.is_zero()) return std::strong_ordering::equal;
  return d.negative() ? std::strong_ordering::less : std::strong_ordering::greater;
}

bool ExactValue::identical(const ExactValue& o) const {
  return negative_ == o.negative_ && exponent_ == o.exponent_ && significand_ == o.significand_;
}

double ExactValue::to_double() const {
  if (is_zero()) return negative_ ? -0.0 : 0.0;
  // Keep the top 64 bits; the residual only matters for >53-bit significands.
  const std::int64_t width = msb(significand_) + 1;
  std::int64_t drop = width > 64 ? width - 64 : 0;
  const auto top = static_cast<std::uint64_t>(significand_ >> static_cast<unsigned>(drop));
  const double mag = std::ldexp(static_cast<double>(top), static_cast<int>(exponent_ + drop));
  return negative_ ? -mag : mag;
}

std::string ExactValue::to_string() const {
  if (is_zero()) return negative_ ? "-0" : "+0";
  return (negative_ ? "-" : "+") + significand_.str() + "*2^" + std::to_string(exponent_);
}

}  // namespace jackmac

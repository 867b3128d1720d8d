#include "jackmac/wide_int.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace jackmac {

WideInt WideInt::from_int64(std::int64_t v) {
  WideInt w;
  const std::uint64_t fill = v < 0 ? ~0ull : 0ull;
  w.limbs_.fill(fill);
  w.limbs_[0] = static_cast<std::uint64_t>(v);
  return w;
}

void WideInt::add_shifted(std::uint64_t magnitude, bool negative, int shift) {
  if (magnitude == 0) return;
  if (shift < 0) throw std::invalid_argument("negative shift");
  if (shift + std::bit_width(magnitude) > kBits - 8) throw std::overflow_error("accumulator overflow");
  const int limb = shift / 64;
  const int off = shift % 64;
  const std::uint64_t lo = magnitude << off;
  const std::uint64_t hi = off == 0 ? 0 : magnitude >> (64 - off);

  if (!negative) {
    unsigned __int128 carry = 0;
    for (int i = limb; i < kLimbs; ++i) {
      std::uint64_t addend = i == limb ? lo : (i == limb + 1 ? hi : 0);
      if (addend == 0 && carry == 0 && i > limb + 1) break;
      const unsigned __int128 s = static_cast<unsigned __int128>(limbs_[i]) + addend + carry;
      limbs_[i] = static_cast<std::uint64_t>(s);
      carry = s >> 64;
    }
    return;
  }
  std::uint64_t borrow = 0;
  for (int i = limb; i < kLimbs; ++i) {
    std::uint64_t sub = i == limb ? lo : (i == limb + 1 ? hi : 0);
    if (sub == 0 && borrow == 0 && i > limb + 1) break;
    const std::uint64_t cur = limbs_[i];
    const std::uint64_t r = cur - sub - borrow;
    borrow = (cur < sub || (cur - sub) < borrow) ? 1 : 0;
    limbs_[i] = r;
  }
}

WideInt& WideInt::operator+=(const WideInt& o) {
  unsigned __int128 carry = 0;
  for (int i = 0; i < kLimbs; ++i) {
    const unsigned __int128 s = static_cast<unsigned __int128>(limbs_[i]) + o.limbs_[i] + carry;
    limbs_[i] = static_cast<std::uint64_t>(s);
    carry = s >> 64;
  }
  return *this;
}

WideInt WideInt::shifted_left(int shift) const {
  if (shift < 0) throw std::invalid_argument("negative shift");
  if (is_zero()) return *this;
  const WideInt mag = magnitude();
  if (mag.bit_length() + shift > kBits - 8) throw std::overflow_error("accumulator overflow");
  WideInt r;
  const int limb = shift / 64;
  const int off = shift % 64;
  for (int i = kLimbs - 1; i >= 0; --i) {
    const int src = i - limb;
    if (src < 0) break;
    std::uint64_t v = limbs_[src] << off;
    if (off != 0 && src >= 1) v |= limbs_[src - 1] >> (64 - off);
    r.limbs_[i] = v;
  }
  return r;
}

WideInt WideInt::negated() const {
  WideInt r;
  unsigned __int128 carry = 1;
  for (int i = 0; i < kLimbs; ++i) {
    const unsigned __int128 s = static_cast<unsigned __int128>(~limbs_[i]) + carry;
    r.limbs_[i] = static_cast<std::uint64_t>(s);
    carry = s >> 64;
  }
  return r;
}

bool WideInt::is_zero() const {
  for (auto l : limbs_) {
    if (l != 0) return false;
  }
  return true;
}

int WideInt::bit_length() const {
  for (int i = kLimbs - 1; i >= 0; --i) {
    if (limbs_[i] != 0) return i * 64 + std::bit_width(limbs_[i]);
  }
  return 0;
}

bool WideInt::bit(int pos) const {
  if (pos < 0) return false;
  if (pos >= kBits) return is_negative();
  return (limbs_[pos / 64] >> (pos % 64)) & 1u;
}

std::uint64_t WideInt::extract(int lo, int count) const {
  std::uint64_t r = 0;
  for (int i = count - 1; i >= 0; --i) r = (r << 1) | (bit(lo + i) ? 1u : 0u);
  return r;
}

bool WideInt::any_below(int pos) const {
  if (pos <= 0) return false;
  const int full = std::min(pos / 64, kLimbs);
  for (int i = 0; i < full; ++i) {
    if (limbs_[i] != 0) return true;
  }
  if (full >= kLimbs) return false;
  const int rem = pos % 64;
  return rem != 0 && (limbs_[full] & ((1ull << rem) - 1)) != 0;
}

std::optional<std::int64_t> WideInt::to_int64() const {
  const std::uint64_t fill = is_negative() ? ~0ull : 0ull;
  for (int i = 1; i < kLimbs; ++i) {
    if (limbs_[i] != fill) return std::nullopt;
  }
  const auto v = static_cast<std::int64_t>(limbs_[0]);
  if ((v < 0) != is_negative()) return std::nullopt;
  return v;
}

std::string WideInt::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  const WideInt mag = magnitude();
  const int nibbles = std::max(1, (mag.bit_length() + 3) / 4);
  std::string s = is_negative() ? "-0x" : "0x";
  for (int i = nibbles - 1; i >= 0; --i) s.push_back(kDigits[mag.extract(4 * i, 4)]);
  return s;
}

}  // namespace jackmac

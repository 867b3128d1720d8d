#include "jackmac/oracle.hpp"

#include <stdexcept>

namespace jackmac::oracle {

namespace {

constexpr int kFp16MinExp = -14;
constexpr int kFp16MaxExp = 15;
constexpr std::uint32_t kFp16MaxFinite = 0x7BFF;

}  // namespace

ExactDot exact_dot_terms(std::span<const ExactValue> xs, std::span<const ExactValue> ws) {
  if (xs.size() != ws.size()) throw std::invalid_argument("exact_dot: length mismatch");
  ExactDot d;
  d.terms.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d.terms.push_back(xs[i] * ws[i]);
    d.sum += d.terms.back();
  }
  return d;
}

ExactValue exact_dot(std::span<const ExactValue> xs, std::span<const ExactValue> ws) {
  return exact_dot_terms(xs, ws).sum;
}

Fp16Result truncate_exact_to_fp16_ex(const ExactValue& v) {
  const FormatDescriptor f16 = presets::fp16();
  Fp16Result r;
  const std::uint32_t sign = v.negative() ? 0x8000u : 0u;
  if (v.is_zero()) {
    r.code = ScalarCode(f16, sign);
    return r;
  }
  const std::int64_t e = v.floor_log2();
  if (e < kFp16MinExp) {
    r.flushed = true;
    r.code = ScalarCode(f16, sign);
    return r;
  }
  if (e > kFp16MaxExp) {
    r.saturated = true;
    r.code = ScalarCode(f16, sign | kFp16MaxFinite);
    return r;
  }
  // |v| / 2^(e-10) lies in [1024, 2048); floor is the 11-bit significand.
  const ExactValue scaled = v.abs().ldexp(10 - e);
  BigInt q = scaled.significand();
  if (scaled.exponent() >= 0) {
    q <<= static_cast<unsigned>(scaled.exponent());
  } else {
    q >>= static_cast<unsigned>(-scaled.exponent());
  }
  const auto sig = q.convert_to<std::uint32_t>();
  const auto field = static_cast<std::uint32_t>(e + 15);
  r.code = ScalarCode(f16, sign | (field << 10) | (sig & 0x3FFu));
  return r;
}

ScalarCode truncate_exact_to_fp16(const ExactValue& v) { return truncate_exact_to_fp16_ex(v).code; }

ScalarCode saturate16(const ExactValue& v) {
  if (!v.is_zero() && v.exponent() < 0) throw std::invalid_argument("saturate16: value is not an integer");
  std::int64_t out = 0;
  if (!v.is_zero()) {
    if (v > ExactValue::from_int(32767)) {
      out = 32767;
    } else if (v < ExactValue::from_int(-32768)) {
      out = -32768;
    } else {
      const BigInt mag = v.significand() << static_cast<unsigned>(v.exponent());
      out = mag.convert_to<std::int64_t>() * v.sign();
    }
  }
  return ScalarCode(presets::int16(), static_cast<std::uint16_t>(static_cast<std::int16_t>(out)));
}

ExactValue mac_exact(std::span<const ScalarCode> x, std::span<const ScalarCode> w, std::optional<int> e_x,
                     std::optional<int> e_y, const std::optional<ScalarCode>& acc_in) {
  if (x.size() != w.size()) throw std::invalid_argument("mac_exact: length mismatch");
  std::vector<ExactValue> xs, ws;
  for (const auto& c : x) xs.push_back(decode(c));
  for (const auto& c : w) ws.push_back(decode(c));
  ExactValue sum = exact_dot(xs, ws);
  if (!x.empty() && x.front().format.is_mx()) sum = sum.ldexp(static_cast<std::int64_t>(e_x.value_or(0)) + e_y.value_or(0));
  if (acc_in) sum += decode(*acc_in);
  return sum;
}

ScalarCode mac_expected(std::span<const ScalarCode> x, std::span<const ScalarCode> w, std::optional<int> e_x,
                        std::optional<int> e_y, const std::optional<ScalarCode>& acc_in) {
  const ExactValue v = mac_exact(x, w, e_x, e_y, acc_in);
  if (!x.empty() && x.front().format.kind == FormatKind::kInt) return saturate16(v);
  return truncate_exact_to_fp16(v);
}

ExactMatrix reference_gemm(const ExactMatrix& a, const ExactMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("reference_gemm: shape mismatch");
  if (a.data.size() != a.rows * a.cols || b.data.size() != b.rows * b.cols)
    throw std::invalid_argument("reference_gemm: malformed matrix");
  ExactMatrix c{a.rows, b.cols, std::vector<ExactValue>(a.rows * b.cols)};
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.cols; ++j) {
      ExactValue s;
      for (std::size_t k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  }
  return c;
}

ExactMatrix quantize_rows(const ExactMatrix& a, const FormatDescriptor& fmt) {
  ExactMatrix q{a.rows, a.cols, std::vector<ExactValue>(a.data.size())};
  for (std::size_t r = 0; r < a.rows; ++r) {
    if (!fmt.is_mx()) {
      for (std::size_t c = 0; c < a.cols; ++c) q.at(r, c) = decode(encode(a.at(r, c), fmt));
      continue;
    }
    const auto bs = static_cast<std::size_t>(fmt.block_size);
    for (std::size_t c0 = 0; c0 < a.cols; c0 += bs) {
      std::vector<ExactValue> block(bs);
      for (std::size_t i = 0; i < bs && c0 + i < a.cols; ++i) block[i] = a.at(r, c0 + i);
      const auto deq = dequantize_block(quantize_block(block, fmt));
      for (std::size_t i = 0; i < bs && c0 + i < a.cols; ++i) q.at(r, c0 + i) = deq[i];
    }
  }
  return q;
}

}  // namespace jackmac::oracle

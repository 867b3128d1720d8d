#include "jackmac/formats.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace jackmac {

namespace {

// Rounds sig * 2^-shift to an integer, ties to even.
BigInt shift_round_half_even(const BigInt& sig, std::int64_t shift) {
  if (shift <= 0) return sig << static_cast<unsigned>(-shift);
  const auto s = static_cast<unsigned>(shift);
  BigInt q = sig >> s;
  const BigInt rem = sig - (q << s);
  const BigInt half = BigInt(1) << (s - 1);
  if (rem > half || (rem == half && (q & 1) != 0)) ++q;
  return q;
}

std::uint32_t twos_complement(std::int64_t v, int width) {
  return static_cast<std::uint32_t>(static_cast<std::uint64_t>(v) & ((1ull << width) - 1ull));
}

std::int64_t sign_extend(std::uint32_t bits, int width) {
  const std::uint32_t top = 1u << (width - 1);
  return static_cast<std::int64_t>(bits ^ top) - static_cast<std::int64_t>(top);
}

ScalarCode encode_float(const ExactValue& value, const FormatDescriptor& fmt) {
  const int m = fmt.mantissa_bits;
  const std::uint32_t sign = value.negative() ? 1u << (fmt.element_bits() - 1) : 0u;
  if (value.is_zero()) return {fmt, sign};

  std::int64_t e = value.floor_log2();
  if (e < fmt.min_normal_exponent()) return {fmt, sign};  // flush

  BigInt q = shift_round_half_even(value.significand(), e - m - value.exponent());
  if (q == (BigInt(1) << (m + 1))) {
    q >>= 1;
    ++e;
  }
  std::uint32_t field = 0;
  std::uint32_t mant = 0;
  if (e > fmt.max_normal_exponent()) {
    field = static_cast<std::uint32_t>(fmt.max_exponent_field());
    mant = (1u << m) - 1u;
  } else {
    field = static_cast<std::uint32_t>(e + fmt.bias);
    mant = static_cast<std::uint32_t>(q - (BigInt(1) << m));
  }
  return {fmt, sign | (field << m) | mant};
}

ScalarCode encode_integer(const ExactValue& value, const FormatDescriptor& fmt) {
  const int width = fmt.element_bits();
  const int scale = fmt.kind == FormatKind::kMxInt ? fmt.mantissa_bits : 0;
  const std::int64_t lo = -(std::int64_t{1} << (width - 1));
  const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
  if (value.is_zero()) return {fmt, 0u};

  BigInt mag = shift_round_half_even(value.significand(), -(value.exponent() + scale));
  if (value.negative()) mag = -mag;
  std::int64_t v = 0;
  if (mag < lo) {
    v = lo;
  } else if (mag > hi) {
    v = hi;
  } else {
    v = static_cast<std::int64_t>(mag);
  }
  return {fmt, twos_complement(v, width)};
}

constexpr std::array<std::string_view, 9> kPresetNames = {
    "bf16", "fp8_e4m3", "int8", "int4", "mxint8", "mxint4", "mxfp8_e4m3", "fp16", "int16"};

}  // namespace

std::string_view to_string(FormatKind kind) {
  switch (kind) {
    case FormatKind::kInt: return "INT";
    case FormatKind::kFp: return "FP";
    case FormatKind::kMxInt: return "MXINT";
    case FormatKind::kMxFp: return "MXFP";
  }
  return "?";
}

FormatKind format_kind_from_string(std::string_view s) {
  if (s == "INT") return FormatKind::kInt;
  if (s == "FP") return FormatKind::kFp;
  if (s == "MXINT") return FormatKind::kMxInt;
  if (s == "MXFP") return FormatKind::kMxFp;
  throw std::invalid_argument("unknown format kind: " + std::string(s));
}

int FormatDescriptor::max_exponent_field() const {
  const int all_ones = (1 << exponent_bits) - 1;
  return reserves_top_exponent() ? all_ones - 1 : all_ones;
}

int bias_for_exponent_bits(int exponent_bits) {
  return exponent_bits == 0 ? 0 : (1 << (exponent_bits - 1)) - 1;
}

FormatDescriptor make_format(FormatKind kind, int sign_bits, int exponent_bits, int mantissa_bits,
                             int block_size) {
  FormatDescriptor f;
  f.kind = kind;
  f.sign_bits = sign_bits;
  f.exponent_bits = exponent_bits;
  f.mantissa_bits = mantissa_bits;
  const bool mx = kind == FormatKind::kMxInt || kind == FormatKind::kMxFp;
  f.shared_exponent_bits = mx ? 8 : 0;
  f.block_size = mx ? block_size : 1;
  f.bias = bias_for_exponent_bits(exponent_bits);
  validate(f);
  return f;
}

void validate(const FormatDescriptor& f) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid format descriptor: " + what); };
  if (f.sign_bits != 0 && f.sign_bits != 1) fail("sign_bits must be 0 or 1");
  if (f.exponent_bits < 0 || f.mantissa_bits < 0) fail("negative field width");
  if (f.element_bits() < 2 || f.element_bits() > 16) fail("element width must be in [2, 16]");
  const bool mx = f.is_mx();
  if (mx != (f.shared_exponent_bits == 8 && f.block_size >= 2)) fail("MX kinds require 8 shared exponent bits and block_size >= 2");
  if (!mx && (f.shared_exponent_bits != 0 || f.block_size != 1)) fail("non-MX kinds have no shared exponent");
  if (f.is_integer() && f.exponent_bits != 0) fail("integer kinds have no exponent field");
  if (f.is_integer() && f.sign_bits != 1) fail("integer kinds are two's complement");
  if (f.is_float() && f.exponent_bits < 2) fail("float kinds need at least 2 exponent bits");
  if (f.bias != bias_for_exponent_bits(f.exponent_bits)) fail("bias must equal 2^(E-1)-1");
}

namespace presets {
FormatDescriptor bf16() { return make_format(FormatKind::kFp, 1, 8, 7); }
FormatDescriptor fp8_e4m3() { return make_format(FormatKind::kFp, 1, 4, 3); }
FormatDescriptor int8() { return make_format(FormatKind::kInt, 1, 0, 7); }
FormatDescriptor int4() { return make_format(FormatKind::kInt, 1, 0, 3); }
FormatDescriptor mxint8() { return make_format(FormatKind::kMxInt, 1, 0, 7); }
FormatDescriptor mxint4() { return make_format(FormatKind::kMxInt, 1, 0, 3); }
FormatDescriptor mxfp8_e4m3() { return make_format(FormatKind::kMxFp, 1, 4, 3); }
FormatDescriptor fp16() { return make_format(FormatKind::kFp, 1, 5, 10); }
FormatDescriptor int16() { return make_format(FormatKind::kInt, 1, 0, 15); }
}  // namespace presets

std::span<const std::string_view> preset_names() { return kPresetNames; }

FormatDescriptor format_by_name(std::string_view name) {
  if (name == "bf16") return presets::bf16();
  if (name == "fp8_e4m3") return presets::fp8_e4m3();
  if (name == "int8") return presets::int8();
  if (name == "int4") return presets::int4();
  if (name == "mxint8") return presets::mxint8();
  if (name == "mxint4") return presets::mxint4();
  if (name == "mxfp8_e4m3") return presets::mxfp8_e4m3();
  if (name == "fp16") return presets::fp16();
  if (name == "int16") return presets::int16();
  throw std::invalid_argument("unknown format: " + std::string(name));
}

std::optional<std::string_view> preset_name(const FormatDescriptor& fmt) {
  for (auto name : kPresetNames) {
    if (format_by_name(name) == fmt) return name;
  }
  return std::nullopt;
}

ScalarCode::ScalarCode(FormatDescriptor f, std::uint32_t b) : format(f), bits(b) {
  if ((b & ~f.code_mask()) != 0) throw std::invalid_argument("code has bits above the element width");
}

std::uint32_t ScalarCode::exponent_field() const {
  return (bits >> format.mantissa_bits) & ((1u << format.exponent_bits) - 1u);
}

bool is_well_formed(const ScalarCode& code) {
  if (!code.format.is_float()) return true;
  return static_cast<int>(code.exponent_field()) <= code.format.max_exponent_field();
}

bool is_canonical(const ScalarCode& code) {
  if (!is_well_formed(code)) return false;
  if (!code.format.is_float()) return true;
  return code.exponent_field() != 0 || code.mantissa_field() == 0;
}

void validate(const BlockCode& block) {
  if (block.elements.empty()) throw std::invalid_argument("empty block");
  const FormatDescriptor& fmt = block.format();
  if (!fmt.is_mx()) throw std::invalid_argument("block elements must use an MX format");
  if (static_cast<int>(block.elements.size()) != fmt.block_size) throw std::invalid_argument("block length mismatch");
  for (const auto& e : block.elements) {
    if (!(e.format == fmt)) throw std::invalid_argument("mixed formats within a block");
  }
}

ScalarCode encode(const ExactValue& value, const FormatDescriptor& fmt) {
  return fmt.is_float() ? encode_float(value, fmt) : encode_integer(value, fmt);
}

ScalarCode encode(double value, const FormatDescriptor& fmt) { return encode(ExactValue::from_double(value), fmt); }

ExactValue decode(const ScalarCode& code) {
  const FormatDescriptor& fmt = code.format;
  if (fmt.is_integer()) {
    const std::int64_t v = sign_extend(code.bits, fmt.element_bits());
    const int scale = fmt.kind == FormatKind::kMxInt ? fmt.mantissa_bits : 0;
    return ExactValue::from_int(v).ldexp(-scale);
  }
  if (!is_well_formed(code)) throw std::invalid_argument("reserved exponent field");
  const bool neg = code.sign_bit();
  const std::uint32_t field = code.exponent_field();
  if (field == 0) return ExactValue::zero(neg);
  const std::uint32_t sig = (1u << fmt.mantissa_bits) | code.mantissa_field();
  return ExactValue::from_parts(neg, BigInt(sig),
                                static_cast<std::int64_t>(field) - fmt.bias - fmt.mantissa_bits);
}

FormatRange format_range(const FormatDescriptor& fmt) {
  FormatRange r;
  if (fmt.is_integer()) {
    const int width = fmt.element_bits();
    const int scale = fmt.kind == FormatKind::kMxInt ? fmt.mantissa_bits : 0;
    r.min_positive_normal = ExactValue::pow2(-scale);
    r.max_finite = ExactValue::from_int((std::int64_t{1} << (width - 1)) - 1).ldexp(-scale);
    r.min_finite = ExactValue::from_int(-(std::int64_t{1} << (width - 1))).ldexp(-scale);
    return r;
  }
  const int m = fmt.mantissa_bits;
  r.min_positive_normal = ExactValue::pow2(fmt.min_normal_exponent());
  r.max_finite = ExactValue::from_parts(false, (BigInt(1) << (m + 1)) - 1, fmt.max_normal_exponent() - m);
  r.min_finite = -r.max_finite;
  return r;
}

int choose_shared_exponent(std::span<const ExactValue> values, const FormatDescriptor& fmt) {
  const ExactValue* biggest = nullptr;
  for (const auto& v : values) {
    if (v.is_zero()) continue;
    if (biggest == nullptr || v.abs() > biggest->abs()) biggest = &v;
  }
  if (biggest == nullptr) return kSharedExponentMin;
  const std::int64_t e = biggest->floor_log2() - format_range(fmt).max_finite.floor_log2();
  return static_cast<int>(std::clamp<std::int64_t>(e, kSharedExponentMin, kSharedExponentMax));
}

BlockCode quantize_block(std::span<const ExactValue> values, const FormatDescriptor& fmt) {
  if (!fmt.is_mx()) throw std::invalid_argument("quantize_block needs an MX format");
  if (static_cast<int>(values.size()) != fmt.block_size) throw std::invalid_argument("block length mismatch");
  BlockCode block;
  const int ex = choose_shared_exponent(values, fmt);
  block.shared_exponent = static_cast<std::int8_t>(ex);
  block.elements.reserve(values.size());
  // MXINT saturates symmetrically: the lone negative extreme (-2^M / 2^M)
  // would lift floor(log2 max|v|) and break re-quantization of the block.
  const std::uint32_t int_min = fmt.kind == FormatKind::kMxInt ? 1u << (fmt.element_bits() - 1) : 0u;
  for (const auto& v : values) {
    ScalarCode c = encode(v.ldexp(-ex), fmt);
    if (int_min != 0 && c.bits == int_min) c.bits = int_min + 1;
    block.elements.push_back(c);
  }
  return block;
}

std::vector<ExactValue> dequantize_block(const BlockCode& block) {
  validate(block);
  std::vector<ExactValue> out;
  out.reserve(block.elements.size());
  for (const auto& e : block.elements) out.push_back(decode(e).ldexp(block.shared_exponent));
  return out;
}

void to_json(nlohmann::json& j, const FormatDescriptor& fmt) {
  j = nlohmann::json{{"kind", std::string(to_string(fmt.kind))},
                     {"sign_bits", fmt.sign_bits},
                     {"exponent_bits", fmt.exponent_bits},
                     {"mantissa_bits", fmt.mantissa_bits},
                     {"shared_exponent_bits", fmt.shared_exponent_bits},
                     {"block_size", fmt.block_size},
                     {"bias", fmt.bias}};
}

void from_json(const nlohmann::json& j, FormatDescriptor& fmt) {
  static constexpr std::array<std::string_view, 7> kFields = {
      "kind", "sign_bits", "exponent_bits", "mantissa_bits", "shared_exponent_bits", "block_size", "bias"};
  if (!j.is_object() || j.size() != kFields.size()) throw std::invalid_argument("format descriptor must have exactly 7 fields");
  for (auto f : kFields) {
    if (!j.contains(std::string(f))) throw std::invalid_argument("format descriptor missing field " + std::string(f));
  }
  FormatDescriptor out;
  out.kind = format_kind_from_string(j.at("kind").get<std::string>());
  out.sign_bits = j.at("sign_bits").get<int>();
  out.exponent_bits = j.at("exponent_bits").get<int>();
  out.mantissa_bits = j.at("mantissa_bits").get<int>();
  out.shared_exponent_bits = j.at("shared_exponent_bits").get<int>();
  out.block_size = j.at("block_size").get<int>();
  out.bias = j.at("bias").get<int>();
  validate(out);
  fmt = out;
}

}  // namespace jackmac

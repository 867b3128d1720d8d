#pragma once

// Numeric formats: descriptors, scalar encode/decode, MX block quantization.
//
// Conventions shared by every format in this project:
//   * bias = 2^(E-1) - 1 (IEEE style); E = 0 for integer kinds.
//   * no Inf/NaN; subnormals flush to signed zero on encode and decode.
//   * formats with E >= 5 (bf16, fp16) reserve the all-ones exponent field so
//     that codes stay interchangeable with IEEE tooling; E <= 4 formats use
//     every exponent field for normal numbers.
//   * scalar encode rounds to nearest, ties to even, and saturates.
//   * MXINT elements are two's-complement integers scaled by 2^-M.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jackmac/exact.hpp"

namespace jackmac {

enum class FormatKind { kInt, kFp, kMxInt, kMxFp };

std::string_view to_string(FormatKind kind);
FormatKind format_kind_from_string(std::string_view s);

struct FormatDescriptor {
  FormatKind kind = FormatKind::kInt;
  int sign_bits = 1;
  int exponent_bits = 0;
  int mantissa_bits = 7;
  int shared_exponent_bits = 0;
  int block_size = 1;
  int bias = 0;

  int element_bits() const { return sign_bits + exponent_bits + mantissa_bits; }
  std::uint32_t code_mask() const { return (1u << element_bits()) - 1u; }
  bool is_mx() const { return kind == FormatKind::kMxInt || kind == FormatKind::kMxFp; }
  bool is_float() const { return kind == FormatKind::kFp || kind == FormatKind::kMxFp; }
  bool is_integer() const { return !is_float(); }
  bool reserves_top_exponent() const { return exponent_bits >= 5; }
  // Largest exponent field that encodes a finite normal number.
  int max_exponent_field() const;
  // Unbiased exponent range of normal numbers.
  int min_normal_exponent() const { return 1 - bias; }
  int max_normal_exponent() const { return max_exponent_field() - bias; }
  // Width of 1.m (FP) or of the two's-complement element (INT).
  int significand_bits() const { return is_float() ? mantissa_bits + 1 : sign_bits + mantissa_bits; }

  friend bool operator==(const FormatDescriptor&, const FormatDescriptor&) = default;
};

int bias_for_exponent_bits(int exponent_bits);

// Builds a descriptor with derived fields (bias, MX block parameters) filled in.
FormatDescriptor make_format(FormatKind kind, int sign_bits, int exponent_bits, int mantissa_bits,
                             int block_size = 32);

// Throws std::invalid_argument if any descriptor invariant is violated.
void validate(const FormatDescriptor& fmt);

namespace presets {
FormatDescriptor bf16();
FormatDescriptor fp8_e4m3();
FormatDescriptor int8();
FormatDescriptor int4();
FormatDescriptor mxint8();
FormatDescriptor mxint4();
FormatDescriptor mxfp8_e4m3();
FormatDescriptor fp16();
FormatDescriptor int16();
}  // namespace presets

// Canonical preset names: bf16, fp8_e4m3, int8, int4, mxint8, mxint4,
// mxfp8_e4m3, plus the unit's output formats fp16 and int16.
std::span<const std::string_view> preset_names();
FormatDescriptor format_by_name(std::string_view name);  // throws on unknown name
std::optional<std::string_view> preset_name(const FormatDescriptor& fmt);

struct ScalarCode {
  FormatDescriptor format;
  std::uint32_t bits = 0;

  ScalarCode() = default;
  ScalarCode(FormatDescriptor f, std::uint32_t b);

  bool sign_bit() const { return format.sign_bits != 0 && ((bits >> (format.element_bits() - 1)) & 1u); }
  std::uint32_t exponent_field() const;
  std::uint32_t mantissa_field() const { return bits & ((1u << format.mantissa_bits) - 1u); }

  friend bool operator==(const ScalarCode&, const ScalarCode&) = default;
};

// A code is well-formed unless it uses a reserved exponent field.
bool is_well_formed(const ScalarCode& code);
// Canonical codes are the ones encode() can produce: well-formed and not a
// subnormal pattern (zero exponent field with a non-zero mantissa).
bool is_canonical(const ScalarCode& code);

struct BlockCode {
  std::int8_t shared_exponent = 0;
  std::vector<ScalarCode> elements;

  const FormatDescriptor& format() const { return elements.front().format; }
};

// Throws std::invalid_argument if the block's elements disagree on format,
// the format is not MX, or the length differs from the block size.
void validate(const BlockCode& block);

// Element-level encode. For MX kinds this encodes the element value (the
// real value already divided by 2^e_x).
ScalarCode encode(const ExactValue& value, const FormatDescriptor& fmt);
ScalarCode encode(double value, const FormatDescriptor& fmt);

// Throws std::invalid_argument for codes that are not well-formed.
ExactValue decode(const ScalarCode& code);

struct FormatRange {
  ExactValue min_positive_normal;
  ExactValue max_finite;
  ExactValue min_finite;  // most negative value
};

FormatRange format_range(const FormatDescriptor& fmt);

inline constexpr int kSharedExponentMin = -128;
inline constexpr int kSharedExponentMax = 127;

// floor(log2(max|v|)) - floor(log2(max_finite(element))), clamped to int8;
// kSharedExponentMin for an all-zero block.
int choose_shared_exponent(std::span<const ExactValue> values, const FormatDescriptor& fmt);

BlockCode quantize_block(std::span<const ExactValue> values, const FormatDescriptor& fmt);
std::vector<ExactValue> dequantize_block(const BlockCode& block);

void to_json(nlohmann::json& j, const FormatDescriptor& fmt);
void from_json(const nlohmann::json& j, FormatDescriptor& fmt);

}  // namespace jackmac

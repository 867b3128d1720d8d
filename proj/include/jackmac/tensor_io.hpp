#pragma once

// Encoded tensors and the JKT1 file format.
//
//   "JKT1" | dtype u8 | ndim u8 | dims u32le * ndim | codes | [shared exps]
//
// Codes are packed little-endian to whole bytes; 4-bit codes two per byte,
// low nibble first. MX tensors append one int8 shared exponent per block;
// blocks run along the innermost dimension and a row's last block may be
// partial.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jackmac/exact.hpp"
#include "jackmac/formats.hpp"

namespace jackmac {

enum class DType : std::uint8_t {
  kFp32 = 0,
  kBf16 = 1,
  kFp8E4M3 = 2,
  kInt8 = 3,
  kInt4 = 4,
  kMxInt8 = 5,
  kMxInt4 = 6,
  kMxFp8E4M3 = 7,
  kFp16 = 8,
  kInt16 = 9,
};

std::string_view to_string(DType d);
DType dtype_from_name(std::string_view name);  // "fp32" or a format preset name
int dtype_bits(DType d);
// Throws for fp32, which is an input-only container.
FormatDescriptor dtype_format(DType d);
DType dtype_for_format(const FormatDescriptor& fmt);

struct Tensor {
  DType dtype = DType::kFp32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint32_t> codes;  // fp32: IEEE single bit patterns
  std::vector<std::int8_t> shared_exponents;

  std::size_t size() const;
  std::size_t inner() const { return dims.empty() ? 1 : dims.back(); }
  std::size_t outer() const { return inner() == 0 ? 0 : size() / inner(); }
  std::size_t blocks_per_row() const;
  bool is_mx() const;

  ScalarCode code(std::size_t i) const;
  int shared_exponent_of(std::size_t i) const;
  ExactValue value(std::size_t i) const;
};

// Throws std::invalid_argument if sizes and dims disagree.
void validate(const Tensor& t);

Tensor make_fp32(std::vector<std::uint32_t> dims, std::span<const float> values);
std::vector<ExactValue> to_exact(const Tensor& t);
// Quantizes exact values (row-major, innermost dimension last) to dtype.
Tensor quantize_values(std::span<const ExactValue> values, std::vector<std::uint32_t> dims, DType dtype);
Tensor quantize_tensor(const Tensor& t, DType dtype);

std::vector<std::uint8_t> serialize_jkt1(const Tensor& t);
Tensor deserialize_jkt1(std::span<const std::uint8_t> bytes);

// Writes to a temporary sibling and renames it into place.
void atomic_write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void atomic_write(const std::filesystem::path& path, std::string_view text);

void write_jkt1(const std::filesystem::path& path, const Tensor& t);
Tensor read_jkt1(const std::filesystem::path& path);
// One row per line, comma separated decimal literals; blank lines and lines
// starting with '#' are skipped. Produces a 2-D fp32 tensor (rows x cols).
Tensor read_csv(const std::filesystem::path& path);
// JKT1 when the file starts with the magic, CSV otherwise.
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace jackmac

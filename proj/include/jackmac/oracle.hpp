#pragma once

// Golden models in exact arithmetic. Built only on formats::decode and
// ExactValue; nothing here touches the datapath's integer accumulator.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jackmac/exact.hpp"
#include "jackmac/formats.hpp"

namespace jackmac::oracle {

struct ExactDot {
  std::vector<ExactValue> terms;
  ExactValue sum;
};

// Throws std::invalid_argument on length mismatch.
ExactValue exact_dot(std::span<const ExactValue> xs, std::span<const ExactValue> ws);
ExactDot exact_dot_terms(std::span<const ExactValue> xs, std::span<const ExactValue> ws);

struct Fp16Result {
  ScalarCode code;
  bool flushed = false;
  bool saturated = false;
};

// Round toward zero to IEEE binary16; flush below 2^-14 to signed zero,
// saturate above max finite to +-0x7BFF.
Fp16Result truncate_exact_to_fp16_ex(const ExactValue& v);
ScalarCode truncate_exact_to_fp16(const ExactValue& v);

// Clamp an integer-valued exact value to the int16 range.
ScalarCode saturate16(const ExactValue& v);

// The value a single unit invocation should produce, before the output
// conversion: sum of decoded x_i * w_i scaled by 2^(e_x + e_y) for MX, plus
// the decoded acc_in. Lanes are given as raw codes; shared exponents are
// ignored for non-MX formats.
ExactValue mac_exact(std::span<const ScalarCode> x, std::span<const ScalarCode> w, std::optional<int> e_x,
                     std::optional<int> e_y, const std::optional<ScalarCode>& acc_in);

// Expected 16-bit output: truncate_exact_to_fp16 for float/MX element
// formats, saturate16 for plain INT.
ScalarCode mac_expected(std::span<const ScalarCode> x, std::span<const ScalarCode> w, std::optional<int> e_x,
                        std::optional<int> e_y, const std::optional<ScalarCode>& acc_in);

// Row-major dense matrix of exact values.
struct ExactMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<ExactValue> data;

  const ExactValue& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  ExactValue& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

// C = A * B with A (M x K) and B (K x N), exact. Throws on shape mismatch.
ExactMatrix reference_gemm(const ExactMatrix& a, const ExactMatrix& b);

// Quantizes every row of a (M x K) matrix to fmt along K (MX formats use
// blocks of fmt.block_size, the last one zero padded), and returns the
// dequantized exact values.
ExactMatrix quantize_rows(const ExactMatrix& a, const FormatDescriptor& fmt);

}  // namespace jackmac::oracle

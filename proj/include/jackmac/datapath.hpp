#pragma once

// Functional model of the Jack unit.
//
//   operands -> unpack -> XOR bundle (signs)
//                      -> exponent calculators -> exponent extractor (e_max, shifts)
//                      -> reconstructed CSM: sub-multipliers -> barrel shifters -> adder tree
//            -> normalizer (leading-one detect) -> rounder (truncate to 16 bits)
//
// Alignment is exact: the accumulator is wide enough for the full exponent
// span of a mode, so the only precision loss is the final truncation. A term
// with significand S and exponent e has the value S * 2^(e - F), where F is
// the mode's fraction_bits() (2M for FP and MXINT, 0 for INT).

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jackmac/csm.hpp"
#include "jackmac/formats.hpp"
#include "jackmac/wide_int.hpp"

namespace jackmac::datapath {

enum class ModeName { kBf16, kFp8, kInt8, kInt4, kMxInt8, kMxInt4, kMxFp8 };
enum class OutputFormat { kFp16, kInt16 };

struct Mode {
  ModeName name = ModeName::kBf16;
  int lanes = 4;
  FormatDescriptor element_format;
  OutputFormat output_format = OutputFormat::kFp16;

  csm::Precision precision() const { return lanes == 4 ? csm::Precision::k8Bit : csm::Precision::k4Bit; }
  bool is_mx() const { return element_format.is_mx(); }
  bool is_float() const { return element_format.is_float(); }
  bool int_output() const { return output_format == OutputFormat::kInt16; }
  int fraction_bits() const;
};

Mode mode(ModeName name);
// Accepts bf16, fp8, int8, int4, mxint8, mxint4, mxfp8 (and the *_e4m3 format names).
Mode mode_by_name(std::string_view name);
std::string_view to_string(ModeName name);
std::span<const ModeName> all_modes();
FormatDescriptor output_descriptor(OutputFormat f);

// Lane operands for one unit invocation. MX operands carry the block's
// shared exponent and may hold fewer elements than the mode has lanes.
struct MacOperand {
  std::vector<ScalarCode> lanes;
  std::optional<int> shared_exponent;
};

MacOperand operand_from_block(const BlockCode& block, std::size_t offset, std::size_t count);

struct ProductTerm {
  int sign = 1;
  std::int64_t exponent = 0;
  std::uint32_t significand = 0;
  bool is_zero = true;
};

inline constexpr std::int64_t kEmaxSentinel = std::numeric_limits<std::int32_t>::min();

struct AlignmentSet {
  std::int64_t e_max = kEmaxSentinel;
  std::vector<int> shifts;       // one per lane
  std::optional<int> acc_shift;  // present when an accumulator term was supplied
  int cap = 0;                   // largest shift
  int accumulator_width = 0;
};

// Element-wise sign XOR mapped to +1/-1. Throws on length mismatch or more
// than 16 lanes.
std::vector<int> xor_bundle(std::span<const std::uint8_t> signs_x, std::span<const std::uint8_t> signs_w);

// Decodes lanes and runs the CSM; one term per lane, exponent excluding the
// shared (MX) part.
std::vector<ProductTerm> product_terms(const Mode& mode, const MacOperand& x, const MacOperand& w);
// The incoming 16-bit partial sum as an extra term in the mode's scale.
ProductTerm accumulator_term(const Mode& mode, const ScalarCode& acc_in);
// e_x + e_y for MX modes, 0 otherwise.
std::int64_t shared_bias_add(const Mode& mode, const MacOperand& x, const MacOperand& w);

AlignmentSet exponent_extract(std::span<const ProductTerm> terms, const Mode& mode, std::int64_t shared_bias_add,
                              const ProductTerm* acc_term = nullptr);

// sum_i sign_i * significand_i * 2^(cap - shift_i), exact.
WideInt align_and_accumulate(std::span<const ProductTerm> terms, const AlignmentSet& alignment,
                             const ProductTerm* acc_term = nullptr);

struct Normalized {
  bool is_zero = true;
  bool negative = false;
  int exponent = 0;                // unbiased FP16 exponent
  std::uint32_t fraction_msbs = 0;  // 16 bits below the leading one, left-justified
  bool sticky = false;             // any set bit below fraction_msbs
  bool saturated = false;
  bool flushed = false;
};

// value = acc * 2^(e_max - cap - fraction_bits). Out-of-range exponents
// saturate to max finite or flush to signed zero.
Normalized normalize(const WideInt& acc, std::int64_t e_max, int cap, int fraction_bits);
// FP16: truncate the fraction to 10 bits.
ScalarCode round_output(const Normalized& n);
// INT16: saturate to the two's-complement range.
ScalarCode round_output_int(const WideInt& acc, bool* saturated = nullptr);

enum class Submodule { kCsm, kXorBundle, kExponentExtractor, kNormalizer, kRounder };
std::string_view to_string(Submodule s);

struct Activation {
  std::set<Submodule> active;
  int exponent_calculators = 0;
  bool calculator_bias_includes_shared = false;
  bool direct_output_path = false;
};

Activation mode_activation(const Mode& mode);

struct JackResult {
  ScalarCode output;
  std::int64_t e_max = kEmaxSentinel;
  WideInt raw_accumulator;
  int cap = 0;
  int fraction_bits = 0;
  int accumulator_width = 0;
  Activation active_submodules;
  bool saturated = false;
  bool flushed = false;

  // Exponent of raw_accumulator's least significant bit.
  std::int64_t lsb_exponent() const;
};

// Grouped 2D sub-word datapath: sub-multipliers at the same position across
// the four CSMs share one barrel shifter.
JackResult jack_mac(const Mode& mode, const MacOperand& x, const MacOperand& w,
                    const std::optional<ScalarCode>& acc_in = std::nullopt);

// Ungrouped baseline: four independent CSMs, one shifter per sub-multiplier.
JackResult jack_mac_reference(const Mode& mode, const MacOperand& x, const MacOperand& w,
                              const std::optional<ScalarCode>& acc_in = std::nullopt);

// Static bounds for a mode (including the accumulator term).
int max_alignment_shift(const Mode& mode);
int accumulator_width(const Mode& mode);

csm::CsmStructure structure_report(csm::Grouping grouping, const Mode& mode);

// Exact sum of several units' raw accumulators, truncated once at the end.
class PartialSum {
 public:
  void add(const JackResult& r);
  ScalarCode finalize(OutputFormat format) const;
  bool empty() const { return value_.is_zero(); }

 private:
  WideInt value_;
  std::int64_t lsb_exponent_ = 0;
};

void to_json(nlohmann::json& j, const Activation& a);
nlohmann::json to_json(const JackResult& r, const Mode& mode);

}  // namespace jackmac::datapath

#pragma once

// Precision-scalable carry-save multiplier, modelled at sub-product value
// granularity (no explicit carry/sum vectors).
//
// One CSM holds four 4x4 sub-multipliers. In 8-bit mode they compute the four
// nibble cross products of one 8x8 multiplication, which are fused with
// offsets 0/4/4/8. In 4-bit mode each sub-multiplier is an independent lane.
// CSM inputs are 16 bits wide: four nibble lanes in 4-bit mode, the low byte
// in 8-bit mode.

#include <array>
#include <cstdint>
#include <string_view>

#include <json.hpp>

namespace jackmac::csm {

struct SubMulConfig {
  bool a_signed = false;
  bool b_signed = false;

  friend bool operator==(const SubMulConfig&, const SubMulConfig&) = default;
};

inline constexpr std::array<SubMulConfig, 4> kAllSubMulConfigs = {
    SubMulConfig{false, false}, SubMulConfig{false, true}, SubMulConfig{true, false}, SubMulConfig{true, true}};

// Exact product of two 4-bit patterns, each read as unsigned or two's
// complement according to cfg. Throws std::invalid_argument for patterns
// wider than 4 bits.
int submul4(std::uint8_t a, std::uint8_t b, SubMulConfig cfg);

// Sub-products of an 8x8 multiplication. a = a_hi*16 + a_lo with a_lo
// unsigned; only high nibbles carry the operand's sign.
struct SubProducts {
  int ll = 0;  // a_lo * b_lo
  int lh = 0;  // a_lo * b_hi
  int hl = 0;  // a_hi * b_lo
  int hh = 0;  // a_hi * b_hi
};

SubProducts split_8x8(std::uint8_t a, std::uint8_t b, SubMulConfig cfg);

// phh*2^8 + (phl + plh)*2^4 + pll. Throws std::invalid_argument if a
// sub-product lies outside the range its sub-multiplier can produce under cfg.
int fuse8x8(int pll, int plh, int phl, int phh, SubMulConfig cfg);

enum class Precision { k8Bit, k4Bit };

// Offset applied to sub-multiplier position q (ll, lh, hl, hh) when fusing.
constexpr int fusion_shift(Precision p, int position) {
  if (p == Precision::k4Bit) return 0;
  constexpr std::array<int, 4> kShift = {0, 4, 4, 8};
  return kShift[static_cast<std::size_t>(position)];
}

struct SubMultiplierOutput {
  int product = 0;       // signed value of the 4x4 product
  int fusion_shift = 0;  // static offset of this position
  int lane = 0;          // lane within the CSM this output belongs to
};

// Raw outputs of the four sub-multipliers of one CSM. In 4-bit mode lane i
// uses nibble i of x and w with cfgs[i]; in 8-bit mode cfgs[0] applies.
std::array<SubMultiplierOutput, 4> sub_multiplier_outputs(std::uint16_t x, std::uint16_t w, Precision p,
                                                          const std::array<SubMulConfig, 4>& cfgs);

struct CsmProducts {
  std::array<int, 4> products{};
  int count = 0;  // 1 in 8-bit mode, 4 in 4-bit mode
};

CsmProducts csm_multiply(std::uint16_t x, std::uint16_t w, Precision p, const std::array<SubMulConfig, 4>& cfgs);
CsmProducts csm_multiply(std::uint16_t x, std::uint16_t w, Precision p, SubMulConfig cfg);

enum class Grouping { kUngrouped, kGrouped2D };

std::string_view to_string(Grouping g);
Grouping grouping_from_string(std::string_view s);

inline constexpr int kCsmsPerUnit = 4;
inline constexpr int kSubMultipliersPerCsm = 4;

struct CsmStructure {
  int sub_multiplier_count = 0;
  int shifter_count = 0;
  Grouping grouping = Grouping::kGrouped2D;
  int lanes = 0;
  int csm_count = kCsmsPerUnit;
  // Width of one barrel shifter's output for a given mode; 0 when no mode
  // was supplied.
  int shifter_width_bits = 0;
};

// lanes must be 4 or 16.
CsmStructure structure_report(Grouping grouping, int lanes);

void to_json(nlohmann::json& j, const CsmStructure& s);

}  // namespace jackmac::csm

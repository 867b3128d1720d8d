#include "jackmac/csm.hpp"

#include <stdexcept>
#include <string>

namespace jackmac::csm {

namespace {

int nibble_value(std::uint8_t v, bool is_signed) {
  return is_signed && (v & 0x8) ? static_cast<int>(v) - 16 : static_cast<int>(v);
}

std::uint8_t nibble(std::uint16_t v, int i) { return static_cast<std::uint8_t>((v >> (4 * i)) & 0xF); }

struct Range {
  int lo;
  int hi;
};

Range nibble_range(bool is_signed) { return is_signed ? Range{-8, 7} : Range{0, 15}; }

Range product_range(Range a, Range b) {
  const int c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  Range r{c[0], c[0]};
  for (int v : c) {
    r.lo = std::min(r.lo, v);
    r.hi = std::max(r.hi, v);
  }
  return r;
}

void check_range(int v, Range r, const char* which) {
  if (v < r.lo || v > r.hi) throw std::invalid_argument(std::string("sub-product out of range: ") + which);
}

}  // namespace

int submul4(std::uint8_t a, std::uint8_t b, SubMulConfig cfg) {
  if (a > 0xF || b > 0xF) throw std::invalid_argument("submul4 operands are 4-bit patterns");
  return nibble_value(a, cfg.a_signed) * nibble_value(b, cfg.b_signed);
}

SubProducts split_8x8(std::uint8_t a, std::uint8_t b, SubMulConfig cfg) {
  const std::uint8_t alo = a & 0xF;
  const std::uint8_t ahi = a >> 4;
  const std::uint8_t blo = b & 0xF;
  const std::uint8_t bhi = b >> 4;
  return {
      submul4(alo, blo, {false, false}),
      submul4(alo, bhi, {false, cfg.b_signed}),
      submul4(ahi, blo, {cfg.a_signed, false}),
      submul4(ahi, bhi, cfg),
  };
}

int fuse8x8(int pll, int plh, int phl, int phh, SubMulConfig cfg) {
  const Range ulo = nibble_range(false);
  check_range(pll, product_range(ulo, ulo), "ll");
  check_range(plh, product_range(ulo, nibble_range(cfg.b_signed)), "lh");
  check_range(phl, product_range(nibble_range(cfg.a_signed), ulo), "hl");
  check_range(phh, product_range(nibble_range(cfg.a_signed), nibble_range(cfg.b_signed)), "hh");
  return phh * 256 + (phl + plh) * 16 + pll;
}

std::array<SubMultiplierOutput, 4> sub_multiplier_outputs(std::uint16_t x, std::uint16_t w, Precision p,
                                                          const std::array<SubMulConfig, 4>& cfgs) {
  std::array<SubMultiplierOutput, 4> out{};
  if (p == Precision::k8Bit) {
    if (x > 0xFF || w > 0xFF) throw std::invalid_argument("8-bit mode operands are 8-bit patterns");
    const SubProducts sp = split_8x8(static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(w), cfgs[0]);
    const std::array<int, 4> values = {sp.ll, sp.lh, sp.hl, sp.hh};
    for (int q = 0; q < 4; ++q) out[q] = {values[q], fusion_shift(p, q), 0};
    return out;
  }
  for (int q = 0; q < 4; ++q) out[q] = {submul4(nibble(x, q), nibble(w, q), cfgs[q]), 0, q};
  return out;
}

CsmProducts csm_multiply(std::uint16_t x, std::uint16_t w, Precision p, const std::array<SubMulConfig, 4>& cfgs) {
  const auto outs = sub_multiplier_outputs(x, w, p, cfgs);
  CsmProducts r;
  if (p == Precision::k8Bit) {
    r.products[0] = fuse8x8(outs[0].product, outs[1].product, outs[2].product, outs[3].product, cfgs[0]);
    r.count = 1;
    return r;
  }
  for (int q = 0; q < 4; ++q) r.products[q] = outs[q].product;
  r.count = 4;
  return r;
}

CsmProducts csm_multiply(std::uint16_t x, std::uint16_t w, Precision p, SubMulConfig cfg) {
  return csm_multiply(x, w, p, {cfg, cfg, cfg, cfg});
}

std::string_view to_string(Grouping g) { return g == Grouping::kUngrouped ? "ungrouped" : "grouped"; }

Grouping grouping_from_string(std::string_view s) {
  if (s == "ungrouped" || s == "UNGROUPED") return Grouping::kUngrouped;
  if (s == "grouped" || s == "GROUPED_2D" || s == "grouped_2d") return Grouping::kGrouped2D;
  throw std::invalid_argument("unknown grouping: " + std::string(s));
}

CsmStructure structure_report(Grouping grouping, int lanes) {
  if (lanes != 4 && lanes != 16) throw std::invalid_argument("lanes must be 4 or 16");
  CsmStructure s;
  s.grouping = grouping;
  s.lanes = lanes;
  s.sub_multiplier_count = kCsmsPerUnit * kSubMultipliersPerCsm;
  // Ungrouped: every sub-multiplier output has its own barrel shifter.
  // Grouped: sub-multipliers at the same position across the four CSMs share
  // one shifter, so there is one shifter per position.
  s.shifter_count = grouping == Grouping::kUngrouped ? s.sub_multiplier_count : kSubMultipliersPerCsm;
  return s;
}

void to_json(nlohmann::json& j, const CsmStructure& s) {
  j = nlohmann::json{{"sub_multiplier_count", s.sub_multiplier_count},
                     {"shifter_count", s.shifter_count},
                     {"grouping", std::string(to_string(s.grouping))},
                     {"lanes", s.lanes},
                     {"csm_count", s.csm_count},
                     {"shifter_width_bits", s.shifter_width_bits}};
}

}  // namespace jackmac::csm

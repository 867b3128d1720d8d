#include "jackmac/datapath.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace jackmac::datapath {

namespace {

constexpr std::array<ModeName, 7> kAllModes = {ModeName::kBf16,   ModeName::kFp8,    ModeName::kInt8, ModeName::kInt4,
                                              ModeName::kMxInt8, ModeName::kMxInt4, ModeName::kMxFp8};

constexpr int kFp16Bias = 15;
constexpr int kFp16MinExp = -14;
constexpr int kFp16MaxExp = 15;
constexpr int kFp16Fraction = 10;

// One lane after the input formatter: the pattern fed to the CSM plus the
// fields the exponent calculators and XOR bundle consume.
struct UnpackedLane {
  std::uint8_t sign = 0;
  std::uint16_t significand = 0;  // hidden one inserted (FP) or raw two's complement (INT)
  int exponent = 0;               // unbiased; FP only
  bool is_zero = true;
};

UnpackedLane unpack(const ScalarCode& code, const FormatDescriptor& fmt) {
  UnpackedLane u;
  const int m = fmt.mantissa_bits;
  if (fmt.is_integer()) {
    u.significand = static_cast<std::uint16_t>(code.bits);
    u.is_zero = code.bits == 0;
    return u;
  }
  const std::uint32_t field = (code.bits >> m) & ((1u << fmt.exponent_bits) - 1u);
  u.sign = static_cast<std::uint8_t>((code.bits >> (fmt.element_bits() - 1)) & 1u);
  if (static_cast<int>(field) > fmt.max_exponent_field()) throw std::invalid_argument("reserved exponent field");
  if (field == 0) return u;  // zero or flushed subnormal
  u.is_zero = false;
  u.significand = static_cast<std::uint16_t>((1u << m) | (code.bits & ((1u << m) - 1u)));
  u.exponent = static_cast<int>(field) - fmt.bias;
  return u;
}

struct Lanes {
  std::vector<UnpackedLane> x;
  std::vector<UnpackedLane> w;
};

void check_operand(const Mode& mode, const MacOperand& op) {
  const auto n = static_cast<int>(op.lanes.size());
  if (mode.is_mx()) {
    if (n < 1 || n > mode.lanes) throw std::invalid_argument("lane mismatch");
    if (!op.shared_exponent) throw std::invalid_argument("MX operand needs a shared exponent");
    if (*op.shared_exponent < kSharedExponentMin || *op.shared_exponent > kSharedExponentMax)
      throw std::invalid_argument("shared exponent out of int8 range");
  } else {
    if (n != mode.lanes) throw std::invalid_argument("lane mismatch");
    if (op.shared_exponent) throw std::invalid_argument("shared exponent given for a non-MX mode");
  }
  for (const auto& c : op.lanes) {
    if (!(c.format == mode.element_format)) throw std::invalid_argument("mixed formats across lanes");
  }
}

Lanes unpack_lanes(const Mode& mode, const MacOperand& x, const MacOperand& w) {
  check_operand(mode, x);
  check_operand(mode, w);
  if (x.lanes.size() != w.lanes.size()) throw std::invalid_argument("lane mismatch");
  Lanes l;
  l.x.resize(static_cast<std::size_t>(mode.lanes));
  l.w.resize(static_cast<std::size_t>(mode.lanes));
  for (std::size_t i = 0; i < x.lanes.size(); ++i) {
    l.x[i] = unpack(x.lanes[i], mode.element_format);
    l.w[i] = unpack(w.lanes[i], mode.element_format);
  }
  return l;
}

csm::SubMulConfig lane_config(const Mode& mode) {
  const bool s = mode.element_format.is_integer();
  return {s, s};
}

// Packs the operands each CSM sees: the lane's byte in 8-bit mode, four lane
// nibbles in 4-bit mode.
std::uint16_t csm_input(const std::vector<UnpackedLane>& lanes, int csm_index, csm::Precision p) {
  if (p == csm::Precision::k8Bit) return lanes[static_cast<std::size_t>(csm_index)].significand & 0xFF;
  std::uint16_t v = 0;
  for (int q = 0; q < 4; ++q) v |= static_cast<std::uint16_t>((lanes[4 * csm_index + q].significand & 0xF) << (4 * q));
  return v;
}

int lane_of(csm::Precision p, int csm_index, int position) {
  return p == csm::Precision::k8Bit ? csm_index : 4 * csm_index + position;
}

// Front end shared by both datapath structures: sign XOR, exponent
// calculators, and the per-lane CSM products collapsed into terms.
struct FrontEnd {
  Lanes lanes;
  std::vector<int> signs;  // +1/-1 per lane (always +1 for integer lanes)
  std::vector<std::array<csm::SubMultiplierOutput, 4>> sub_outputs;  // per CSM
  std::vector<ProductTerm> terms;
  std::optional<ProductTerm> acc;
  AlignmentSet alignment;
};

std::vector<ProductTerm> terms_from(const Mode& mode, const Lanes& lanes, const std::vector<int>& signs,
                                    const std::vector<std::array<csm::SubMultiplierOutput, 4>>& subs) {
  const csm::Precision p = mode.precision();
  std::vector<ProductTerm> terms(static_cast<std::size_t>(mode.lanes));
  std::vector<int> lane_value(static_cast<std::size_t>(mode.lanes), 0);
  for (int c = 0; c < csm::kCsmsPerUnit; ++c) {
    for (int q = 0; q < 4; ++q) {
      const auto& o = subs[static_cast<std::size_t>(c)][static_cast<std::size_t>(q)];
      lane_value[static_cast<std::size_t>(lane_of(p, c, q))] += o.product * (1 << o.fusion_shift);
    }
  }
  for (int i = 0; i < mode.lanes; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const int v = lane_value[ui] * signs[ui];
    ProductTerm& t = terms[ui];
    t.sign = v < 0 ? -1 : 1;
    t.significand = static_cast<std::uint32_t>(v < 0 ? -v : v);
    t.is_zero = v == 0;
    if (mode.is_float() && !t.is_zero) t.exponent = lanes.x[ui].exponent + lanes.w[ui].exponent;
  }
  return terms;
}

FrontEnd front_end(const Mode& mode, const MacOperand& x, const MacOperand& w, const std::optional<ScalarCode>& acc_in) {
  FrontEnd fe;
  fe.lanes = unpack_lanes(mode, x, w);
  const auto n = static_cast<std::size_t>(mode.lanes);
  if (mode.is_float()) {
    std::vector<std::uint8_t> sx(n), sw(n);
    for (std::size_t i = 0; i < n; ++i) {
      sx[i] = fe.lanes.x[i].sign;
      sw[i] = fe.lanes.w[i].sign;
    }
    fe.signs = xor_bundle(sx, sw);
  } else {
    fe.signs.assign(n, 1);
  }
  const csm::SubMulConfig cfg = lane_config(mode);
  const csm::Precision p = mode.precision();
  for (int c = 0; c < csm::kCsmsPerUnit; ++c) {
    fe.sub_outputs.push_back(csm::sub_multiplier_outputs(csm_input(fe.lanes.x, c, p), csm_input(fe.lanes.w, c, p), p,
                                                         {cfg, cfg, cfg, cfg}));
  }
  fe.terms = terms_from(mode, fe.lanes, fe.signs, fe.sub_outputs);
  if (acc_in) fe.acc = accumulator_term(mode, *acc_in);
  const ProductTerm* acc = fe.acc ? &*fe.acc : nullptr;
  if (mode.int_output()) {
    // Direct output path: no exponent handling at all.
    fe.alignment.e_max = 0;
    fe.alignment.shifts.assign(n, 0);
    if (acc) fe.alignment.acc_shift = 0;
    fe.alignment.accumulator_width = accumulator_width(mode);
  } else {
    fe.alignment = exponent_extract(fe.terms, mode, shared_bias_add(mode, x, w), acc);
  }
  return fe;
}

int lane_alignment(const FrontEnd& fe, int lane) {
  return fe.alignment.cap - fe.alignment.shifts[static_cast<std::size_t>(lane)];
}

void add_acc_term(WideInt& total, const FrontEnd& fe) {
  if (!fe.acc || fe.acc->is_zero) return;
  total.add_shifted(fe.acc->significand, fe.acc->sign < 0, fe.alignment.cap - *fe.alignment.acc_shift);
}

JackResult finish(const Mode& mode, const FrontEnd& fe, const WideInt& total) {
  JackResult r;
  r.raw_accumulator = total;
  r.e_max = fe.alignment.e_max;
  r.cap = fe.alignment.cap;
  r.fraction_bits = mode.fraction_bits();
  r.accumulator_width = fe.alignment.accumulator_width;
  r.active_submodules = mode_activation(mode);
  if (mode.int_output()) {
    r.output = round_output_int(total, &r.saturated);
    return r;
  }
  const Normalized n = normalize(total, r.e_max, r.cap, r.fraction_bits);
  r.saturated = n.saturated;
  r.flushed = n.flushed;
  r.output = round_output(n);
  return r;
}

struct ExponentBounds {
  std::int64_t lo;
  std::int64_t hi;
};

ExponentBounds lane_exponent_bounds(const Mode& mode) {
  ExponentBounds b{0, 0};
  const FormatDescriptor& f = mode.element_format;
  if (f.is_float()) b = {2 * f.min_normal_exponent(), 2 * f.max_normal_exponent()};
  if (mode.is_mx()) {
    b.lo += 2 * kSharedExponentMin;
    b.hi += 2 * kSharedExponentMax;
  }
  return b;
}

ExponentBounds acc_exponent_bounds(const Mode& mode) {
  if (mode.int_output()) return {0, 0};
  const int f = mode.fraction_bits();
  const int adj = f >= kFp16Fraction ? 0 : f - kFp16Fraction;
  return {kFp16MinExp + adj, kFp16MaxExp + adj};
}

}  // namespace

int Mode::fraction_bits() const {
  if (element_format.kind == FormatKind::kInt) return 0;
  return 2 * element_format.mantissa_bits;
}

Mode mode(ModeName name) {
  switch (name) {
    case ModeName::kBf16: return {name, 4, presets::bf16(), OutputFormat::kFp16};
    case ModeName::kFp8: return {name, 16, presets::fp8_e4m3(), OutputFormat::kFp16};
    case ModeName::kInt8: return {name, 4, presets::int8(), OutputFormat::kInt16};
    case ModeName::kInt4: return {name, 16, presets::int4(), OutputFormat::kInt16};
    case ModeName::kMxInt8: return {name, 4, presets::mxint8(), OutputFormat::kFp16};
    case ModeName::kMxInt4: return {name, 16, presets::mxint4(), OutputFormat::kFp16};
    case ModeName::kMxFp8: return {name, 16, presets::mxfp8_e4m3(), OutputFormat::kFp16};
  }
  throw std::invalid_argument("unknown mode");
}

Mode mode_by_name(std::string_view name) {
  for (auto m : kAllModes) {
    if (to_string(m) == name) return mode(m);
  }
  if (name == "fp8_e4m3") return mode(ModeName::kFp8);
  if (name == "mxfp8_e4m3") return mode(ModeName::kMxFp8);
  throw std::invalid_argument("unknown mode: " + std::string(name));
}

std::string_view to_string(ModeName name) {
  switch (name) {
    case ModeName::kBf16: return "bf16";
    case ModeName::kFp8: return "fp8";
    case ModeName::kInt8: return "int8";
    case ModeName::kInt4: return "int4";
    case ModeName::kMxInt8: return "mxint8";
    case ModeName::kMxInt4: return "mxint4";
    case ModeName::kMxFp8: return "mxfp8";
  }
  return "?";
}

std::span<const ModeName> all_modes() { return kAllModes; }

FormatDescriptor output_descriptor(OutputFormat f) {
  return f == OutputFormat::kFp16 ? presets::fp16() : presets::int16();
}

MacOperand operand_from_block(const BlockCode& block, std::size_t offset, std::size_t count) {
  validate(block);
  if (offset + count > block.elements.size()) throw std::out_of_range("block slice out of range");
  MacOperand op;
  op.lanes.assign(block.elements.begin() + static_cast<std::ptrdiff_t>(offset),
                  block.elements.begin() + static_cast<std::ptrdiff_t>(offset + count));
  op.shared_exponent = block.shared_exponent;
  return op;
}

std::vector<int> xor_bundle(std::span<const std::uint8_t> signs_x, std::span<const std::uint8_t> signs_w) {
  if (signs_x.size() != signs_w.size()) throw std::invalid_argument("sign vectors differ in length");
  if (signs_x.size() > 16) throw std::invalid_argument("at most 16 lanes");
  std::vector<int> out(signs_x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ((signs_x[i] ^ signs_w[i]) & 1u) ? -1 : 1;
  return out;
}

std::vector<ProductTerm> product_terms(const Mode& mode, const MacOperand& x, const MacOperand& w) {
  return front_end(mode, x, w, std::nullopt).terms;
}

ProductTerm accumulator_term(const Mode& mode, const ScalarCode& acc_in) {
  if (!(acc_in.format == output_descriptor(mode.output_format)))
    throw std::invalid_argument("accumulator input must use the mode's output format");
  ProductTerm t;
  if (mode.int_output()) {
    const std::int64_t v = static_cast<std::int16_t>(static_cast<std::uint16_t>(acc_in.bits));
    t.sign = v < 0 ? -1 : 1;
    t.significand = static_cast<std::uint32_t>(v < 0 ? -v : v);
    t.is_zero = v == 0;
    return t;
  }
  const std::uint32_t field = (acc_in.bits >> kFp16Fraction) & 0x1Fu;
  if (field == 0x1F) throw std::invalid_argument("reserved exponent field");
  t.sign = (acc_in.bits >> 15) & 1u ? -1 : 1;
  if (field == 0) return t;
  std::uint32_t sig = (1u << kFp16Fraction) | (acc_in.bits & 0x3FFu);
  std::int64_t e = static_cast<std::int64_t>(field) - kFp16Bias;
  const int f = mode.fraction_bits();
  if (f >= kFp16Fraction) {
    sig <<= (f - kFp16Fraction);
  } else {
    e += f - kFp16Fraction;
  }
  t.significand = sig;
  t.exponent = e;
  t.is_zero = false;
  return t;
}

std::int64_t shared_bias_add(const Mode& mode, const MacOperand& x, const MacOperand& w) {
  if (!mode.is_mx()) return 0;
  return static_cast<std::int64_t>(x.shared_exponent.value_or(0)) + w.shared_exponent.value_or(0);
}

AlignmentSet exponent_extract(std::span<const ProductTerm> terms, const Mode& mode, std::int64_t shared_add,
                              const ProductTerm* acc_term) {
  if (terms.empty()) throw std::invalid_argument("exponent_extract needs at least one term");
  AlignmentSet a;
  a.accumulator_width = accumulator_width(mode);
  a.shifts.assign(terms.size(), 0);
  std::int64_t e_max = kEmaxSentinel;
  for (const auto& t : terms) {
    if (!t.is_zero) e_max = std::max(e_max, t.exponent + shared_add);
  }
  const bool acc_live = acc_term != nullptr && !acc_term->is_zero;
  if (acc_live) e_max = std::max(e_max, acc_term->exponent);
  a.e_max = e_max;
  if (acc_term != nullptr) a.acc_shift = 0;
  if (e_max == kEmaxSentinel) return a;

  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!terms[i].is_zero) a.shifts[i] = static_cast<int>(e_max - (terms[i].exponent + shared_add));
  }
  if (acc_live) a.acc_shift = static_cast<int>(e_max - acc_term->exponent);
  a.cap = *std::max_element(a.shifts.begin(), a.shifts.end());
  if (a.acc_shift) a.cap = std::max(a.cap, *a.acc_shift);
  if (a.cap > max_alignment_shift(mode)) throw std::logic_error("alignment shift exceeds the mode's shifter width");
  return a;
}

WideInt align_and_accumulate(std::span<const ProductTerm> terms, const AlignmentSet& alignment,
                             const ProductTerm* acc_term) {
  if (terms.size() != alignment.shifts.size()) throw std::invalid_argument("alignment does not match terms");
  WideInt acc;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const ProductTerm& t = terms[i];
    if (t.is_zero) continue;
    acc.add_shifted(t.significand, t.sign < 0, alignment.cap - alignment.shifts[i]);
  }
  if (acc_term != nullptr && !acc_term->is_zero) {
    if (!alignment.acc_shift) throw std::invalid_argument("alignment has no accumulator shift");
    acc.add_shifted(acc_term->significand, acc_term->sign < 0, alignment.cap - *alignment.acc_shift);
  }
  return acc;
}

Normalized normalize(const WideInt& acc, std::int64_t e_max, int cap, int fraction_bits) {
  Normalized n;
  if (acc.is_zero()) return n;
  n.negative = acc.is_negative();
  const WideInt mag = acc.magnitude();
  const int lead = mag.bit_length() - 1;  // leading-one detector
  const std::int64_t exponent = lead + e_max - cap - fraction_bits;
  if (exponent < kFp16MinExp) {
    n.flushed = true;
    return n;  // signed zero
  }
  n.is_zero = false;
  if (exponent > kFp16MaxExp) {
    n.saturated = true;
    n.exponent = kFp16MaxExp;
    n.fraction_msbs = 0xFFFF;
    return n;
  }
  n.exponent = static_cast<int>(exponent);
  n.fraction_msbs = static_cast<std::uint32_t>(mag.extract(lead - 16, 16));
  n.sticky = mag.any_below(lead - 16);
  return n;
}

ScalarCode round_output(const Normalized& n) {
  const std::uint32_t sign = n.negative ? 0x8000u : 0u;
  if (n.is_zero) return {presets::fp16(), sign};
  const auto field = static_cast<std::uint32_t>(n.exponent + kFp16Bias);
  const std::uint32_t mant = n.fraction_msbs >> (16 - kFp16Fraction);
  return {presets::fp16(), sign | (field << kFp16Fraction) | mant};
}

ScalarCode round_output_int(const WideInt& acc, bool* saturated) {
  const auto v64 = acc.to_int64();
  std::int64_t v = 0;
  if (!v64) {
    v = acc.is_negative() ? -32768 : 32767;
  } else {
    v = std::clamp<std::int64_t>(*v64, -32768, 32767);
  }
  if (saturated != nullptr) *saturated = !v64 || v != *v64;
  return {presets::int16(), static_cast<std::uint32_t>(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)))};
}

std::string_view to_string(Submodule s) {
  switch (s) {
    case Submodule::kCsm: return "CSM";
    case Submodule::kXorBundle: return "XOR";
    case Submodule::kExponentExtractor: return "ExpExtract";
    case Submodule::kNormalizer: return "Normalizer";
    case Submodule::kRounder: return "Rounder";
  }
  return "?";
}

Activation mode_activation(const Mode& mode) {
  Activation a;
  a.active.insert(Submodule::kCsm);
  switch (mode.element_format.kind) {
    case FormatKind::kInt:
      a.direct_output_path = true;
      break;
    case FormatKind::kMxInt:
      a.active.insert({Submodule::kExponentExtractor, Submodule::kNormalizer, Submodule::kRounder});
      a.exponent_calculators = 1;
      break;
    case FormatKind::kFp:
    case FormatKind::kMxFp:
      a.active.insert({Submodule::kXorBundle, Submodule::kExponentExtractor, Submodule::kNormalizer, Submodule::kRounder});
      a.exponent_calculators = 16;
      a.calculator_bias_includes_shared = mode.element_format.kind == FormatKind::kMxFp;
      break;
  }
  return a;
}

std::int64_t JackResult::lsb_exponent() const {
  if (e_max == kEmaxSentinel) return 0;
  return e_max - cap - fraction_bits;
}

JackResult jack_mac(const Mode& mode, const MacOperand& x, const MacOperand& w, const std::optional<ScalarCode>& acc_in) {
  const FrontEnd fe = front_end(mode, x, w, acc_in);
  const csm::Precision p = mode.precision();
  WideInt total;
  // Group q collects sub-multiplier q of every CSM. Members enter the group
  // adder at their lane's alignment; the group's shared shifter then applies
  // the position's fusion offset once.
  for (int q = 0; q < csm::kSubMultipliersPerCsm; ++q) {
    WideInt group;
    for (int c = 0; c < csm::kCsmsPerUnit; ++c) {
      const int lane = lane_of(p, c, q);
      const int v = fe.sub_outputs[static_cast<std::size_t>(c)][static_cast<std::size_t>(q)].product *
                    fe.signs[static_cast<std::size_t>(lane)];
      group.add_shifted(static_cast<std::uint64_t>(v < 0 ? -v : v), v < 0, lane_alignment(fe, lane));
    }
    total += group.shifted_left(csm::fusion_shift(p, q));
  }
  add_acc_term(total, fe);
  return finish(mode, fe, total);
}

JackResult jack_mac_reference(const Mode& mode, const MacOperand& x, const MacOperand& w,
                              const std::optional<ScalarCode>& acc_in) {
  const FrontEnd fe = front_end(mode, x, w, acc_in);
  const csm::Precision p = mode.precision();
  WideInt total;
  for (int c = 0; c < csm::kCsmsPerUnit; ++c) {
    WideInt csm_sum;  // intra-CSM adder tree
    for (int q = 0; q < csm::kSubMultipliersPerCsm; ++q) {
      const auto& o = fe.sub_outputs[static_cast<std::size_t>(c)][static_cast<std::size_t>(q)];
      const int lane = lane_of(p, c, q);
      const int v = o.product * fe.signs[static_cast<std::size_t>(lane)];
      // Dedicated shifter: fusion offset and alignment in one shift.
      csm_sum.add_shifted(static_cast<std::uint64_t>(v < 0 ? -v : v), v < 0, o.fusion_shift + lane_alignment(fe, lane));
    }
    total += csm_sum;
  }
  add_acc_term(total, fe);
  return finish(mode, fe, total);
}

int max_alignment_shift(const Mode& mode) {
  if (mode.int_output()) return 0;
  const ExponentBounds l = lane_exponent_bounds(mode);
  const ExponentBounds a = acc_exponent_bounds(mode);
  return static_cast<int>(std::max(l.hi, a.hi) - std::min(l.lo, a.lo));
}

int accumulator_width(const Mode& mode) {
  // product width + full alignment span + adder-tree growth (lanes plus the
  // accumulator term) + sign.
  const int terms = mode.lanes + 1;
  return 16 + max_alignment_shift(mode) + std::bit_width(static_cast<unsigned>(terms - 1)) + 1;
}

csm::CsmStructure structure_report(csm::Grouping grouping, const Mode& mode) {
  csm::CsmStructure s = csm::structure_report(grouping, mode.lanes);
  // A sub-multiplier output is at most 8 bits (4x4 magnitude); it is shifted
  // by up to the fusion offset plus the alignment span.
  const int fusion = mode.precision() == csm::Precision::k8Bit ? 8 : 0;
  s.shifter_width_bits = 8 + fusion + max_alignment_shift(mode);
  return s;
}

void PartialSum::add(const JackResult& r) {
  if (r.raw_accumulator.is_zero()) return;
  const std::int64_t lsb = r.lsb_exponent();
  if (value_.is_zero()) {
    value_ = r.raw_accumulator;
    lsb_exponent_ = lsb;
    return;
  }
  if (lsb >= lsb_exponent_) {
    value_ += r.raw_accumulator.shifted_left(static_cast<int>(lsb - lsb_exponent_));
  } else {
    value_ = value_.shifted_left(static_cast<int>(lsb_exponent_ - lsb));
    value_ += r.raw_accumulator;
    lsb_exponent_ = lsb;
  }
}

ScalarCode PartialSum::finalize(OutputFormat format) const {
  if (format == OutputFormat::kInt16) return round_output_int(value_);
  return round_output(normalize(value_, lsb_exponent_, 0, 0));
}

void to_json(nlohmann::json& j, const Activation& a) {
  nlohmann::json names = nlohmann::json::array();
  for (auto s : a.active) names.push_back(std::string(to_string(s)));
  j = nlohmann::json{{"active", names},
                     {"exponent_calculators", a.exponent_calculators},
                     {"calculator_bias_includes_shared", a.calculator_bias_includes_shared},
                     {"direct_output_path", a.direct_output_path}};
}

nlohmann::json to_json(const JackResult& r, const Mode& mode) {
  char bits[8];
  std::snprintf(bits, sizeof bits, "0x%04x", r.output.bits);
  nlohmann::json j;
  j["mode"] = std::string(to_string(mode.name));
  j["output_format"] = mode.int_output() ? "INT16" : "FP16";
  j["output_bits"] = bits;
  const double value = decode(r.output).to_double();
  j["output_value"] = mode.int_output() ? nlohmann::json(static_cast<std::int64_t>(value)) : nlohmann::json(value);
  j["e_max"] = r.e_max == kEmaxSentinel ? nlohmann::json(nullptr) : nlohmann::json(r.e_max);
  j["alignment_cap"] = r.cap;
  j["fraction_bits"] = r.fraction_bits;
  j["raw_accumulator"] = r.raw_accumulator.to_hex();
  j["accumulator_width"] = r.accumulator_width;
  j["saturated"] = r.saturated;
  j["flushed"] = r.flushed;
  j["active_submodules"] = r.active_submodules;
  return j;
}

}  // namespace jackmac::datapath

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jackmac/datapath.hpp"
#include "jackmac/oracle.hpp"
#include "test_util.hpp"

using namespace jackmac;
using namespace jackmac::datapath;

namespace {

MacOperand ints(const FormatDescriptor& f, std::initializer_list<int> vs) {
  MacOperand op;
  for (int v : vs) op.lanes.push_back(encode(static_cast<double>(v), f));
  return op;
}

ScalarCode expected(const MacOperand& x, const MacOperand& w, const std::optional<ScalarCode>& acc) {
  return oracle::mac_expected(x.lanes, w.lanes, x.shared_exponent, w.shared_exponent, acc);
}

}  // namespace

TEST_CASE("int8 dot product") {
  const Mode m = mode(ModeName::kInt8);
  const auto r = jack_mac(m, ints(m.element_format, {1, 2, 3, 4}), ints(m.element_format, {1, 1, 1, 1}));
  CHECK(r.output.bits == 10);
  CHECK(r.active_submodules.active == std::set<Submodule>{Submodule::kCsm});
  CHECK(r.active_submodules.direct_output_path);
}

TEST_CASE("int8 saturates") {
  const Mode m = mode(ModeName::kInt8);
  const auto r = jack_mac(m, ints(m.element_format, {127, 127, 127, 127}), ints(m.element_format, {127, 127, 127, 127}));
  CHECK(r.output.bits == 0x7FFF);
  CHECK(r.saturated);
  const auto n = jack_mac(m, ints(m.element_format, {-128, -128, -128, -128}), ints(m.element_format, {127, 127, 127, 127}));
  CHECK(n.output.bits == 0x8000);
}

TEST_CASE("mxint8 quarter") {
  const Mode m = mode(ModeName::kMxInt8);
  MacOperand x, w;
  x.lanes = {encode(0.5, m.element_format), ScalarCode(m.element_format, 0), ScalarCode(m.element_format, 0),
             ScalarCode(m.element_format, 0)};
  w = x;
  x.shared_exponent = 0;
  w.shared_exponent = 0;
  const auto r = jack_mac(m, x, w);
  CHECK(r.output.bits == 0x3400);  // 0.25
  CHECK(r.active_submodules.exponent_calculators == 1);
}

TEST_CASE("all zero lanes give +0 and the sentinel") {
  for (auto name : all_modes()) {
    const Mode m = mode(name);
    MacOperand x;
    for (int i = 0; i < m.lanes; ++i) x.lanes.push_back(ScalarCode(m.element_format, 0));
    if (m.is_mx()) x.shared_exponent = 3;
    const auto r = jack_mac(m, x, x);
    CHECK(r.output.bits == 0);
    if (!m.int_output()) CHECK(r.e_max == kEmaxSentinel);
  }
}

TEST_CASE("exponent_extract examples") {
  const Mode m = mode(ModeName::kBf16);
  std::vector<ProductTerm> t(4);
  const int e[4] = {3, 1, 5, 5};
  for (int i = 0; i < 4; ++i) t[i] = {1, e[i], 128, false};
  const auto a = exponent_extract(t, m, 0);
  CHECK(a.e_max == 5);
  CHECK(a.shifts == std::vector<int>{2, 4, 0, 0});
  const auto b = exponent_extract(t, m, 6);
  CHECK(b.e_max == 11);
  CHECK(b.shifts == a.shifts);
}

TEST_CASE("align_and_accumulate cancellation and identity") {
  const Mode m = mode(ModeName::kFp8);
  std::vector<ProductTerm> t(16);
  t[0] = {1, 2, 100, false};
  auto a = exponent_extract(t, m, 0);
  CHECK(align_and_accumulate(t, a).to_int64() == 100);
  t[1] = {-1, 2, 100, false};
  a = exponent_extract(t, m, 0);
  CHECK(align_and_accumulate(t, a).is_zero());
}

TEST_CASE("normalize examples") {
  const auto one = normalize(WideInt::from_int64(1), 0, 0, 0);
  CHECK(round_output(one).bits == 0x3C00);
  const auto three = normalize(WideInt::from_int64(3).shifted_left(5), 0, 0, 0);
  CHECK(three.exponent == 6);
  CHECK(three.fraction_msbs == 0x8000);
  CHECK(round_output(normalize(WideInt::from_int64(1), 40, 0, 0)).bits == 0x7BFF);
  const auto tiny = normalize(WideInt::from_int64(-1), -40, 0, 0);
  CHECK(tiny.flushed);
  CHECK(round_output(tiny).bits == 0x8000);
  bool sat = false;
  CHECK(round_output_int(WideInt::from_int64(40000), &sat).bits == 0x7FFF);
  CHECK(sat);
}

TEST_CASE("xor bundle") {
  const std::vector<std::uint8_t> a{0, 1, 0, 1}, b{0, 0, 1, 1};
  CHECK(xor_bundle(a, b) == std::vector<int>{1, -1, -1, 1});
  const std::vector<std::uint8_t> c{0};
  CHECK_THROWS(xor_bundle(a, c));
}

TEST_CASE("oracle equivalence, grouped and reference, all modes") {
  testutil::Rng rng(7);
  for (auto name : all_modes()) {
    const Mode m = mode(name);
    CAPTURE(to_string(name));
    for (int t = 0; t < 3000; ++t) {
      const int lanes = m.is_mx() ? std::uniform_int_distribution<int>(1, m.lanes)(rng) : m.lanes;
      const auto x = testutil::random_operand(rng, m, lanes);
      const auto w = testutil::random_operand(rng, m, lanes);
      std::optional<ScalarCode> acc;
      if (t % 2) acc = testutil::random_acc(rng, m);
      const auto g = jack_mac(m, x, w, acc);
      const auto r = jack_mac_reference(m, x, w, acc);
      REQUIRE(g.output.bits == r.output.bits);
      REQUIRE(g.raw_accumulator == r.raw_accumulator);
      REQUIRE(g.output.bits == expected(x, w, acc).bits);
    }
  }
}

TEST_CASE("flat alignment route agrees with the structural routes") {
  testutil::Rng rng(11);
  for (auto name : all_modes()) {
    const Mode m = mode(name);
    if (m.int_output()) continue;
    for (int t = 0; t < 500; ++t) {
      const auto x = testutil::random_operand(rng, m);
      const auto w = testutil::random_operand(rng, m);
      const auto terms = product_terms(m, x, w);
      const auto a = exponent_extract(terms, m, shared_bias_add(m, x, w));
      const auto acc = align_and_accumulate(terms, a);
      const auto g = jack_mac(m, x, w);
      REQUIRE(acc == g.raw_accumulator);
    }
  }
}

TEST_CASE("MX scaling law on one case") {
  const Mode m = mode(ModeName::kMxFp8);
  testutil::Rng rng(3);
  auto x = testutil::random_operand(rng, m);
  auto w = testutil::random_operand(rng, m);
  for (auto& c : w.lanes) c = ScalarCode(m.element_format, 0);
  w.lanes[0] = encode(1.0, m.element_format);
  w.lanes[5] = encode(-0.75, m.element_format);
  x.shared_exponent = 0;
  w.shared_exponent = 0;
  const double base = decode(jack_mac(m, x, w).output).to_double();
  x.shared_exponent = 2;
  w.shared_exponent = 1;
  CHECK(decode(jack_mac(m, x, w).output).to_double() == base * 8);
}

TEST_CASE("input checks") {
  const Mode m = mode(ModeName::kInt8);
  CHECK_THROWS_AS(jack_mac(m, ints(m.element_format, {1, 2, 3}), ints(m.element_format, {1, 2, 3})),
                  std::invalid_argument);
  auto bad = ints(m.element_format, {1, 2, 3, 4});
  bad.lanes[2] = ScalarCode(presets::int4(), 1);
  CHECK_THROWS_AS(jack_mac(m, bad, ints(m.element_format, {1, 2, 3, 4})), std::invalid_argument);
  const Mode mx = mode(ModeName::kMxInt4);
  MacOperand no_exp;
  no_exp.lanes.assign(4, ScalarCode(mx.element_format, 1));
  CHECK_THROWS_AS(jack_mac(mx, no_exp, no_exp), std::invalid_argument);
}

TEST_CASE("structure and bounds") {
  const Mode bf = mode(ModeName::kBf16);
  CHECK(max_alignment_shift(bf) == 506);
  const auto g = structure_report(csm::Grouping::kGrouped2D, mode(ModeName::kFp8));
  const auto u = structure_report(csm::Grouping::kUngrouped, mode(ModeName::kFp8));
  CHECK(g.shifter_count * 4 == u.shifter_count);
  CHECK(g.sub_multiplier_count == 16);
  for (auto name : all_modes()) CHECK(accumulator_width(mode(name)) < WideInt::kBits - 8);
}

TEST_CASE("partial sum merges exactly") {
  const Mode m = mode(ModeName::kBf16);
  const auto x = ints(m.element_format, {1, 0, 0, 0});
  auto y = x;
  y.lanes[0] = encode(std::ldexp(1.0, -30), m.element_format);
  PartialSum ps;
  ps.add(jack_mac(m, x, x));
  ps.add(jack_mac(m, y, x));
  // 1 + 2^-30 truncates to 1.0.
  CHECK(ps.finalize(OutputFormat::kFp16).bits == 0x3C00);
  PartialSum neg;
  auto z = x;
  z.lanes[0] = encode(-1.0, m.element_format);
  neg.add(jack_mac(m, x, x));
  neg.add(jack_mac(m, z, x));
  auto small = x;
  small.lanes[0] = encode(std::ldexp(1.0, -10), m.element_format);
  neg.add(jack_mac(m, small, x));
  CHECK(neg.finalize(OutputFormat::kFp16).bits == 0x1400);
}

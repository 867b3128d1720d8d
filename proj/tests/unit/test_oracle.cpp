#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "jackmac/oracle.hpp"

using namespace jackmac;
using namespace jackmac::oracle;

namespace {

ExactValue ev(double d) { return ExactValue::from_double(d); }

ExactMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> g;
  ExactMatrix m{r, c, {}};
  for (std::size_t i = 0; i < r * c; ++i) m.data.push_back(ev(g(rng)));
  return m;
}

}  // namespace

TEST_CASE("exact_dot basics") {
  const std::vector<ExactValue> one{ev(1)};
  CHECK(exact_dot(one, one) == ev(1));
  const std::vector<ExactValue> x{ev(3), ev(5)}, z{ev(0), ev(0)};
  CHECK(exact_dot(x, z).is_zero());
  CHECK_THROWS_AS(exact_dot(one, x), std::invalid_argument);
}

TEST_CASE("exact_dot permutation invariance") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10000; ++t) {
    std::vector<ExactValue> x(8), w(8);
    for (auto& v : x) v = ev(std::ldexp(g(rng), static_cast<int>(rng() % 40) - 20));
    for (auto& v : w) v = ev(g(rng));
    const auto a = exact_dot(x, w);
    std::vector<std::size_t> idx(8);
    for (std::size_t i = 0; i < 8; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<ExactValue> xp, wp;
    for (auto i : idx) {
      xp.push_back(x[i]);
      wp.push_back(w[i]);
    }
    REQUIRE(exact_dot(xp, wp).identical(a));
  }
}

TEST_CASE("truncate_exact_to_fp16 examples") {
  CHECK(truncate_exact_to_fp16(ev(1.0)).bits == 0x3C00);
  const auto tiny = truncate_exact_to_fp16_ex(ev(std::ldexp(1.0, -20)));
  CHECK(tiny.code.bits == 0);
  CHECK(tiny.flushed);
  CHECK(truncate_exact_to_fp16(ev(-std::ldexp(1.0, -20))).bits == 0x8000);
  const auto big = truncate_exact_to_fp16_ex(ev(1e6));
  CHECK(big.code.bits == 0x7BFF);
  CHECK(big.saturated);
  CHECK(truncate_exact_to_fp16(ev(-1e6)).bits == 0xFBFF);
  // 1 + 2^-11 truncates to 1.
  CHECK(truncate_exact_to_fp16(ev(1.0 + std::ldexp(1.0, -11))).bits == 0x3C00);
  CHECK(truncate_exact_to_fp16(ev(-(2.0 - std::ldexp(1.0, -12)))).bits == 0xBFFF);
}

TEST_CASE("truncation never grows the magnitude and is within one ulp") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100000; ++t) {
    const auto v = ev(std::ldexp(g(rng), static_cast<int>(rng() % 30) - 12));
    const auto r = truncate_exact_to_fp16_ex(v);
    const auto d = decode(r.code);
    REQUIRE(d.abs() <= v.abs());
    if (!r.flushed && !r.saturated) {
      // One FP16 ulp at the value's binade.
      REQUIRE((v - d).abs() < ExactValue::pow2(v.floor_log2() - 10));
      // And it agrees with the double path: truncation of a double.
      const double x = v.to_double();
      int e = 0;
      std::frexp(std::fabs(x), &e);
      const double q = std::ldexp(std::trunc(std::ldexp(std::fabs(x), 11 - e)), e - 11);
      REQUIRE(std::fabs(d.to_double()) == q);
    }
  }
}

TEST_CASE("saturate16") {
  CHECK(saturate16(ev(40000)).bits == 0x7FFF);
  CHECK(saturate16(ev(-40000)).bits == 0x8000);
  CHECK(saturate16(ev(-5)).bits == 0xFFFB);
  CHECK_THROWS(saturate16(ev(0.5)));
}

TEST_CASE("mac_exact scales MX blocks and adds acc_in") {
  const auto f = presets::mxint8();
  const std::vector<ScalarCode> x{encode(0.5, f)}, w{encode(0.5, f)};
  CHECK(mac_exact(x, w, 0, 0, std::nullopt) == ev(0.25));
  CHECK(mac_exact(x, w, 2, 1, std::nullopt) == ev(2.0));
  CHECK(mac_exact(x, w, 0, 0, encode(1.0, presets::fp16())) == ev(1.25));
  CHECK(mac_expected(x, w, 0, 0, std::nullopt).bits == 0x3400);
}

TEST_CASE("reference_gemm") {
  ExactMatrix a{2, 2, {ev(1), ev(2), ev(3), ev(4)}};
  ExactMatrix id{2, 2, {ev(1), ev(0), ev(0), ev(1)}};
  const auto c = reference_gemm(a, id);
  CHECK(c.data == a.data);
  CHECK(reference_gemm(id, a).data == a.data);
  ExactMatrix bad{3, 1, {ev(1), ev(1), ev(1)}};
  CHECK_THROWS_AS(reference_gemm(a, bad), std::invalid_argument);

  std::mt19937_64 rng(12);
  const auto x = random_matrix(rng, 8, 8);
  const auto y = random_matrix(rng, 8, 8);
  const auto z = reference_gemm(x, y);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      std::vector<ExactValue> row(x.data.begin() + static_cast<long>(i * 8), x.data.begin() + static_cast<long>(i * 8 + 8));
      std::vector<ExactValue> col;
      for (std::size_t k = 0; k < 8; ++k) col.push_back(y.at(k, j));
      REQUIRE(exact_dot(row, col) == z.at(i, j));
    }
  }
}

TEST_CASE("quantize_rows") {
  std::mt19937_64 rng(13);
  const auto a = random_matrix(rng, 3, 40);
  const auto q = quantize_rows(a, presets::bf16());
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(q.data[i] == decode(encode(a.data[i], presets::bf16())));
  const auto m = quantize_rows(a, presets::mxint8());
  std::vector<ExactValue> first(a.data.begin(), a.data.begin() + 32);
  const auto deq = dequantize_block(quantize_block(first, presets::mxint8()));
  for (std::size_t i = 0; i < 32; ++i) CHECK(m.data[i] == deq[i]);
}

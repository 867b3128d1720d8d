#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "jackmac/tensor_io.hpp"

using namespace jackmac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "jackmac_tensor_io_test";
  fs::create_directories(dir);
  return dir / name;
}

Tensor gaussian(std::vector<std::uint32_t> dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  std::vector<float> v(n);
  for (auto& x : v) x = g(rng);
  return make_fp32(std::move(dims), v);
}

}  // namespace

TEST_CASE("dtype names and ids") {
  CHECK(static_cast<int>(dtype_from_name("mxfp8_e4m3")) == 7);
  CHECK(dtype_from_name("fp32") == DType::kFp32);
  CHECK(dtype_bits(DType::kInt4) == 4);
  CHECK_THROWS(dtype_from_name("fp64"));
  CHECK_THROWS(dtype_format(DType::kFp32));
}

TEST_CASE("JKT1 round trip for every dtype") {
  const auto src = gaussian({3, 37}, 1);  // odd sizes: partial MX blocks, odd nibble count
  for (auto name : {"fp32", "bf16", "fp8_e4m3", "int8", "int4", "mxint8", "mxint4", "mxfp8_e4m3", "fp16", "int16"}) {
    CAPTURE(name);
    Tensor t = quantize_tensor(src, dtype_from_name(name));
    validate(t);
    const auto bytes = serialize_jkt1(t);
    const Tensor back = deserialize_jkt1(bytes);
    CHECK(back.dtype == t.dtype);
    CHECK(back.dims == t.dims);
    CHECK(back.codes == t.codes);
    CHECK(back.shared_exponents == t.shared_exponents);
    if (t.is_mx()) CHECK(t.shared_exponents.size() == 3 * 2);
  }
}

TEST_CASE("JKT1 header layout") {
  Tensor t = quantize_tensor(make_fp32({3}, std::vector<float>{1.0f, -1.0f, 2.0f}), DType::kInt4);
  const auto b = serialize_jkt1(t);
  REQUIRE(b.size() == 4 + 1 + 1 + 4 + 2);
  CHECK(std::string(b.begin(), b.begin() + 4) == "JKT1");
  CHECK(b[4] == 4);
  CHECK(b[5] == 1);
  CHECK(b[6] == 3);
  CHECK(b[10] == 0xF1);  // low nibble first: 1, then -1
  CHECK(b[11] == 0x02);
}

TEST_CASE("malformed files are rejected") {
  const auto good = serialize_jkt1(quantize_tensor(gaussian({4, 4}, 2), DType::kBf16));
  auto bad = good;
  bad[0] = 'X';
  CHECK_THROWS(deserialize_jkt1(bad));
  auto truncated = good;
  truncated.pop_back();
  CHECK_THROWS(deserialize_jkt1(truncated));
  auto dtype = good;
  dtype[4] = 42;
  CHECK_THROWS(deserialize_jkt1(dtype));
  auto reserved = good;
  reserved[reserved.size() - 1] = 0x7F;  // bf16 exponent field all ones
  reserved[reserved.size() - 2] = 0x80;
  CHECK_THROWS(deserialize_jkt1(reserved));
}

TEST_CASE("files, atomic writes and CSV") {
  const auto path = scratch("t.jkt");
  const Tensor t = quantize_tensor(gaussian({2, 40}, 3), DType::kMxInt8);
  write_jkt1(path, t);
  CHECK(read_tensor(path).codes == t.codes);
  for (const auto& e : fs::directory_iterator(path.parent_path())) CHECK(e.path().string().find(".tmp.") == std::string::npos);

  const auto csv = scratch("t.csv");
  {
    std::ofstream f(csv);
    f << "# comment\n1.5, -2\n\n3,4e-1\n";
  }
  const Tensor c = read_tensor(csv);
  CHECK(c.dims == std::vector<std::uint32_t>{2, 2});
  CHECK(c.value(0) == ExactValue::from_double(1.5));
  CHECK(c.value(3) == ExactValue::from_double(static_cast<float>(0.4)));
  {
    std::ofstream f(csv);
    f << "1,2\n3\n";
  }
  CHECK_THROWS(read_csv(csv));
  {
    std::ofstream f(csv);
    f << "1,abc\n";
  }
  CHECK_THROWS(read_csv(csv));
  CHECK_THROWS(read_tensor(scratch("missing.jkt")));
}

TEST_CASE("quantization is idempotent and zero stays zero") {
  for (auto name : {"bf16", "fp8_e4m3", "int8", "mxint8", "mxint4", "mxfp8_e4m3"}) {
    const auto d = dtype_from_name(name);
    const Tensor q = quantize_tensor(gaussian({5, 64}, 4), d);
    const Tensor again = quantize_values(to_exact(q), q.dims, d);
    CHECK(again.codes == q.codes);
    CHECK(again.shared_exponents == q.shared_exponents);
    const Tensor z = quantize_tensor(make_fp32({1, 32}, std::vector<float>(32, 0.0f)), d);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z.value(i).is_zero());
  }
}

TEST_CASE("MX block index follows the innermost dimension") {
  std::vector<float> v(70, 0.0f);
  v[0] = 1.0f;      // block 0 of row 0
  v[40] = 64.0f;      // row 1, block 0
  v[35 + 34] = 0.5f;  // row 1, block 1
  const Tensor q = quantize_tensor(make_fp32({2, 35}, v), DType::kMxInt8);
  CHECK(q.shared_exponents.size() == 4);
  CHECK(q.shared_exponent_of(0) == 1);
  CHECK(q.shared_exponent_of(35 + 34) == 0);
  CHECK(q.value(0) == ExactValue::from_int(1));
}

#include "jackmac/tensor_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace jackmac {

namespace {

constexpr char kMagic[4] = {'J', 'K', 'T', '1'};
constexpr DType kAll[] = {DType::kFp32,   DType::kBf16,   DType::kFp8E4M3,   DType::kInt8, DType::kInt4,
                          DType::kMxInt8, DType::kMxInt4, DType::kMxFp8E4M3, DType::kFp16, DType::kInt16};

std::size_t product(const std::vector<std::uint32_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::size_t blocks_for(const std::vector<std::uint32_t>& dims, DType d) {
  if (d == DType::kFp32 || !dtype_format(d).is_mx() || dims.empty()) return 0;
  const std::size_t inner = dims.back();
  const auto bs = static_cast<std::size_t>(dtype_format(d).block_size);
  return (inner + bs - 1) / bs;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::string_view to_string(DType d) {
  switch (d) {
    case DType::kFp32: return "fp32";
    case DType::kBf16: return "bf16";
    case DType::kFp8E4M3: return "fp8_e4m3";
    case DType::kInt8: return "int8";
    case DType::kInt4: return "int4";
    case DType::kMxInt8: return "mxint8";
    case DType::kMxInt4: return "mxint4";
    case DType::kMxFp8E4M3: return "mxfp8_e4m3";
    case DType::kFp16: return "fp16";
    case DType::kInt16: return "int16";
  }
  return "?";
}

DType dtype_from_name(std::string_view name) {
  for (auto d : kAll) {
    if (to_string(d) == name) return d;
  }
  if (name == "fp8") return DType::kFp8E4M3;
  if (name == "mxfp8") return DType::kMxFp8E4M3;
  throw std::invalid_argument("unknown format: " + std::string(name));
}

int dtype_bits(DType d) { return d == DType::kFp32 ? 32 : dtype_format(d).element_bits(); }

FormatDescriptor dtype_format(DType d) {
  if (d == DType::kFp32) throw std::invalid_argument("fp32 has no element format");
  return format_by_name(to_string(d));
}

DType dtype_for_format(const FormatDescriptor& fmt) {
  const auto name = preset_name(fmt);
  if (!name) throw std::invalid_argument("format is not a preset");
  return dtype_from_name(*name);
}

std::size_t Tensor::size() const { return product(dims); }

std::size_t Tensor::blocks_per_row() const { return blocks_for(dims, dtype); }

bool Tensor::is_mx() const { return dtype != DType::kFp32 && dtype_format(dtype).is_mx(); }

ScalarCode Tensor::code(std::size_t i) const { return ScalarCode(dtype_format(dtype), codes.at(i)); }

int Tensor::shared_exponent_of(std::size_t i) const {
  if (!is_mx()) return 0;
  const std::size_t row = i / inner();
  const std::size_t col = i % inner();
  return shared_exponents.at(row * blocks_per_row() + col / static_cast<std::size_t>(dtype_format(dtype).block_size));
}

ExactValue Tensor::value(std::size_t i) const {
  if (dtype == DType::kFp32) {
    const float f = std::bit_cast<float>(codes.at(i));
    return ExactValue::from_double(f);
  }
  const ExactValue v = decode(code(i));
  return is_mx() ? v.ldexp(shared_exponent_of(i)) : v;
}

void validate(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > 255) throw std::invalid_argument("tensor needs 1..255 dimensions");
  if (t.codes.size() != t.size()) throw std::invalid_argument("tensor code count does not match dims");
  if (t.shared_exponents.size() != t.outer() * t.blocks_per_row())
    throw std::invalid_argument("tensor shared exponent count does not match dims");
  if (t.dtype != DType::kFp32) {
    const auto mask = dtype_format(t.dtype).code_mask();
    for (auto c : t.codes) {
      if (c > mask) throw std::invalid_argument("tensor code wider than its format");
    }
  }
}

Tensor make_fp32(std::vector<std::uint32_t> dims, std::span<const float> values) {
  Tensor t;
  t.dtype = DType::kFp32;
  t.dims = std::move(dims);
  if (values.size() != t.size()) throw std::invalid_argument("value count does not match dims");
  for (float f : values) t.codes.push_back(std::bit_cast<std::uint32_t>(f));
  return t;
}

std::vector<ExactValue> to_exact(const Tensor& t) {
  std::vector<ExactValue> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back(t.value(i));
  return out;
}

Tensor quantize_values(std::span<const ExactValue> values, std::vector<std::uint32_t> dims, DType dtype) {
  Tensor t;
  t.dtype = dtype;
  t.dims = std::move(dims);
  if (values.size() != t.size()) throw std::invalid_argument("value count does not match dims");
  if (dtype == DType::kFp32) {
    for (const auto& v : values) t.codes.push_back(std::bit_cast<std::uint32_t>(static_cast<float>(v.to_double())));
    return t;
  }
  const FormatDescriptor fmt = dtype_format(dtype);
  if (!fmt.is_mx()) {
    for (const auto& v : values) t.codes.push_back(encode(v, fmt).bits);
    return t;
  }
  const std::size_t inner = t.inner();
  const auto bs = static_cast<std::size_t>(fmt.block_size);
  t.codes.resize(values.size());
  for (std::size_t row = 0; row < t.outer(); ++row) {
    for (std::size_t c0 = 0; c0 < inner; c0 += bs) {
      std::vector<ExactValue> block(bs);  // zero padded past the row end
      const std::size_t n = std::min(bs, inner - c0);
      for (std::size_t i = 0; i < n; ++i) block[i] = values[row * inner + c0 + i];
      const BlockCode b = quantize_block(block, fmt);
      t.shared_exponents.push_back(b.shared_exponent);
      for (std::size_t i = 0; i < n; ++i) t.codes[row * inner + c0 + i] = b.elements[i].bits;
    }
  }
  return t;
}

Tensor quantize_tensor(const Tensor& t, DType dtype) { return quantize_values(to_exact(t), t.dims, dtype); }

std::vector<std::uint8_t> serialize_jkt1(const Tensor& t) {
  validate(t);
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  const int bits = dtype_bits(t.dtype);
  if (bits == 4) {
    for (std::size_t i = 0; i < t.codes.size(); i += 2) {
      const std::uint32_t hi = i + 1 < t.codes.size() ? t.codes[i + 1] : 0;
      out.push_back(static_cast<std::uint8_t>(t.codes[i] | (hi << 4)));
    }
  } else {
    const int bytes = bits / 8;
    for (auto c : t.codes) {
      for (int b = 0; b < bytes; ++b) out.push_back(static_cast<std::uint8_t>(c >> (8 * b)));
    }
  }
  for (auto e : t.shared_exponents) out.push_back(static_cast<std::uint8_t>(e));
  return out;
}

Tensor deserialize_jkt1(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw std::runtime_error("not a JKT1 file");
  Tensor t;
  const std::uint8_t dt = bytes[4];
  if (dt > static_cast<std::uint8_t>(DType::kInt16)) throw std::runtime_error("JKT1: unknown dtype code");
  t.dtype = static_cast<DType>(dt);
  const std::size_t ndim = bytes[5];
  if (ndim == 0) throw std::runtime_error("JKT1: zero dimensions");
  std::size_t at = 6;
  if (bytes.size() < at + 4 * ndim) throw std::runtime_error("JKT1: truncated header");
  for (std::size_t i = 0; i < ndim; ++i, at += 4) t.dims.push_back(get_u32(bytes, at));
  const std::size_t n = t.size();
  const int bits = dtype_bits(t.dtype);
  const std::size_t code_bytes = (n * static_cast<std::size_t>(bits) + 7) / 8;
  const std::size_t exps = t.outer() * blocks_for(t.dims, t.dtype);
  if (bytes.size() != at + code_bytes + exps) throw std::runtime_error("JKT1: payload size does not match header");
  t.codes.resize(n);
  if (bits == 4) {
    for (std::size_t i = 0; i < n; ++i) t.codes[i] = (bytes[at + i / 2] >> (4 * (i % 2))) & 0xFu;
  } else {
    const int nb = bits / 8;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t c = 0;
      for (int b = 0; b < nb; ++b) c |= static_cast<std::uint32_t>(bytes[at + i * nb + b]) << (8 * b);
      t.codes[i] = c;
    }
  }
  at += code_bytes;
  for (std::size_t i = 0; i < exps; ++i) t.shared_exponents.push_back(static_cast<std::int8_t>(bytes[at + i]));
  if (t.dtype != DType::kFp32) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!is_well_formed(t.code(i))) throw std::runtime_error("JKT1: reserved code in payload");
    }
  }
  return t;
}

void atomic_write(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f.flush()) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void atomic_write(const std::filesystem::path& path, std::string_view text) {
  atomic_write(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_jkt1(const std::filesystem::path& path, const Tensor& t) { atomic_write(path, serialize_jkt1(t)); }

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

Tensor read_jkt1(const std::filesystem::path& path) { return deserialize_jkt1(slurp(path)); }

Tensor read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<float> values;
  std::uint32_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::size_t n = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      if (b == std::string::npos) throw std::runtime_error("CSV: empty cell on row " + std::to_string(rows + 1));
      const std::string tok = cell.substr(b, e - b + 1);
      char* end = nullptr;
      const double d = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size() || !std::isfinite(d))
        throw std::runtime_error("CSV: bad number '" + tok + "' on row " + std::to_string(rows + 1));
      values.push_back(static_cast<float>(d));
      ++n;
    }
    if (rows == 0) cols = n;
    if (n != cols) throw std::runtime_error("CSV: ragged row " + std::to_string(rows + 1));
    ++rows;
  }
  if (rows == 0) throw std::runtime_error("CSV: no data");
  return make_fp32({rows, static_cast<std::uint32_t>(cols)}, values);
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) return deserialize_jkt1(bytes);
  return read_csv(path);
}

}  // namespace jackmac

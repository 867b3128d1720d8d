#include "jackmac/simkernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace jackmac::sim {

namespace {

using datapath::Mode;

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::string_view to_string(UnitKind u) { return u == UnitKind::kJack ? "JACK" : "BASELINE"; }
std::string_view to_string(MemoryModel m) { return m == MemoryModel::kNone ? "none" : "double_buffered"; }
std::string_view to_string(WorkloadKind k) { return k == WorkloadKind::kGemm ? "GEMM" : "CONV"; }

int padded_cin(const ConvDims& d, const Mode& m) {
  if (!m.is_mx()) return d.Cin;
  const int bs = m.element_format.block_size;
  return static_cast<int>(ceil_div(d.Cin, bs) * bs);
}

struct Traffic {
  double a_bytes = 0;
  double b_bytes = 0;
  double out_bytes = 0;
};

Traffic traffic(const WorkloadSpec& spec, const Mode& m) {
  const double eb = m.element_format.element_bits() / 8.0;
  Traffic t;
  t.a_bytes = static_cast<double>(spec.M * spec.K) * eb;
  t.b_bytes = static_cast<double>(spec.N * spec.K) * eb;
  if (m.is_mx()) {
    const auto blocks = ceil_div(spec.K, m.element_format.block_size);
    t.a_bytes += static_cast<double>(spec.M * blocks);
    t.b_bytes += static_cast<double>(spec.N * blocks);
  }
  t.out_bytes = static_cast<double>(spec.M * spec.N) * 2.0;
  return t;
}

struct Candidate {
  std::int64_t total = std::numeric_limits<std::int64_t>::max();
  std::int64_t compute = 0;
  std::int64_t fill = 0;
  std::int64_t folds = 0;
  int rows = 0;
  int cols = 0;
  double bytes = 0;
};

// Cycle count of one tiling: r x c units used per fold.
Candidate evaluate(const WorkloadSpec& spec, const ArrayConfig& cfg, const Mode& m, int r, int c) {
  const int s = cfg.effective_scale(m);
  const int feed = static_cast<int>(ceil_div(m.element_format.element_bits(), cfg.input_link_bits));
  const std::int64_t kr = ceil_div(spec.K, s);
  const std::int64_t nc = ceil_div(spec.N, s);
  const std::int64_t fk = ceil_div(kr, r);
  const std::int64_t fn = ceil_div(nc, c);
  Candidate out;
  out.rows = static_cast<int>(std::min<std::int64_t>(r, kr));
  out.cols = static_cast<int>(std::min<std::int64_t>(c, nc));
  out.folds = fk * fn;
  out.fill = static_cast<std::int64_t>(feed) * (out.rows + out.cols - 1);
  out.compute = out.folds * spec.M + out.fill;
  if (cfg.memory_model == MemoryModel::kNone) {
    out.total = out.compute;
    return out;
  }

  const Traffic t = traffic(spec, m);
  const double bw = cfg.bandwidth_bytes_per_cycle;
  const bool a_resident = t.a_bytes <= cfg.ibuf_kb * 1024.0;
  const double out_tile = t.out_bytes / static_cast<double>(fn);
  const bool out_resident = out_tile <= cfg.obuf_kb * 1024.0;
  const double w_tile = t.b_bytes / static_cast<double>(out.folds);
  const double a_slice = a_resident ? 0.0 : t.a_bytes / static_cast<double>(fk);

  // Folds run n-major, k-minor. Index k = fold % fk.
  auto load = [&](std::int64_t k) { return w_tile + a_slice + (!out_resident && k != 0 ? out_tile : 0.0); };
  auto writeback = [&](std::int64_t k) { return !out_resident || k == fk - 1 ? out_tile : 0.0; };
  const double mcyc = static_cast<double>(spec.M);
  auto phase = [&](std::int64_t k, bool has_prev, bool has_next) {
    double bytes = 0;
    if (has_next) bytes += load((k + 1) % fk);
    if (has_prev) bytes += writeback((k + fk - 1) % fk);
    return std::max(mcyc, bytes / bw);
  };

  double cycles = (load(0) + (a_resident ? t.a_bytes : 0.0)) / bw;
  const std::int64_t folds = out.folds;
  if (folds == 1) {
    cycles += phase(0, false, false);
  } else {
    cycles += phase(0, false, true);
    cycles += phase((folds - 1) % fk, true, false);
    for (std::int64_t k = 0; k < fk; ++k) {
      std::int64_t n = fn;  // folds with this k index
      if (k == 0) --n;
      if (k == (folds - 1) % fk) --n;
      if (n > 0) cycles += static_cast<double>(n) * phase(k, true, true);
    }
  }
  cycles += writeback((folds - 1) % fk) / bw;
  out.total = out.fill + static_cast<std::int64_t>(std::ceil(cycles));
  out.bytes = load(0) * static_cast<double>(folds) + (a_resident ? t.a_bytes : 0.0);
  for (std::int64_t k = 0; k < fk; ++k) out.bytes += writeback(k) * static_cast<double>(fn);
  return out;
}

void check_supported(const ArrayConfig& cfg, const Mode& m) {
  if (!cfg.supports(m))
    throw std::invalid_argument("mode " + std::string(datapath::to_string(m.name)) + " is not supported by " +
                                std::string(to_string(cfg.unit)));
}

datapath::MacOperand slice(const Tensor& t, std::size_t row, std::size_t k0, int lanes, const Mode& m) {
  datapath::MacOperand op;
  const std::size_t k_end = std::min(t.inner(), k0 + static_cast<std::size_t>(lanes));
  const std::size_t base = row * t.inner();
  for (std::size_t k = k0; k < k_end; ++k) op.lanes.emplace_back(m.element_format, t.codes[base + k]);
  if (m.is_mx()) {
    op.shared_exponent = t.shared_exponent_of(base + k0);
  } else {
    while (op.lanes.size() < static_cast<std::size_t>(lanes)) op.lanes.emplace_back(m.element_format, 0);
  }
  return op;
}

}  // namespace

bool ArrayConfig::supports(const Mode& m) const { return unit == UnitKind::kJack || !m.is_mx(); }

int ArrayConfig::effective_scale(const Mode& m) const {
  const bool narrow = m.precision() == csm::Precision::k4Bit;
  if (unit == UnitKind::kJack) return narrow ? 16 : 4;
  return narrow ? 4 : 1;
}

int ArrayConfig::lanes_per_unit(const Mode& m) const {
  const int s = effective_scale(m);
  return s * s;
}

std::int64_t ArrayConfig::effective_multipliers(const Mode& m) const {
  const std::int64_t s = effective_scale(m);
  return static_cast<std::int64_t>(rows) * s * cols * s;
}

ArrayConfig jack_preset() { return ArrayConfig{}; }

ArrayConfig baseline_preset() {
  ArrayConfig c;
  c.rows = 128;
  c.cols = 128;
  c.unit = UnitKind::kBaseline;
  c.input_link_bits = 16;
  return c;
}

void validate(const ArrayConfig& c) {
  if (c.rows < 1 || c.cols < 1) throw std::invalid_argument("array needs at least one row and column");
  if (c.input_link_bits < 1) throw std::invalid_argument("input_link_bits must be positive");
  if (c.ibuf_kb < 0 || c.wbuf_kb < 0 || c.obuf_kb < 0) throw std::invalid_argument("buffer sizes must be >= 0");
  if (!(c.bandwidth_bytes_per_cycle > 0)) throw std::invalid_argument("bandwidth must be positive");
}

WorkloadSpec gemm_spec(std::int64_t M, std::int64_t N, std::int64_t K, datapath::ModeName mode) {
  WorkloadSpec s;
  s.kind = WorkloadKind::kGemm;
  s.M = M;
  s.N = N;
  s.K = K;
  s.mode = mode;
  validate(s);
  return s;
}

WorkloadSpec conv_spec(const ConvDims& d, datapath::ModeName mode) {
  WorkloadSpec s;
  s.kind = WorkloadKind::kConv;
  s.conv = d;
  s.mode = mode;
  if (d.H < 1 || d.W < 1 || d.Cin < 1 || d.Cout < 1 || d.kh < 1 || d.kw < 1 || d.stride < 1)
    throw std::invalid_argument("conv dims must be >= 1");
  if (d.kh > d.H || d.kw > d.W) throw std::invalid_argument("kernel larger than input");
  s.M = static_cast<std::int64_t>(d.out_h()) * d.out_w();
  s.N = d.Cout;
  s.K = static_cast<std::int64_t>(d.kh) * d.kw * padded_cin(d, datapath::mode(mode));
  return s;
}

void validate(const WorkloadSpec& s) {
  if (s.kind == WorkloadKind::kConv) {
    conv_spec(s.conv, s.mode);
    return;
  }
  if (s.M < 1 || s.N < 1 || s.K < 1) throw std::invalid_argument("GEMM dims must be >= 1");
}

SimReport estimate_cycles(const WorkloadSpec& spec, const ArrayConfig& cfg) {
  validate(spec);
  validate(cfg);
  const Mode m = datapath::mode(spec.mode);
  check_supported(cfg, m);
  Candidate best;
  for (int r = 1; r <= cfg.rows; ++r) {
    for (int c = 1; c <= cfg.cols; ++c) {
      const Candidate cand = evaluate(spec, cfg, m, r, c);
      if (cand.total < best.total || (cand.total == best.total && cand.compute < best.compute)) best = cand;
    }
  }
  SimReport r;
  r.total_cycles = best.total;
  r.compute_cycles = best.compute;
  r.memory_stall_cycles = best.total - best.compute;
  r.input_feed_cycles_per_operand =
      static_cast<int>(ceil_div(m.element_format.element_bits(), cfg.input_link_bits));
  r.fill_cycles = best.fill;
  r.folds = best.folds;
  r.used_rows = best.rows;
  r.used_cols = best.cols;
  r.effective_multipliers = cfg.effective_multipliers(m);
  r.offchip_bytes = best.bytes;
  const double macs = spec.kind == WorkloadKind::kConv
                          ? static_cast<double>(spec.M) * spec.N * spec.conv.kh * spec.conv.kw * spec.conv.Cin
                          : static_cast<double>(spec.M) * spec.N * spec.K;
  r.utilization = macs / (static_cast<double>(r.effective_multipliers) * static_cast<double>(r.total_cycles));
  return r;
}

Tensor gemm_functional(const Tensor& a, const Tensor& b, const Mode& mode, const GemmOptions& opt) {
  validate(a);
  validate(b);
  const DType want = dtype_for_format(mode.element_format);
  if (a.dtype != want || b.dtype != want) throw std::invalid_argument("operands must be encoded in the mode's format");
  if (a.dims.size() != 2 || b.dims.size() != 2) throw std::invalid_argument("GEMM operands must be 2-D");
  if (a.dims[1] != b.dims[1]) throw std::invalid_argument("inner dimensions differ");
  const std::size_t M = a.dims[0], N = b.dims[0], K = a.dims[1];
  if (K == 0) throw std::invalid_argument("empty inner dimension");

  Tensor c;
  c.dtype = mode.int_output() ? DType::kInt16 : DType::kFp16;
  c.dims = {static_cast<std::uint32_t>(M), static_cast<std::uint32_t>(N)};
  c.codes.resize(M * N);
  const int lanes = mode.lanes;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      if (opt.partial_sums == PartialSumMode::kWide) {
        datapath::PartialSum ps;
        for (std::size_t k0 = 0; k0 < K; k0 += static_cast<std::size_t>(lanes))
          ps.add(datapath::jack_mac(mode, slice(a, i, k0, lanes, mode), slice(b, j, k0, lanes, mode)));
        c.codes[i * N + j] = ps.finalize(mode.output_format).bits;
        continue;
      }
      std::optional<ScalarCode> acc;
      for (std::size_t k0 = 0; k0 < K; k0 += static_cast<std::size_t>(lanes))
        acc = datapath::jack_mac(mode, slice(a, i, k0, lanes, mode), slice(b, j, k0, lanes, mode), acc).output;
      c.codes[i * N + j] = acc->bits;
    }
  }
  return c;
}

ExecResult gemm_execute(const Tensor& a, const Tensor& b, const ArrayConfig& cfg, const Mode& mode,
                        const GemmOptions& opt) {
  check_supported(cfg, mode);
  ExecResult r;
  r.out = gemm_functional(a, b, mode, opt);
  r.report = estimate_cycles(gemm_spec(a.dims[0], b.dims[0], a.dims[1], mode.name), cfg);
  r.report.result_checksum = checksum(r.out);
  return r;
}

Im2col im2col(const Tensor& x, const Tensor& w, int stride) {
  validate(x);
  validate(w);
  if (x.dims.size() != 3 || w.dims.size() != 4) throw std::invalid_argument("conv expects x HxWxCin and w CoutxkhxkwxCin");
  if (x.dtype != w.dtype) throw std::invalid_argument("conv operands differ in format");
  if (x.dims[2] != w.dims[3]) throw std::invalid_argument("channel counts differ");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  ConvDims d{static_cast<int>(x.dims[0]), static_cast<int>(x.dims[1]), static_cast<int>(x.dims[2]),
             static_cast<int>(w.dims[0]), static_cast<int>(w.dims[1]), static_cast<int>(w.dims[2]), stride};
  if (d.kh > d.H || d.kw > d.W) throw std::invalid_argument("kernel larger than input");

  const bool mx = x.is_mx();
  const std::size_t cin = static_cast<std::size_t>(d.Cin);
  const std::size_t cp = mx ? static_cast<std::size_t>(ceil_div(d.Cin, dtype_format(x.dtype).block_size) *
                                                       dtype_format(x.dtype).block_size)
                            : cin;
  const std::size_t bpr = mx ? x.blocks_per_row() : 0;
  const std::size_t groups = static_cast<std::size_t>(d.kh) * static_cast<std::size_t>(d.kw);
  const std::size_t kk = groups * cp;

  auto lower = [&](const Tensor& src, std::size_t rows, auto src_row) {
    Tensor t;
    t.dtype = src.dtype;
    t.dims = {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(kk)};
    t.codes.assign(rows * kk, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t sr = src_row(r, g);
        for (std::size_t ch = 0; ch < cin; ++ch) t.codes[r * kk + g * cp + ch] = src.codes[sr * cin + ch];
        for (std::size_t blk = 0; blk < bpr; ++blk) t.shared_exponents.push_back(src.shared_exponents[sr * bpr + blk]);
      }
    }
    return t;
  };

  const std::size_t ow = static_cast<std::size_t>(d.out_w());
  const std::size_t m_rows = static_cast<std::size_t>(d.out_h()) * ow;
  Im2col out;
  out.a = lower(x, m_rows, [&](std::size_t r, std::size_t g) {
    const std::size_t oy = r / ow, ox = r % ow;
    const std::size_t ky = g / static_cast<std::size_t>(d.kw), kx = g % static_cast<std::size_t>(d.kw);
    return (oy * static_cast<std::size_t>(stride) + ky) * static_cast<std::size_t>(d.W) + ox * static_cast<std::size_t>(stride) + kx;
  });
  out.b = lower(w, static_cast<std::size_t>(d.Cout), [&](std::size_t r, std::size_t g) { return r * groups + g; });
  return out;
}

ExecResult conv_execute(const Tensor& x, const Tensor& w, int stride, const ArrayConfig& cfg, const Mode& mode,
                        const GemmOptions& opt) {
  check_supported(cfg, mode);
  const Im2col low = im2col(x, w, stride);
  ExecResult r;
  r.out = gemm_functional(low.a, low.b, mode, opt);
  const ConvDims d{static_cast<int>(x.dims[0]), static_cast<int>(x.dims[1]), static_cast<int>(x.dims[2]),
                   static_cast<int>(w.dims[0]), static_cast<int>(w.dims[1]), static_cast<int>(w.dims[2]), stride};
  r.out.dims = {static_cast<std::uint32_t>(d.out_h()), static_cast<std::uint32_t>(d.out_w()),
                static_cast<std::uint32_t>(d.Cout)};
  r.report = estimate_cycles(conv_spec(d, mode.name), cfg);
  r.report.result_checksum = checksum(r.out);
  return r;
}

CompareReport compare(const WorkloadSpec& a, const ArrayConfig& cfg_a, const WorkloadSpec& b,
                      const ArrayConfig& cfg_b) {
  const SimReport ra = estimate_cycles(a, cfg_a);
  const SimReport rb = estimate_cycles(b, cfg_b);
  CompareReport c;
  c.cycles_a = ra.total_cycles;
  c.cycles_b = rb.total_cycles;
  c.speedup_b_over_a = static_cast<double>(ra.total_cycles) / static_cast<double>(rb.total_cycles);
  c.utilization_a = ra.utilization;
  c.utilization_b = rb.utilization;
  c.multipliers_a = ra.effective_multipliers;
  c.multipliers_b = rb.effective_multipliers;
  c.multiplier_ratio = static_cast<double>(rb.effective_multipliers) / static_cast<double>(ra.effective_multipliers);
  return c;
}

CompareReport compare_configs(const WorkloadSpec& spec, const ArrayConfig& cfg_a, const ArrayConfig& cfg_b) {
  return compare(spec, cfg_a, spec, cfg_b);
}

std::string checksum(const Tensor& t) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (auto byte : serialize_jkt1(t)) {
    h ^= byte;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void to_json(nlohmann::json& j, const ArrayConfig& c) {
  j = nlohmann::json{{"rows", c.rows},
                     {"cols", c.cols},
                     {"unit", std::string(to_string(c.unit))},
                     {"input_link_bits", c.input_link_bits},
                     {"ibuf_kb", c.ibuf_kb},
                     {"wbuf_kb", c.wbuf_kb},
                     {"obuf_kb", c.obuf_kb},
                     {"bandwidth_bytes_per_cycle", c.bandwidth_bytes_per_cycle},
                     {"clock_mhz", c.clock_mhz},
                     {"memory_model", std::string(to_string(c.memory_model))}};
}

void from_json(const nlohmann::json& j, ArrayConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("array config must be a JSON object");
  c = ArrayConfig{};
  if (j.contains("preset")) {
    const auto p = j.at("preset").get<std::string>();
    if (p == "JACK" || p == "jack") {
      c = jack_preset();
    } else if (p == "BASELINE" || p == "baseline") {
      c = baseline_preset();
    } else {
      throw std::invalid_argument("unknown preset: " + p);
    }
  }
  if (j.contains("unit")) {
    const auto u = j.at("unit").get<std::string>();
    if (u == "JACK") {
      c.unit = UnitKind::kJack;
    } else if (u == "BASELINE") {
      c.unit = UnitKind::kBaseline;
    } else {
      throw std::invalid_argument("unknown unit: " + u);
    }
  }
  if (j.contains("memory_model")) {
    const auto m = j.at("memory_model").get<std::string>();
    if (m == "none") {
      c.memory_model = MemoryModel::kNone;
    } else if (m == "double_buffered") {
      c.memory_model = MemoryModel::kDoubleBuffered;
    } else {
      throw std::invalid_argument("unknown memory_model: " + m);
    }
  }
  auto opt_int = [&](const char* key, int& field) {
    if (j.contains(key)) field = j.at(key).get<int>();
  };
  opt_int("rows", c.rows);
  opt_int("cols", c.cols);
  opt_int("input_link_bits", c.input_link_bits);
  opt_int("ibuf_kb", c.ibuf_kb);
  opt_int("wbuf_kb", c.wbuf_kb);
  opt_int("obuf_kb", c.obuf_kb);
  if (j.contains("bandwidth_bytes_per_cycle")) c.bandwidth_bytes_per_cycle = j.at("bandwidth_bytes_per_cycle").get<double>();
  if (j.contains("clock_mhz")) c.clock_mhz = j.at("clock_mhz").get<double>();
  validate(c);
}

void to_json(nlohmann::json& j, const WorkloadSpec& s) {
  j = nlohmann::json{{"kind", std::string(to_string(s.kind))}, {"mode", std::string(datapath::to_string(s.mode))}};
  if (s.kind == WorkloadKind::kGemm) {
    j["M"] = s.M;
    j["N"] = s.N;
    j["K"] = s.K;
  } else {
    j["H"] = s.conv.H;
    j["W"] = s.conv.W;
    j["Cin"] = s.conv.Cin;
    j["Cout"] = s.conv.Cout;
    j["kh"] = s.conv.kh;
    j["kw"] = s.conv.kw;
    j["stride"] = s.conv.stride;
  }
}

void from_json(const nlohmann::json& j, WorkloadSpec& s) {
  if (!j.is_object()) throw std::invalid_argument("workload must be a JSON object");
  const auto kind = j.at("kind").get<std::string>();
  const auto mode = datapath::mode_by_name(j.at("mode").get<std::string>()).name;
  if (kind == "GEMM") {
    s = gemm_spec(j.at("M").get<std::int64_t>(), j.at("N").get<std::int64_t>(), j.at("K").get<std::int64_t>(), mode);
  } else if (kind == "CONV") {
    ConvDims d;
    d.H = j.at("H").get<int>();
    d.W = j.at("W").get<int>();
    d.Cin = j.at("Cin").get<int>();
    d.Cout = j.at("Cout").get<int>();
    d.kh = j.at("kh").get<int>();
    d.kw = j.at("kw").get<int>();
    d.stride = j.value("stride", 1);
    s = conv_spec(d, mode);
  } else {
    throw std::invalid_argument("unknown workload kind: " + kind);
  }
}

void to_json(nlohmann::json& j, const SimReport& r) {
  j = nlohmann::json{{"total_cycles", r.total_cycles},
                     {"compute_cycles", r.compute_cycles},
                     {"memory_stall_cycles", r.memory_stall_cycles},
                     {"input_feed_cycles_per_operand", r.input_feed_cycles_per_operand},
                     {"utilization", r.utilization},
                     {"result_checksum", r.result_checksum.empty() ? nlohmann::json(nullptr)
                                                                   : nlohmann::json(r.result_checksum)},
                     {"fill_cycles", r.fill_cycles},
                     {"folds", r.folds},
                     {"used_rows", r.used_rows},
                     {"used_cols", r.used_cols},
                     {"effective_multipliers", r.effective_multipliers},
                     {"offchip_bytes", r.offchip_bytes}};
}

void to_json(nlohmann::json& j, const CompareReport& r) {
  j = nlohmann::json{{"cycles_a", r.cycles_a},
                     {"cycles_b", r.cycles_b},
                     {"speedup_b_over_a", r.speedup_b_over_a},
                     {"utilization_a", r.utilization_a},
                     {"utilization_b", r.utilization_b},
                     {"multipliers_a", r.multipliers_a},
                     {"multipliers_b", r.multipliers_b},
                     {"multiplier_ratio", r.multiplier_ratio}};
}

}  // namespace jackmac::sim

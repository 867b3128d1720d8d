#pragma once

// Weight-stationary systolic array of Jack units: functional GEMM/conv
// execution and a cycle estimate.
//
// Functional results depend only on the mode and the partial-sum policy,
// never on the array configuration. Timing follows this model:
//
//   s       multipliers per unit along each array edge in this mode
//           (JACK 4 or 16, BASELINE 1 or 4; the Table-1 effective arrays)
//   fold    one resident weight tile of (r*s) x (c*s) elements, r <= rows,
//           c <= cols
//   compute folds * M + feed * (used_rows + used_cols - 1)
//   memory  load(0) | [compute(i) || load(i+1) + writeback(i-1)] ... | drain
//
// feed = ceil(element_bits / input_link_bits) is paid on the pipeline fill:
// the 8-wire links are pipelined, so wide operands add latency, not issue
// slots. The mapper picks the cheapest tiling that fits the array.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jackmac/datapath.hpp"
#include "jackmac/tensor_io.hpp"

namespace jackmac::sim {

enum class UnitKind { kJack, kBaseline };
enum class MemoryModel { kDoubleBuffered, kNone };

inline constexpr double kDefaultBandwidth = 4096.0;  // bytes per cycle

struct ArrayConfig {
  int rows = 32;
  int cols = 32;
  UnitKind unit = UnitKind::kJack;
  int input_link_bits = 8;
  int ibuf_kb = 512;
  int wbuf_kb = 512;
  int obuf_kb = 256;
  double bandwidth_bytes_per_cycle = kDefaultBandwidth;
  double clock_mhz = 400.0;
  MemoryModel memory_model = MemoryModel::kDoubleBuffered;

  bool supports(const datapath::Mode& m) const;
  // Multipliers along one array edge per unit (Table-1 effective arrays).
  int effective_scale(const datapath::Mode& m) const;
  int lanes_per_unit(const datapath::Mode& m) const;
  std::int64_t effective_multipliers(const datapath::Mode& m) const;
};

ArrayConfig jack_preset();
ArrayConfig baseline_preset();
// Throws std::invalid_argument for non-positive sizes or bandwidth.
void validate(const ArrayConfig& cfg);

enum class WorkloadKind { kGemm, kConv };

struct ConvDims {
  int H = 1, W = 1, Cin = 1, Cout = 1, kh = 1, kw = 1, stride = 1;
  int out_h() const { return (H - kh) / stride + 1; }
  int out_w() const { return (W - kw) / stride + 1; }
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kGemm;
  std::int64_t M = 1, N = 1, K = 1;  // GEMM dims (derived for CONV)
  ConvDims conv;
  datapath::ModeName mode = datapath::ModeName::kBf16;
};

WorkloadSpec gemm_spec(std::int64_t M, std::int64_t N, std::int64_t K, datapath::ModeName mode);
WorkloadSpec conv_spec(const ConvDims& d, datapath::ModeName mode);
void validate(const WorkloadSpec& spec);

struct SimReport {
  std::int64_t total_cycles = 0;
  std::int64_t compute_cycles = 0;
  std::int64_t memory_stall_cycles = 0;
  int input_feed_cycles_per_operand = 1;
  double utilization = 0.0;
  std::string result_checksum;  // empty for estimate-only runs
  std::int64_t fill_cycles = 0;
  std::int64_t folds = 0;
  int used_rows = 0;
  int used_cols = 0;
  std::int64_t effective_multipliers = 0;
  double offchip_bytes = 0.0;
};

SimReport estimate_cycles(const WorkloadSpec& spec, const ArrayConfig& cfg);

enum class PartialSumMode { kFaithful16, kWide };

struct GemmOptions {
  PartialSumMode partial_sums = PartialSumMode::kFaithful16;
};

// C (M x N) = A (M x K) * B^T with B stored N x K, so MX blocks run along K.
// Each output chains one jack_mac per `lanes` slice of K in ascending order,
// passing the 16-bit result on as acc_in (faithful), or merges the raw
// accumulators exactly and truncates once (wide).
Tensor gemm_functional(const Tensor& a, const Tensor& b, const datapath::Mode& mode, const GemmOptions& opt = {});

struct ExecResult {
  Tensor out;
  SimReport report;
};

ExecResult gemm_execute(const Tensor& a, const Tensor& b, const ArrayConfig& cfg, const datapath::Mode& mode,
                        const GemmOptions& opt = {});

// x is H x W x Cin, w is Cout x kh x kw x Cin, valid padding. The lowered
// A has one row per output pixel; MX modes pad each (ky, kx) group of Cin
// to whole blocks with zeros so shared exponents carry over unchanged.
struct Im2col {
  Tensor a;  // M x K'
  Tensor b;  // Cout x K'
};
Im2col im2col(const Tensor& x, const Tensor& w, int stride);

// y is out_h x out_w x Cout.
ExecResult conv_execute(const Tensor& x, const Tensor& w, int stride, const ArrayConfig& cfg,
                        const datapath::Mode& mode, const GemmOptions& opt = {});

struct CompareReport {
  std::int64_t cycles_a = 0;
  std::int64_t cycles_b = 0;
  double speedup_b_over_a = 1.0;
  double utilization_a = 0.0;
  double utilization_b = 0.0;
  std::int64_t multipliers_a = 0;
  std::int64_t multipliers_b = 0;
  double multiplier_ratio = 1.0;
};

// Throws std::invalid_argument if either config does not support a mode.
CompareReport compare(const WorkloadSpec& a, const ArrayConfig& cfg_a, const WorkloadSpec& b, const ArrayConfig& cfg_b);
CompareReport compare_configs(const WorkloadSpec& spec, const ArrayConfig& cfg_a, const ArrayConfig& cfg_b);

std::string checksum(const Tensor& t);  // FNV-1a 64 over dtype, dims and codes

void to_json(nlohmann::json& j, const ArrayConfig& c);
void from_json(const nlohmann::json& j, ArrayConfig& c);  // "preset" key seeds the defaults
void to_json(nlohmann::json& j, const WorkloadSpec& s);
void from_json(const nlohmann::json& j, WorkloadSpec& s);
void to_json(nlohmann::json& j, const SimReport& r);
void to_json(nlohmann::json& j, const CompareReport& r);

}  // namespace jackmac::sim

// jackmac: command-line front end.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jackmac/csm.hpp"
#include "jackmac/datapath.hpp"
#include "jackmac/simkernel.hpp"
#include "jackmac/tensor_io.hpp"
#include "jackmac/verify.hpp"

using namespace jackmac;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
  if (const char* s = std::getenv("JACKMAC_SEED")) {
    std::uint64_t v = 0;
    const char* end = s + std::strlen(s);
    auto [p, ec] = std::from_chars(s, end, v);
    if (ec != std::errc() || p != end) throw UsageError(std::string("JACKMAC_SEED is not an integer: ") + s);
    return v;
  }
  return 1;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

// "0x.." tokens are raw codes, anything else a decimal value rounded into fmt.
std::vector<ScalarCode> parse_codes(const std::string& list, const FormatDescriptor& fmt, const char* what) {
  std::vector<ScalarCode> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t"), e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError(std::string("empty entry in --") + what);
    tok = tok.substr(b, e - b + 1);
    if (tok.rfind("0x", 0) == 0 || tok.rfind("0X", 0) == 0) {
      std::uint32_t bits = 0;
      auto [p, ec] = std::from_chars(tok.data() + 2, tok.data() + tok.size(), bits, 16);
      if (ec != std::errc() || p != tok.data() + tok.size() || bits > fmt.code_mask())
        throw UsageError("bad code " + tok + " in --" + what);
      ScalarCode c(fmt, bits);
      if (!is_well_formed(c)) throw UsageError("reserved code " + tok + " in --" + what);
      out.push_back(c);
      continue;
    }
    double v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
      throw UsageError("bad number " + tok + " in --" + what);
    const ScalarCode c = encode(v, fmt);
    if (decode(c).to_double() != v)
      std::cerr << "note: --" << what << " entry " << tok << " rounded to " << decode(c).to_double() << "\n";
    out.push_back(c);
  }
  if (out.empty()) throw UsageError(std::string("--") + what + " is empty");
  return out;
}

// Loads an operand for mode m; fp32 inputs are quantized to the mode's format.
Tensor load_operand(const std::string& path, const datapath::Mode& m) {
  Tensor t = read_tensor(path);
  const DType want = dtype_for_format(m.element_format);
  if (t.dtype == DType::kFp32) return quantize_tensor(t, want);
  if (t.dtype != want)
    throw UsageError(path + " holds " + std::string(to_string(t.dtype)) + ", mode needs " +
                     std::string(to_string(want)));
  return t;
}

sim::ArrayConfig load_config(const std::string& path) {
  if (path.empty()) return sim::jack_preset();
  return read_json(path).get<sim::ArrayConfig>();
}

void print_report_table(const sim::SimReport& r) {
  std::printf("%-28s %lld\n", "total_cycles", static_cast<long long>(r.total_cycles));
  std::printf("%-28s %lld\n", "compute_cycles", static_cast<long long>(r.compute_cycles));
  std::printf("%-28s %lld\n", "memory_stall_cycles", static_cast<long long>(r.memory_stall_cycles));
  std::printf("%-28s %lld\n", "fill_cycles", static_cast<long long>(r.fill_cycles));
  std::printf("%-28s %lld\n", "folds", static_cast<long long>(r.folds));
  std::printf("%-28s %d x %d\n", "array_used", r.used_rows, r.used_cols);
  std::printf("%-28s %d\n", "input_feed_cycles/operand", r.input_feed_cycles_per_operand);
  std::printf("%-28s %.6g\n", "utilization", r.utilization);
  if (!r.result_checksum.empty()) std::printf("%-28s %s\n", "result_checksum", r.result_checksum.c_str());
}

// ---- quantize

struct QuantizeArgs {
  std::string in, format, out;
  bool json_out = false;
};

int cmd_quantize(const QuantizeArgs& a) {
  const DType dt = dtype_from_name(a.format);
  if (dt == DType::kFp32) throw UsageError("target format must not be fp32");
  const Tensor src = read_tensor(a.in);
  if (src.dtype != DType::kFp32) throw UsageError(a.in + " is not an fp32 tensor");
  const Tensor q = quantize_tensor(src, dt);

  double max_rel = 0, sum_rel = 0, max_abs = 0;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = src.value(i).to_double(), r = q.value(i).to_double();
    const double err = std::abs(r - v);
    max_abs = std::max(max_abs, err);
    if (v == 0) continue;
    ++nonzero;
    const double rel = err / std::abs(v);
    max_rel = std::max(max_rel, rel);
    sum_rel += rel;
  }
  write_jkt1(a.out, q);
  const json stats{{"format", std::string(to_string(dt))},
                   {"elements", src.size()},
                   {"nonzero_inputs", nonzero},
                   {"max_rel_error", max_rel},
                   {"mean_rel_error", nonzero ? sum_rel / static_cast<double>(nonzero) : 0.0},
                   {"max_abs_error", max_abs},
                   {"out", a.out}};
  if (a.json_out) {
    std::cout << stats.dump(2) << "\n";
  } else {
    std::printf("quantized %zu elements to %s -> %s\n", src.size(), std::string(to_string(dt)).c_str(), a.out.c_str());
    std::printf("max relative error  %.6g\nmean relative error %.6g\nmax absolute error  %.6g\n", max_rel,
                stats["mean_rel_error"].get<double>(), max_abs);
  }
  return kOk;
}

// ---- mac

struct MacArgs {
  std::string mode, x, w, acc;
  std::optional<int> ex, ey;
  bool json_out = false;
};

int cmd_mac(const MacArgs& a) {
  const datapath::Mode m = datapath::mode_by_name(a.mode);
  datapath::MacOperand x, w;
  x.lanes = parse_codes(a.x, m.element_format, "x");
  w.lanes = parse_codes(a.w, m.element_format, "w");
  const std::size_t lanes = static_cast<std::size_t>(m.lanes);
  if (x.lanes.size() != w.lanes.size()) throw UsageError("--x and --w lane counts differ");
  if (m.is_mx() ? x.lanes.size() > lanes : x.lanes.size() != lanes)
    throw UsageError("mode " + a.mode + " takes " + (m.is_mx() ? "at most " : "") + std::to_string(lanes) +
                     " lanes, got " + std::to_string(x.lanes.size()));
  if (m.is_mx()) {
    x.shared_exponent = a.ex.value_or(0);
    w.shared_exponent = a.ey.value_or(0);
  } else if (a.ex || a.ey) {
    throw UsageError("--ex/--ey apply to MX modes only");
  }
  std::optional<ScalarCode> acc;
  if (!a.acc.empty()) {
    const auto v = parse_codes(a.acc, datapath::output_descriptor(m.output_format), "acc");
    if (v.size() != 1) throw UsageError("--acc takes one value");
    acc = v[0];
  }
  const auto r = datapath::jack_mac(m, x, w, acc);
  const json j = datapath::to_json(r, m);
  if (a.json_out) {
    std::cout << j.dump(2) << "\n";
    return kOk;
  }
  std::printf("output           %s = %s (%s)\n", j["output_bits"].get<std::string>().c_str(),
              j["output_value"].dump().c_str(), j["output_format"].get<std::string>().c_str());
  std::printf("e_max            %s\n", j["e_max"].dump().c_str());
  std::printf("raw accumulator  %s\n", j["raw_accumulator"].get<std::string>().c_str());
  std::string active;
  for (const auto& s : j["active_submodules"]["active"]) active += (active.empty() ? "" : ", ") + s.get<std::string>();
  std::printf("active           %s\n", active.c_str());
  if (r.saturated) std::printf("saturated\n");
  if (r.flushed) std::printf("flushed to zero\n");
  return kOk;
}

// ---- gemm / conv

struct ExecArgs {
  std::string a, b, mode, out, config, report;
  int stride = 1;
  bool wide = false, json_out = false;
};

int finish_exec(const ExecArgs& a, const sim::ExecResult& r) {
  write_jkt1(a.out, r.out);
  const json j = r.report;
  if (!a.report.empty()) write_json(a.report, j);
  if (a.json_out) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("wrote %s\n", a.out.c_str());
    print_report_table(r.report);
  }
  return kOk;
}

sim::GemmOptions exec_options(const ExecArgs& a) {
  sim::GemmOptions o;
  if (a.wide) o.partial_sums = sim::PartialSumMode::kWide;
  return o;
}

int cmd_gemm(const ExecArgs& a) {
  const auto m = datapath::mode_by_name(a.mode);
  const auto cfg = load_config(a.config);
  return finish_exec(a, sim::gemm_execute(load_operand(a.a, m), load_operand(a.b, m), cfg, m, exec_options(a)));
}

int cmd_conv(const ExecArgs& a) {
  const auto m = datapath::mode_by_name(a.mode);
  const auto cfg = load_config(a.config);
  return finish_exec(a,
                     sim::conv_execute(load_operand(a.a, m), load_operand(a.b, m), a.stride, cfg, m, exec_options(a)));
}

// ---- simulate

struct SimulateArgs {
  std::string workload, config, out;
  bool json_out = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto spec = read_json(a.workload).get<sim::WorkloadSpec>();
  const auto cfg = load_config(a.config);
  const auto r = sim::estimate_cycles(spec, cfg);
  const json j = r;
  if (!a.out.empty()) write_json(a.out, j);
  if (a.json_out) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("%s M=%lld N=%lld K=%lld mode=%s\n", spec.kind == sim::WorkloadKind::kConv ? "CONV" : "GEMM",
                static_cast<long long>(spec.M), static_cast<long long>(spec.N), static_cast<long long>(spec.K),
                std::string(datapath::to_string(spec.mode)).c_str());
    print_report_table(r);
  }
  return kOk;
}

// ---- verify

struct VerifyArgs {
  std::string suite;
  std::int64_t trials = 10000;
  std::optional<std::uint64_t> seed;
  bool json_out = false;
};

int cmd_verify(const VerifyArgs& a) {
  const auto r = verify::run_suite(a.suite, a.trials, a.seed ? *a.seed : default_seed());
  if (a.json_out) {
    std::cout << json(r).dump(2) << "\n";
  } else {
    std::printf("%s: %s  %lld cases, %lld failures, seed %llu, %.2f s\n", r.suite.c_str(),
                r.passed() ? "PASS" : "FAIL", static_cast<long long>(r.cases), static_cast<long long>(r.failures),
                static_cast<unsigned long long>(r.seed), r.seconds);
    if (!r.counterexample.empty()) std::printf("counterexample: %s\n", r.counterexample.c_str());
  }
  return r.passed() ? kOk : kVerifyFailed;
}

// ---- report

struct ReportArgs {
  bool structure = false;
  std::string grouping = "grouped", mode;
  int lanes = 16;
};

int cmd_report(const ReportArgs& a) {
  if (!a.structure) throw UsageError("report needs --structure");
  const auto g = csm::grouping_from_string(a.grouping);
  json j;
  if (a.mode.empty()) {
    j = csm::structure_report(g, a.lanes);
  } else {
    const auto m = datapath::mode_by_name(a.mode);
    j = datapath::structure_report(g, m);
    j["mode"] = std::string(datapath::to_string(m.name));
    j["activation"] = datapath::mode_activation(m);
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-accurate model of a multi-format MAC unit"};
  app.require_subcommand(1);
  std::vector<std::string> suites;
  for (auto s : verify::suite_names()) suites.emplace_back(s);

  QuantizeArgs qa;
  auto* q = app.add_subcommand("quantize", "Quantize an fp32 tensor (JKT1 or CSV) to a format");
  q->add_option("--in", qa.in, "input tensor")->required()->check(CLI::ExistingFile);
  q->add_option("--format", qa.format, "target format name")->required();
  q->add_option("--out", qa.out, "output JKT1 file")->required();
  q->add_flag("--json", qa.json_out, "print error stats as JSON");

  MacArgs ma;
  auto* mc = app.add_subcommand("mac", "Run one MAC invocation and dump the result");
  mc->add_option("--mode", ma.mode, "datapath mode")->required();
  mc->add_option("--x", ma.x, "comma-separated lane values or 0x codes")->required();
  mc->add_option("--w", ma.w, "comma-separated lane values or 0x codes")->required();
  mc->add_option("--acc", ma.acc, "accumulator input value or 0x code");
  mc->add_option("--ex", ma.ex, "shared exponent of x (MX modes)");
  mc->add_option("--ey", ma.ey, "shared exponent of w (MX modes)");
  mc->add_flag("--json", ma.json_out, "print JSON");

  ExecArgs ga;
  auto* gm = app.add_subcommand("gemm", "C = A * B^T with A (M x K) and B (N x K)");
  gm->add_option("--a", ga.a, "A tensor")->required()->check(CLI::ExistingFile);
  gm->add_option("--b", ga.b, "B tensor")->required()->check(CLI::ExistingFile);
  gm->add_option("--mode", ga.mode, "datapath mode")->required();
  gm->add_option("--out", ga.out, "output JKT1 file")->required();
  gm->add_option("--config", ga.config, "ArrayConfig JSON (default: JACK preset)")->check(CLI::ExistingFile);
  gm->add_option("--report", ga.report, "write SimReport JSON here");
  gm->add_flag("--wide", ga.wide, "wide partial sums between units");
  gm->add_flag("--json", ga.json_out, "print SimReport JSON");

  ExecArgs ca;
  auto* cv = app.add_subcommand("conv", "Valid convolution, x HxWxCin, w CoutxkhxkwxCin");
  cv->add_option("--x", ca.a, "input tensor")->required()->check(CLI::ExistingFile);
  cv->add_option("--w", ca.b, "weight tensor")->required()->check(CLI::ExistingFile);
  cv->add_option("--mode", ca.mode, "datapath mode")->required();
  cv->add_option("--out", ca.out, "output JKT1 file")->required();
  cv->add_option("--stride", ca.stride, "stride")->check(CLI::PositiveNumber);
  cv->add_option("--config", ca.config, "ArrayConfig JSON (default: JACK preset)")->check(CLI::ExistingFile);
  cv->add_option("--report", ca.report, "write SimReport JSON here");
  cv->add_flag("--wide", ca.wide, "wide partial sums between units");
  cv->add_flag("--json", ca.json_out, "print SimReport JSON");

  SimulateArgs sa;
  auto* sm = app.add_subcommand("simulate", "Estimate cycles for a workload");
  sm->add_option("--workload", sa.workload, "WorkloadSpec JSON")->required()->check(CLI::ExistingFile);
  sm->add_option("--config", sa.config, "ArrayConfig JSON (default: JACK preset)")->check(CLI::ExistingFile);
  sm->add_option("--out", sa.out, "write SimReport JSON here");
  sm->add_flag("--json", sa.json_out, "print SimReport JSON");

  VerifyArgs va;
  auto* vf = app.add_subcommand("verify", "Run a property suite");
  vf->add_option("--suite", va.suite, "suite name")->required()->check(CLI::IsMember(suites));
  vf->add_option("--trials", va.trials, "trials per mode")->check(CLI::PositiveNumber);
  vf->add_option("--seed", va.seed, "seed (default: JACKMAC_SEED or 1)");
  vf->add_flag("--json", va.json_out, "print JSON");

  ReportArgs ra;
  auto* rp = app.add_subcommand("report", "Structural report as JSON");
  rp->add_flag("--structure", ra.structure, "shifter and sub-multiplier counts");
  rp->add_option("--grouping", ra.grouping, "grouped or ungrouped");
  rp->add_option("--lanes", ra.lanes, "4 or 16");
  rp->add_option("--mode", ra.mode, "mode, for shifter widths and active submodules");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*q) return cmd_quantize(qa);
    if (*mc) return cmd_mac(ma);
    if (*gm) return cmd_gemm(ga);
    if (*cv) return cmd_conv(ca);
    if (*sm) return cmd_simulate(sa);
    if (*vf) return cmd_verify(va);
    if (*rp) return cmd_report(ra);
  } catch (const std::exception& e) {
    std::cerr << "jackmac: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

#include "jackmac/verify.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "jackmac/csm.hpp"
#include "jackmac/datapath.hpp"
#include "jackmac/oracle.hpp"

namespace jackmac::verify {

namespace {

using datapath::MacOperand;
using datapath::Mode;
using datapath::ModeName;
using Rng = std::mt19937_64;

constexpr std::string_view kSuites[] = {"submul", "fusion", "fp-oracle", "int-oracle", "grouped-eq", "mx-scaling"};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string hex(std::uint32_t v) {
  char buf[12];
  std::snprintf(buf, sizeof buf, "0x%x", v);
  return buf;
}

std::string describe(const Mode& m, const MacOperand& x, const MacOperand& w, const std::optional<ScalarCode>& acc) {
  std::ostringstream os;
  os << "mode=" << datapath::to_string(m.name) << " x=[";
  for (std::size_t i = 0; i < x.lanes.size(); ++i) os << (i ? "," : "") << hex(x.lanes[i].bits);
  os << "] w=[";
  for (std::size_t i = 0; i < w.lanes.size(); ++i) os << (i ? "," : "") << hex(w.lanes[i].bits);
  os << "]";
  if (x.shared_exponent) os << " ex=" << *x.shared_exponent << " ey=" << *w.shared_exponent;
  if (acc) os << " acc=" << hex(acc->bits);
  return os.str();
}

ScalarCode random_code(Rng& rng, const FormatDescriptor& f) {
  std::uniform_int_distribution<std::uint32_t> d(0, f.code_mask());
  for (;;) {
    ScalarCode c(f, d(rng));
    if (is_well_formed(c)) return c;
  }
}

// Random operands with extra weight on the awkward cases: zero lanes, exact
// cancellation between lane pairs, and extreme codes.
std::pair<MacOperand, MacOperand> random_operands(Rng& rng, const Mode& m, int shared_span) {
  const int n = m.is_mx() ? std::uniform_int_distribution<int>(1, m.lanes)(rng) : m.lanes;
  const FormatDescriptor& f = m.element_format;
  MacOperand x, w;
  const int flavour = std::uniform_int_distribution<int>(0, 3)(rng);
  for (int i = 0; i < n; ++i) {
    ScalarCode a = random_code(rng, f), b = random_code(rng, f);
    if (std::uniform_int_distribution<int>(0, 7)(rng) == 0) a = ScalarCode(f, 0);
    if (flavour == 1 && i % 2 == 1) {
      // Cancel the previous lane: same x, negated w.
      a = x.lanes.back();
      b = encode(-decode(w.lanes.back()), f);
    }
    x.lanes.push_back(a);
    w.lanes.push_back(b);
  }
  if (m.is_mx()) {
    std::uniform_int_distribution<int> e(-shared_span, shared_span);
    x.shared_exponent = e(rng);
    w.shared_exponent = e(rng);
  }
  return {x, w};
}

std::optional<ScalarCode> random_acc(Rng& rng, const Mode& m) {
  if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) return std::nullopt;
  return random_code(rng, datapath::output_descriptor(m.output_format));
}

ScalarCode oracle_output(const MacOperand& x, const MacOperand& w, const std::optional<ScalarCode>& acc) {
  return oracle::mac_expected(x.lanes, w.lanes, x.shared_exponent, w.shared_exponent, acc);
}

void record_failure(SuiteResult& r, const std::string& what) {
  if (r.failures++ == 0) r.counterexample = what;
}

// Runs `trials` oracle comparisons for one mode.
void oracle_trials(SuiteResult& r, const Mode& m, std::int64_t trials, Rng& rng) {
  for (std::int64_t t = 0; t < trials; ++t) {
    const auto [x, w] = random_operands(rng, m, 24);
    const auto acc = random_acc(rng, m);
    const auto got = datapath::jack_mac(m, x, w, acc).output;
    const auto want = oracle_output(x, w, acc);
    ++r.cases;
    ++r.per_mode[std::string(datapath::to_string(m.name))];
    if (got.bits != want.bits)
      record_failure(r, describe(m, x, w, acc) + " got=" + hex(got.bits) + " want=" + hex(want.bits));
  }
}

}  // namespace

std::span<const std::string_view> suite_names() { return kSuites; }

SuiteResult submul_suite() {
  Timer timer;
  SuiteResult r;
  r.suite = "submul";
  for (const auto cfg : csm::kAllSubMulConfigs) {
    for (int a = 0; a < 16; ++a) {
      for (int b = 0; b < 16; ++b) {
        // Wide-integer oracle: sign-extend each pattern by hand.
        const long long av = cfg.a_signed && (a & 8) ? a - 16 : a;
        const long long bv = cfg.b_signed && (b & 8) ? b - 16 : b;
        const int got = csm::submul4(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), cfg);
        ++r.cases;
        if (got != av * bv) {
          record_failure(r, "a=" + hex(static_cast<std::uint32_t>(a)) + " b=" + hex(static_cast<std::uint32_t>(b)) +
                                " got=" + std::to_string(got) + " want=" + std::to_string(av * bv));
        }
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult fusion_suite() {
  Timer timer;
  SuiteResult r;
  r.suite = "fusion";
  for (const auto cfg : csm::kAllSubMulConfigs) {
    for (int a = 0; a < 256; ++a) {
      for (int b = 0; b < 256; ++b) {
        const long long av = cfg.a_signed && (a & 0x80) ? a - 256 : a;
        const long long bv = cfg.b_signed && (b & 0x80) ? b - 256 : b;
        const auto sp = csm::split_8x8(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), cfg);
        const int got = csm::fuse8x8(sp.ll, sp.lh, sp.hl, sp.hh, cfg);
        ++r.cases;
        if (got != av * bv) {
          record_failure(r, "a=" + hex(static_cast<std::uint32_t>(a)) + " b=" + hex(static_cast<std::uint32_t>(b)) +
                                " signed=" + std::to_string(cfg.a_signed) + std::to_string(cfg.b_signed) +
                                " got=" + std::to_string(got) + " want=" + std::to_string(av * bv));
        }
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult fp_oracle_suite(std::int64_t trials, std::uint64_t seed, std::span<const std::string_view> modes) {
  Timer timer;
  SuiteResult r;
  r.suite = "fp-oracle";
  r.seed = seed;
  Rng rng(seed);
  for (auto name : datapath::all_modes()) {
    const Mode m = datapath::mode(name);
    if (m.int_output()) continue;
    if (!modes.empty() && std::find(modes.begin(), modes.end(), datapath::to_string(name)) == modes.end()) continue;
    oracle_trials(r, m, trials, rng);
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult int_oracle_suite(std::int64_t trials, std::uint64_t seed) {
  Timer timer;
  SuiteResult r;
  r.suite = "int-oracle";
  r.seed = seed;
  Rng rng(seed);
  for (auto name : {ModeName::kInt8, ModeName::kInt4}) oracle_trials(r, datapath::mode(name), trials, rng);

  // Every code pair on two INT4 lanes, the other lanes zero.
  const Mode m = datapath::mode(ModeName::kInt4);
  const FormatDescriptor& f = m.element_format;
  for (std::uint32_t bits = 0; bits < (1u << 16); ++bits) {
    MacOperand x, w;
    x.lanes.assign(16, ScalarCode(f, 0));
    w.lanes.assign(16, ScalarCode(f, 0));
    x.lanes[0] = ScalarCode(f, bits & 0xF);
    x.lanes[1] = ScalarCode(f, (bits >> 4) & 0xF);
    w.lanes[0] = ScalarCode(f, (bits >> 8) & 0xF);
    w.lanes[1] = ScalarCode(f, (bits >> 12) & 0xF);
    const auto got = datapath::jack_mac(m, x, w).output;
    const auto want = oracle_output(x, w, std::nullopt);
    ++r.cases;
    ++r.per_mode["int4-2lane-exhaustive"];
    if (got.bits != want.bits)
      record_failure(r, describe(m, x, w, std::nullopt) + " got=" + hex(got.bits) + " want=" + hex(want.bits));
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult grouped_eq_suite(std::int64_t trials, std::uint64_t seed) {
  Timer timer;
  SuiteResult r;
  r.suite = "grouped-eq";
  r.seed = seed;
  Rng rng(seed);
  for (auto name : datapath::all_modes()) {
    const Mode m = datapath::mode(name);
    for (std::int64_t t = 0; t < trials; ++t) {
      const auto [x, w] = random_operands(rng, m, 24);
      const auto acc = random_acc(rng, m);
      const auto g = datapath::jack_mac(m, x, w, acc);
      const auto u = datapath::jack_mac_reference(m, x, w, acc);
      ++r.cases;
      ++r.per_mode[std::string(datapath::to_string(name))];
      if (g.output.bits != u.output.bits || !(g.raw_accumulator == u.raw_accumulator) || g.e_max != u.e_max) {
        record_failure(r, describe(m, x, w, acc) + " grouped=" + hex(g.output.bits) + " ungrouped=" +
                              hex(u.output.bits));
      }
    }
  }
  // Structural side: grouping removes three of every four shifters.
  for (int lanes : {4, 16}) {
    const auto g = csm::structure_report(csm::Grouping::kGrouped2D, lanes);
    const auto u = csm::structure_report(csm::Grouping::kUngrouped, lanes);
    ++r.cases;
    if (g.shifter_count * 4 != u.shifter_count || g.sub_multiplier_count != u.sub_multiplier_count)
      record_failure(r, "structure_report lanes=" + std::to_string(lanes) + " shifters grouped=" +
                            std::to_string(g.shifter_count) + " ungrouped=" + std::to_string(u.shifter_count));
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult mx_scaling_suite(std::int64_t trials, std::uint64_t seed) {
  Timer timer;
  SuiteResult r;
  r.suite = "mx-scaling";
  r.seed = seed;
  Rng rng(seed);
  std::normal_distribution<double> g;
  for (auto name : {ModeName::kMxInt8, ModeName::kMxInt4, ModeName::kMxFp8}) {
    const Mode m = datapath::mode(name);
    const FormatDescriptor& f = m.element_format;
    std::int64_t good = 0;
    while (good < trials) {
      // Two quantized Gaussian blocks; one unit invocation on a lane slice.
      std::vector<ExactValue> xv(static_cast<std::size_t>(f.block_size)), wv(xv.size());
      for (auto& v : xv) v = ExactValue::from_double(g(rng));
      for (auto& v : wv) v = ExactValue::from_double(g(rng));
      const BlockCode xb = quantize_block(xv, f), wb = quantize_block(wv, f);
      const auto offset = static_cast<std::size_t>(std::uniform_int_distribution<int>(0, f.block_size / m.lanes - 1)(rng)) *
                          static_cast<std::size_t>(m.lanes);
      MacOperand x = datapath::operand_from_block(xb, offset, static_cast<std::size_t>(m.lanes));
      MacOperand w = datapath::operand_from_block(wb, offset, static_cast<std::size_t>(m.lanes));
      std::uniform_int_distribution<int> e(-6, 6);
      x.shared_exponent = e(rng);
      w.shared_exponent = e(rng);
      const int kx = std::uniform_int_distribution<int>(-4, 4)(rng);
      const int ky = std::uniform_int_distribution<int>(-4, 4)(rng);
      const auto base = datapath::jack_mac(m, x, w);
      MacOperand xs = x, ws = w;
      *xs.shared_exponent += kx;
      *ws.shared_exponent += ky;
      const auto scaled = datapath::jack_mac(m, xs, ws);
      if (base.saturated || base.flushed || scaled.saturated || scaled.flushed) {
        ++r.skipped;
        continue;
      }
      ++good;
      ++r.cases;
      ++r.per_mode[std::string(datapath::to_string(name))];
      const ExactValue b = decode(base.output), s = decode(scaled.output);
      if (!(s == b.ldexp(kx + ky)) || s.negative() != b.negative()) {
        record_failure(r, describe(m, x, w, std::nullopt) + " k=" + std::to_string(kx + ky) + " base=" +
                              hex(base.output.bits) + " scaled=" + hex(scaled.output.bits));
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult run_suite(std::string_view suite, std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (suite == "submul" || suite == "fusion") {
    auto r = suite == "submul" ? submul_suite() : fusion_suite();
    r.seed = seed;  // exhaustive; recorded for the report only
    return r;
  }
  if (suite == "fp-oracle") return fp_oracle_suite(trials, seed);
  if (suite == "int-oracle") return int_oracle_suite(trials, seed);
  if (suite == "grouped-eq") return grouped_eq_suite(trials, seed);
  if (suite == "mx-scaling") return mx_scaling_suite(trials, seed);
  throw std::invalid_argument("unknown suite: " + std::string(suite));
}

void to_json(nlohmann::json& j, const SuiteResult& r) {
  j = nlohmann::json{{"suite", r.suite},
                     {"seed", r.seed},
                     {"cases", r.cases},
                     {"failures", r.failures},
                     {"skipped", r.skipped},
                     {"per_mode", r.per_mode},
                     {"passed", r.passed()},
                     {"counterexample", r.counterexample.empty() ? nlohmann::json(nullptr)
                                                                  : nlohmann::json(r.counterexample)}};
}

}  // namespace jackmac::verify

#pragma once

// Property suites behind `jackmac verify` and the acceptance binary. Every
// suite is deterministic for a given seed.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace jackmac::verify {

struct SuiteResult {
  std::string suite;
  std::uint64_t seed = 0;
  std::int64_t cases = 0;
  std::int64_t failures = 0;
  std::int64_t skipped = 0;                    // mx-scaling: saturating or flushed draws
  std::map<std::string, std::int64_t> per_mode;  // cases per mode, where relevant
  std::string counterexample;                  // first failure, human readable
  double seconds = 0.0;

  bool passed() const { return failures == 0 && cases > 0; }
};

std::span<const std::string_view> suite_names();

// trials is per mode for the randomized suites and ignored by the exhaustive
// ones (submul, fusion). Throws std::invalid_argument for an unknown suite.
SuiteResult run_suite(std::string_view suite, std::int64_t trials, std::uint64_t seed);

SuiteResult submul_suite();
SuiteResult fusion_suite();
// Modes with FP16 output; `modes` empty means all of them.
SuiteResult fp_oracle_suite(std::int64_t trials, std::uint64_t seed, std::span<const std::string_view> modes = {});
// INT8 and INT4 random trials plus exhaustive 2-lane INT4 slices.
SuiteResult int_oracle_suite(std::int64_t trials, std::uint64_t seed);
SuiteResult grouped_eq_suite(std::int64_t trials, std::uint64_t seed);
// `trials` counts non-saturating blocks per MX mode.
SuiteResult mx_scaling_suite(std::int64_t trials, std::uint64_t seed);

void to_json(nlohmann::json& j, const SuiteResult& r);

}  // namespace jackmac::verify

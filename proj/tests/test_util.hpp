#pragma once

// Random code generators shared by the test binaries.

#include <cstdint>
#include <random>
#include <vector>

#include "jackmac/datapath.hpp"
#include "jackmac/formats.hpp"

namespace jackmac::testutil {

using Rng = std::mt19937_64;

// Any well-formed code of fmt (reserved exponent fields are re-drawn).
inline ScalarCode random_code(Rng& rng, const FormatDescriptor& fmt) {
  std::uniform_int_distribution<std::uint32_t> d(0, fmt.code_mask());
  for (;;) {
    ScalarCode c(fmt, d(rng));
    if (is_well_formed(c)) return c;
  }
}

// Codes with a healthy fraction of zeros, so cancellation and zero lanes get
// exercised.
inline ScalarCode random_code_sparse(Rng& rng, const FormatDescriptor& fmt) {
  if (std::uniform_int_distribution<int>(0, 7)(rng) == 0) return ScalarCode(fmt, 0);
  return random_code(rng, fmt);
}

inline datapath::MacOperand random_operand(Rng& rng, const datapath::Mode& m, int lanes = -1) {
  datapath::MacOperand op;
  const int n = lanes < 0 ? m.lanes : lanes;
  for (int i = 0; i < n; ++i) op.lanes.push_back(random_code_sparse(rng, m.element_format));
  if (m.is_mx()) op.shared_exponent = std::uniform_int_distribution<int>(-20, 20)(rng);
  return op;
}

inline ScalarCode random_acc(Rng& rng, const datapath::Mode& m) {
  return random_code(rng, datapath::output_descriptor(m.output_format));
}

}  // namespace jackmac::testutil

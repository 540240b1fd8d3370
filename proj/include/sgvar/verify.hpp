#pragma once

#include <string>
#include <vector>

namespace sgvar {

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0;   // worst observed value, check-specific
  double limit = 0;      // bound it was compared against
  std::string detail;
};

struct VerifyConfig {
  int ambient = 3;
  int level = 4;
  std::uint64_t seed = 42;
  int trials = 200;
  double corrupt_energy_factor = 1.0;  // scales the renormalization base
};

struct VerifyReport {
  VerifyConfig config;
  double sigma = 0;  // Holder exponent for this N
  std::vector<CheckResult> checks;
  bool all_pass = true;
};

// Seeded invariant suites: measure normalization and positivity, the
// sup-norm/Holder inequalities, harmonic-extension energy preservation and
// minimality, the Lipschitz truncation bound, summation by parts,
// polarization, quadratic-form consistency, self-similar integrals, and the
// renormalization-scale self check.
VerifyReport run_verify(const VerifyConfig& cfg);

}  // namespace sgvar

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chainmem::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // worst residual or failure description
};

// Seeded end-to-end property suite: oracle equivalences, closed-form
// regressions, CPTP checks, 2-design consistency, state-invariant checks.
// Identical seeds reproduce identical numbers.
std::vector<CheckResult> run_validate_suite(std::uint64_t seed);

}  // namespace chainmem::cli

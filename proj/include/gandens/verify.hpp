#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gandens {

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct SuiteResult {
  std::string name;
  bool pass = true;
  std::vector<CheckResult> checks;

  void add(const std::string& check, bool ok, double observed, double bound,
           const std::string& detail = "");
};

struct VerifyReport {
  std::uint64_t seed = 0;
  bool pass = true;
  std::vector<SuiteResult> suites;
};

// Property suites at their documented sizes.  Each returns per-check
// observations and bounds; a failed check fails the suite.
SuiteResult divergence_suite(std::uint64_t seed);
SuiteResult perturbation_suite(std::uint64_t seed);
SuiteResult density_suite(std::uint64_t seed);
SuiteResult oracle_suite(std::uint64_t seed);
SuiteResult concentration_suite(std::uint64_t seed);
SuiteResult fisher_suite(std::uint64_t seed);
SuiteResult lower_bound_suite(std::uint64_t seed);

VerifyReport verify_all(std::uint64_t seed);

// Canonical JSON (no wall times), byte-stable across identical runs.
std::string report_to_json(const VerifyReport& report);

}  // namespace gandens

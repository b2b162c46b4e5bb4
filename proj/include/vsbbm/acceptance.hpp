#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vsbbm {

struct CriterionResult {
  std::string id;
  std::string name;
  bool pass = false;
  std::vector<std::string> details;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  unsigned threads = 1;
  std::uint64_t seed = 20'260'101;
};

/// Suite names accepted by run_acceptance, "all" last.
const std::vector<std::string>& acceptance_suites();

/// Runs one suite (or all), printing each criterion's detail lines and a
/// PASS/FAIL line to `out` as it finishes. Unknown names throw
/// std::invalid_argument listing the valid ones.
std::vector<CriterionResult> run_acceptance(const std::string& suite, const AcceptanceOptions& options,
                                            std::ostream& out);

}  // namespace vsbbm

#pragma once

// The acceptance suite: fourteen end-to-end criteria run at their stated
// tolerances. Shared by the acceptance test binary and `--selftest`.

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace wavestab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::set<int> only;  ///< empty runs every criterion
  int threads = 1;
};

/// Runs the selected criteria in order and prints one PASS/FAIL line per
/// criterion to `log` as it completes. An exception inside a criterion is a
/// failure with the message as detail.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log);

/// Number of criteria (ids run from 1 to this value).
int acceptance_criterion_count();

}  // namespace wavestab

// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Optional arguments restrict the run to the listed criterion ids.

#include <cstdlib>
#include <iostream>
#include <string>

#include "wavestab/acceptance.hpp"

int main(int argc, char** argv) {
  wavestab::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) options.only.insert(std::stoi(argv[i]));
  if (const char* t = std::getenv("WAVESTAB_THREADS")) options.threads = std::max(1, std::atoi(t));
  const auto results = wavestab::run_acceptance(options, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (results.size() - failed) << " of " << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mmdq::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  bool advisory = false; // advisory criteria warn instead of failing the suite
  std::string detail;
};

struct Report {
  std::vector<CriterionResult> results;
  bool all_passed() const {
    for (const auto& r : results)
      if (!r.passed && !r.advisory) return false;
    return true;
  }
};

struct Options {
  bool quick = false; // skip the two desk-scale bound sweeps and the timing run
};

// Runs every criterion, printing one pass/fail line per criterion to `log`.
Report run_all(const Options& opt, std::ostream& log);

} // namespace mmdq::acceptance

#pragma once

#include "mmdq/config.hpp"
#include "mmdq/metrics.hpp"

#include <iosfwd>
#include <optional>

namespace mmdq {

struct ExecutedRun {
  RunConfig cfg; // kernel.theta resolved
  CandidateSet candidates;
  RunResult result;
  std::optional<BoundMethod> bound_method;
  BoundSpec bound;
  bool has_bound = false;
  Mc2Interval mc2;
  bool has_mc2 = false;
  double candidates_s = 0.0, mc2_s = 0.0, algorithm_s = 0.0, total_s = 0.0;
  json manifest;
};

struct ExecutedBaseline {
  RunConfig cfg;
  BaselineStats stats;
  double total_s = 0.0;
  json manifest;
};

// rate-curve tag implied by the configured method/step/variant; empty for
// custom step sequences and the iid baseline.
std::optional<BoundMethod> bound_method_for(const RunConfig& cfg);

ExecutedRun execute_run(const RunConfig& cfg);
ExecutedBaseline execute_baseline(const RunConfig& cfg);

void write_trace_csv(std::ostream& os, const ExecutedRun& run);
void write_baseline_csv(std::ostream& os, const ExecutedBaseline& run);
void write_compare_csv(std::ostream& os, const std::vector<ExecutedRun>& runs,
                       const std::vector<ExecutedBaseline>& baselines);

// Runs a config end to end, writing the trace CSV and the manifest JSON
// next to it. Returns the executed run for further inspection.
ExecutedRun run_to_files(const RunConfig& cfg);
ExecutedBaseline baseline_to_files(const RunConfig& cfg);

// compare: all configs must share kernel/target/candidates sections
void check_shared_sections(const std::vector<RunConfig>& cfgs);

} // namespace mmdq

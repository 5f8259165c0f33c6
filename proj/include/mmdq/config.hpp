#pragma once

#include "mmdq/algorithms.hpp"
#include "mmdq/candidates.hpp"
#include "mmdq/kernel.hpp"
#include "mmdq/target.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mmdq {

using json = nlohmann::json;

enum class Method {
  KhPredefined,
  KhOptimal,
  KhIwo,
  GmPredefined,
  GmOptimal,
  Sbq,
  IidBaseline,
};

const char* to_string(Method m);
Method method_from_string(const std::string& s);

// Bandwidth rule: pick theta so the kernel value is 1/2 at the (1/n_max)-
// quantile of squared distances within a random sample of the pool.
double theta_heuristic(const Mat& candidate_points, int n_max,
                       Eigen::Index sample_size, std::uint64_t seed);

struct RunConfig {
  json raw; // resolved copy, sufficient to reproduce the run

  KernelSpec kernel;
  bool theta_is_heuristic = false;
  int theta_n_max = 0;             // defaults to n_max
  Eigen::Index theta_sample = 1000;
  std::uint64_t theta_seed = 0;

  TargetMeasure target = TargetMeasure::uniform_box(Vec::Ones(1) * 0.0, Vec::Ones(1));
  CandidateSource source;
  Eigen::Index candidate_count = 0;

  Method method = Method::KhPredefined;
  StepRule step_rule = StepRule::InvK;
  std::vector<double> custom_steps;
  IwoVariant iwo_variant = IwoVariant::Unconstrained;
  SbqVariant sbq_variant = SbqVariant::Unconstrained;

  int n_max = 100;
  int audit_every = 10;
  bool direct_mmd2 = true;
  int mc2_budget = 2000;
  bool bound_check = true;
  std::uint64_t seed = 0;    // baseline repetitions
  int repetitions = 100;     // baseline mode
  std::vector<int> baseline_ns;

  std::string trace_path;    // empty: stdout
  std::string manifest_path; // empty: derived from trace_path
};

RunConfig parse_run_config(const json& j);
RunConfig load_run_config(const std::string& path);

} // namespace mmdq

#include "mmdq/runner.hpp"
#include "mmdq/version.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace mmdq {

namespace {

using Clock = std::chrono::steady_clock;

double lap(Clock::time_point& mark) {
  const auto now = Clock::now();
  const double s = std::chrono::duration<double>(now - mark).count();
  mark = now;
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

std::optional<BoundMethod> bound_method_for(const RunConfig& cfg) {
  switch (cfg.method) {
  case Method::KhPredefined:
    if (cfg.step_rule == StepRule::InvK) return BoundMethod::KhInvK;
    if (cfg.step_rule == StepRule::TwoOverKPlus1) return BoundMethod::KhTwoOverKPlus1;
    return std::nullopt; // custom sequences carry no bound curve
  case Method::KhOptimal:
    return BoundMethod::KhOptimal;
  case Method::KhIwo:
    switch (cfg.iwo_variant) {
    case IwoVariant::Simplex: return BoundMethod::IwoSimplex;
    case IwoVariant::SumOne: return BoundMethod::IwoSumOne;
    case IwoVariant::Unconstrained: return BoundMethod::IwoUnconstrained;
    }
    return std::nullopt;
  case Method::GmPredefined:
    if (cfg.step_rule == StepRule::InvK) return BoundMethod::GmInvK;
    if (cfg.step_rule == StepRule::TwoOverKPlus1) return BoundMethod::GmTwoOverKPlus1;
    return std::nullopt;
  case Method::GmOptimal:
    return BoundMethod::GmOptimal;
  case Method::Sbq:
    switch (cfg.sbq_variant) {
    case SbqVariant::Unconstrained: return BoundMethod::SbqUnconstrained;
    case SbqVariant::SumOne: return BoundMethod::SbqSumOne;
    case SbqVariant::CoordDescent: return BoundMethod::SbqCoordDescent;
    }
    return std::nullopt;
  case Method::IidBaseline:
    return std::nullopt;
  }
  return std::nullopt;
}

ExecutedRun execute_run(const RunConfig& cfg_in) {
  ExecutedRun out;
  out.cfg = cfg_in;
  RunConfig& cfg = out.cfg;
  if (cfg.method == Method::IidBaseline)
    throw config_error("iid_baseline configs go through execute_baseline");

  auto t_start = Clock::now();
  auto mark = t_start;

  Mat pts = generate_candidate_points(cfg.source, cfg.candidate_count, cfg.target);
  if (cfg.theta_is_heuristic) {
    const double theta =
        theta_heuristic(pts, cfg.theta_n_max, cfg.theta_sample, cfg.theta_seed);
    cfg.kernel = KernelSpec(cfg.kernel.family, theta);
    cfg.raw["kernel"]["theta"] = theta;
    cfg.theta_is_heuristic = false;
  }
  {
    CandidateSet cs;
    cs.points = std::move(pts);
    fill_candidate_caches(cs, cfg.target, cfg.kernel);
    out.candidates = std::move(cs);
  }
  out.candidates_s = lap(mark);

  const bool resampling = cfg.source.resample_each_iteration;
  out.bound_method = bound_method_for(cfg);
  if (cfg.bound_check && out.bound_method && !resampling) {
    out.mc2 = certified_mc2(out.candidates, cfg.kernel, cfg.target, cfg.mc2_budget);
    out.has_mc2 = true;
    out.bound = make_bound_spec(*out.bound_method, out.candidates, cfg.kernel,
                                cfg.target.moments(cfg.kernel), out.mc2);
    out.has_bound = true;
  }
  out.mc2_s = lap(mark);

  AlgoOptions opt;
  opt.n_max = cfg.n_max;
  opt.audit_every = cfg.audit_every;
  opt.direct_mmd2_every_iteration = cfg.direct_mmd2;
  opt.custom_steps = cfg.custom_steps;
  if (resampling) {
    opt.resample_source = &cfg.source;
    opt.resample_c = cfg.candidate_count;
  }

  switch (cfg.method) {
  case Method::KhPredefined:
    out.result = kh_predefined(out.candidates, cfg.target, cfg.kernel, cfg.step_rule, opt);
    break;
  case Method::KhOptimal:
    out.result = kh_optimal(out.candidates, cfg.target, cfg.kernel, opt);
    break;
  case Method::KhIwo:
    out.result = kh_iwo(out.candidates, cfg.target, cfg.kernel, cfg.iwo_variant, opt);
    break;
  case Method::GmPredefined:
    out.result = gm_predefined(out.candidates, cfg.target, cfg.kernel, cfg.step_rule, opt);
    break;
  case Method::GmOptimal:
    out.result = gm_optimal(out.candidates, cfg.target, cfg.kernel, opt);
    break;
  case Method::Sbq:
    out.result = sbq(out.candidates, cfg.target, cfg.kernel, cfg.sbq_variant, opt);
    break;
  case Method::IidBaseline:
    break;
  }
  out.algorithm_s = lap(mark);
  if (out.has_bound) {
    for (auto& rec : out.result.trace.records) {
      const double term = bound_term(out.bound, rec.k);
      rec.bound_upper = out.mc2.hi + term;
      rec.bound_lower = out.mc2.lo + term;
    }
  }
  out.total_s = std::chrono::duration<double>(Clock::now() - t_start).count();

  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = cfg.raw;
  manifest["method"] = to_string(cfg.method);
  manifest["timing"] = {{"candidates_s", out.candidates_s},
                        {"mc2_s", out.mc2_s},
                        {"algorithm_s", out.algorithm_s},
                        {"total_s", out.total_s}};
  if (!out.result.trace.records.empty()) {
    const auto& last = out.result.trace.records.back();
    manifest["final"] = {{"n", last.k},
                         {"support_size", last.support_size},
                         {"mmd2", last.mmd2},
                         {"mmd", std::sqrt(std::max(0.0, last.mmd2))}};
  }
  if (out.has_mc2)
    manifest["mc2"] = {{"lo", out.mc2.lo},
                       {"hi", out.mc2.hi},
                       {"gap", out.mc2.gap},
                       {"iterations", out.mc2.iterations}};
  else
    manifest["mc2"] = nullptr;
  manifest["stop_reason"] = out.result.trace.stop_reason;
  manifest["beta_floor_skips"] = out.result.trace.beta_floor_skips;
  manifest["qp_cap_hits"] = out.result.trace.qp_cap_hits;
  manifest["refactorisations"] = out.result.trace.refactorisations;
  manifest["max_audit_rel_err"] = out.result.trace.max_audit_rel_err;
  out.manifest = std::move(manifest);
  return out;
}

ExecutedBaseline execute_baseline(const RunConfig& cfg_in) {
  ExecutedBaseline out;
  out.cfg = cfg_in;
  RunConfig& cfg = out.cfg;
  const auto t0 = Clock::now();
  if (cfg.theta_is_heuristic) {
    Mat pts = generate_candidate_points(cfg.source, cfg.candidate_count, cfg.target);
    const double theta =
        theta_heuristic(pts, cfg.theta_n_max, cfg.theta_sample, cfg.theta_seed);
    cfg.kernel = KernelSpec(cfg.kernel.family, theta);
    cfg.raw["kernel"]["theta"] = theta;
    cfg.theta_is_heuristic = false;
  }
  std::vector<int> ns = cfg.baseline_ns;
  if (ns.empty())
    for (int n = 1; n <= cfg.n_max; ++n) ns.push_back(n);
  out.stats = iid_baseline(cfg.target, cfg.kernel, ns, cfg.repetitions, cfg.seed);
  out.total_s = std::chrono::duration<double>(Clock::now() - t0).count();

  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = cfg.raw;
  manifest["method"] = "iid_baseline";
  manifest["repetitions"] = cfg.repetitions;
  manifest["theory_m2"] = out.stats.theory_m2;
  manifest["timing"] = {{"total_s", out.total_s}};
  out.manifest = std::move(manifest);
  return out;
}

void write_trace_csv(std::ostream& os, const ExecutedRun& run) {
  os << "n,support_size,mmd2,mmd,bound_upper,bound_lower,alpha,chosen_index,cum_time_s\n";
  for (const auto& r : run.result.trace.records) {
    os << r.k << ',' << r.support_size << ',' << fmt(r.mmd2) << ','
       << fmt(std::sqrt(std::max(0.0, r.mmd2))) << ',' << fmt(r.bound_upper) << ','
       << fmt(r.bound_lower) << ',' << fmt(r.alpha) << ',' << r.chosen_index << ','
       << fmt(r.cum_time_s) << '\n';
  }
}

void write_baseline_csv(std::ostream& os, const ExecutedBaseline& run) {
  os << "n,mean_mmd2,sd_mmd2,theory_mean\n";
  for (std::size_t i = 0; i < run.stats.ns.size(); ++i) {
    const double n = static_cast<double>(run.stats.ns[i]);
    os << run.stats.ns[i] << ',' << fmt(run.stats.mean_mmd2[static_cast<Eigen::Index>(i)])
       << ',' << fmt(run.stats.sd_mmd2[static_cast<Eigen::Index>(i)]) << ','
       << fmt(run.stats.theory_m2 / n) << '\n';
  }
}

void write_compare_csv(std::ostream& os, const std::vector<ExecutedRun>& runs,
                       const std::vector<ExecutedBaseline>& baselines) {
  os << "method,n,mmd2,mmd,bound_upper,bound_lower,sd_mmd2\n";
  for (const auto& run : runs) {
    std::string name = to_string(run.cfg.method);
    if (run.bound_method) name = to_string(*run.bound_method);
    for (const auto& r : run.result.trace.records) {
      os << name << ',' << r.k << ',' << fmt(r.mmd2) << ','
         << fmt(std::sqrt(std::max(0.0, r.mmd2))) << ',' << fmt(r.bound_upper) << ','
         << fmt(r.bound_lower) << ",nan\n";
    }
  }
  for (const auto& b : baselines) {
    for (std::size_t i = 0; i < b.stats.ns.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      os << "iid_baseline," << b.stats.ns[i] << ',' << fmt(b.stats.mean_mmd2[idx])
         << ',' << fmt(std::sqrt(std::max(0.0, b.stats.mean_mmd2[idx]))) << ",nan,nan,"
         << fmt(b.stats.sd_mmd2[idx]) << '\n';
    }
  }
}

namespace {

std::string manifest_path_for(const RunConfig& cfg) {
  if (!cfg.manifest_path.empty()) return cfg.manifest_path;
  if (cfg.trace_path.empty()) return std::string();
  std::string p = cfg.trace_path;
  const auto dot = p.rfind(".csv");
  if (dot != std::string::npos && dot == p.size() - 4) p.resize(dot);
  return p + ".manifest.json";
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("cannot write output file: " + path);
  os << contents;
}

} // namespace

ExecutedRun run_to_files(const RunConfig& cfg) {
  ExecutedRun run = execute_run(cfg);
  std::ostringstream csv;
  write_trace_csv(csv, run);
  if (run.cfg.trace_path.empty()) {
    std::fputs(csv.str().c_str(), stdout);
  } else {
    write_file(run.cfg.trace_path, csv.str());
    run.manifest["trace"] = run.cfg.trace_path;
  }
  const std::string mpath = manifest_path_for(run.cfg);
  if (!mpath.empty()) write_file(mpath, run.manifest.dump(2) + "\n");
  return run;
}

ExecutedBaseline baseline_to_files(const RunConfig& cfg) {
  ExecutedBaseline run = execute_baseline(cfg);
  std::ostringstream csv;
  write_baseline_csv(csv, run);
  if (run.cfg.trace_path.empty()) {
    std::fputs(csv.str().c_str(), stdout);
  } else {
    write_file(run.cfg.trace_path, csv.str());
    run.manifest["trace"] = run.cfg.trace_path;
  }
  const std::string mpath = manifest_path_for(run.cfg);
  if (!mpath.empty()) write_file(mpath, run.manifest.dump(2) + "\n");
  return run;
}

void check_shared_sections(const std::vector<RunConfig>& cfgs) {
  if (cfgs.size() < 2) return;
  for (std::size_t i = 1; i < cfgs.size(); ++i) {
    for (const char* key : {"kernel", "target", "candidates"}) {
      if (cfgs[i].raw.value(key, json()) != cfgs[0].raw.value(key, json()))
        throw config_error(std::string("compare: configs disagree on '") + key + "'");
    }
  }
}

} // namespace mmdq

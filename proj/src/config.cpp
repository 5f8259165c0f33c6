#include "mmdq/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace mmdq {

const char* to_string(Method m) {
  switch (m) {
  case Method::KhPredefined: return "kh_predefined";
  case Method::KhOptimal: return "kh_optimal";
  case Method::KhIwo: return "kh_iwo";
  case Method::GmPredefined: return "gm_predefined";
  case Method::GmOptimal: return "gm_optimal";
  case Method::Sbq: return "sbq";
  case Method::IidBaseline: return "iid_baseline";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "kh_predefined") return Method::KhPredefined;
  if (s == "kh_optimal") return Method::KhOptimal;
  if (s == "kh_iwo") return Method::KhIwo;
  if (s == "gm_predefined") return Method::GmPredefined;
  if (s == "gm_optimal") return Method::GmOptimal;
  if (s == "sbq") return Method::Sbq;
  if (s == "iid_baseline") return Method::IidBaseline;
  throw config_error("unknown method: " + s);
}

double theta_heuristic(const Mat& candidate_points, int n_max,
                       Eigen::Index sample_size, std::uint64_t seed) {
  const Eigen::Index c = candidate_points.rows();
  if (c < 2) throw config_error("theta heuristic needs at least two points");
  if (n_max < 1) throw config_error("theta heuristic: n_max must be positive");
  const Eigen::Index m = std::min(sample_size, c);

  // Fisher-Yates prefix for a reproducible sample without replacement
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < c; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, c - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }

  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      d2.push_back((candidate_points.row(idx[static_cast<std::size_t>(i)]) -
                    candidate_points.row(idx[static_cast<std::size_t>(j)]))
                       .squaredNorm());
  std::sort(d2.begin(), d2.end());

  // nearest-rank (1/n_max)-quantile
  const double q = 1.0 / static_cast<double>(n_max);
  std::size_t pos = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(d2.size())));
  pos = std::min(std::max<std::size_t>(pos, 1), d2.size()) - 1;
  while (pos < d2.size() && d2[pos] <= 0.0) ++pos;
  if (pos >= d2.size())
    throw config_error("theta heuristic: all sampled pairs coincide");
  return std::log(2.0) / d2[pos];
}

namespace {

Vec parse_vec(const json& j) {
  Vec v(j.size());
  Eigen::Index i = 0;
  for (const auto& x : j) v[i++] = x.get<double>();
  return v;
}

Mat parse_mat(const json& j) {
  if (j.empty()) return Mat(0, 0);
  Mat m(j.size(), j.front().size());
  Eigen::Index r = 0;
  for (const auto& row : j) {
    if (static_cast<Eigen::Index>(row.size()) != m.cols())
      throw config_error("ragged matrix in config");
    Eigen::Index cidx = 0;
    for (const auto& x : row) m(r, cidx++) = x.get<double>();
    ++r;
  }
  return m;
}

TargetMeasure parse_target(const json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "uniform_box")
    return TargetMeasure::uniform_box(parse_vec(j.at("lower")), parse_vec(j.at("upper")));
  if (variant == "gaussian_mixture")
    return TargetMeasure::gaussian_mixture(parse_vec(j.at("betas")),
                                           parse_mat(j.at("means")),
                                           parse_vec(j.at("sigmas")));
  if (variant == "empirical")
    return TargetMeasure::empirical(load_points_csv(j.at("file").get<std::string>()));
  throw config_error("unknown target variant: " + variant);
}

CandidateSource parse_source(const json& j) {
  CandidateSource src;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "file") {
    src.mode = CandidateSource::Mode::File;
    src.path = j.at("file").get<std::string>();
  } else if (mode == "uniform_rng") {
    src.mode = CandidateSource::Mode::UniformRng;
  } else if (mode == "halton") {
    src.mode = CandidateSource::Mode::Halton;
  } else if (mode == "iid_target") {
    src.mode = CandidateSource::Mode::IidTarget;
  } else {
    throw config_error("unknown candidate mode: " + mode);
  }
  src.seed = j.value("seed", 0);
  src.offset = j.value("offset", 1);
  if (j.contains("box_lower")) src.box_lower = parse_vec(j.at("box_lower"));
  if (j.contains("box_upper")) src.box_upper = parse_vec(j.at("box_upper"));
  src.resample_each_iteration = j.value("resample", false);
  return src;
}

} // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  cfg.raw = j;

  const json& jk = j.at("kernel");
  const KernelFamily family = kernel_family_from_string(jk.at("family").get<std::string>());
  const json& jtheta = jk.at("theta");
  if (jtheta.is_string()) {
    if (jtheta.get<std::string>() != "heuristic")
      throw config_error("kernel theta must be a number or \"heuristic\"");
    cfg.theta_is_heuristic = true;
    cfg.kernel = KernelSpec(family, 1.0); // placeholder until resolved
  } else {
    cfg.kernel = KernelSpec(family, jtheta.get<double>());
  }

  cfg.target = parse_target(j.at("target"));

  const json& jc = j.at("candidates");
  cfg.source = parse_source(jc);
  cfg.candidate_count = jc.value("C", 0);
  if (cfg.source.mode != CandidateSource::Mode::File && cfg.candidate_count < 1)
    throw config_error("candidates.C must be at least 1");

  cfg.method = method_from_string(j.at("method").get<std::string>());
  if (j.contains("step_rule")) {
    const json& jr = j.at("step_rule");
    if (jr.is_array()) {
      cfg.step_rule = StepRule::Custom;
      for (const auto& a : jr) cfg.custom_steps.push_back(a.get<double>());
    } else {
      const std::string r = jr.get<std::string>();
      if (r == "inv_k") cfg.step_rule = StepRule::InvK;
      else if (r == "two_over_kplus1") cfg.step_rule = StepRule::TwoOverKPlus1;
      else throw config_error("unknown step rule: " + r);
    }
  }
  if (j.contains("variant")) {
    const std::string v = j.at("variant").get<std::string>();
    if (cfg.method == Method::KhIwo) {
      if (v == "i" || v == "simplex") cfg.iwo_variant = IwoVariant::Simplex;
      else if (v == "ii" || v == "sum_one") cfg.iwo_variant = IwoVariant::SumOne;
      else if (v == "iii" || v == "unconstrained") cfg.iwo_variant = IwoVariant::Unconstrained;
      else throw config_error("unknown IWO variant: " + v);
    } else if (cfg.method == Method::Sbq) {
      if (v == "unconstrained") cfg.sbq_variant = SbqVariant::Unconstrained;
      else if (v == "sum_one") cfg.sbq_variant = SbqVariant::SumOne;
      else if (v == "coord_descent") cfg.sbq_variant = SbqVariant::CoordDescent;
      else throw config_error("unknown SBQ variant: " + v);
    } else {
      throw config_error("'variant' only applies to kh_iwo and sbq");
    }
  } else if (cfg.method == Method::KhIwo || cfg.method == Method::Sbq) {
    throw config_error("method requires a 'variant' field");
  }

  cfg.n_max = j.value("n_max", 100);
  if (cfg.n_max < 1) throw config_error("n_max must be at least 1");
  cfg.audit_every = j.value("audit_every", 10);
  cfg.direct_mmd2 = j.value("direct_mmd2", true);
  cfg.mc2_budget = j.value("mc2_budget", 2000);
  cfg.bound_check = j.value("bound_check", true);
  cfg.seed = j.value("seed", 0);
  cfg.repetitions = j.value("reps", 100);
  if (j.contains("baseline_ns"))
    for (const auto& n : j.at("baseline_ns")) cfg.baseline_ns.push_back(n.get<int>());
  cfg.trace_path = j.value("trace", std::string());
  cfg.manifest_path = j.value("manifest", std::string());

  if (j.contains("theta_rule")) {
    const json& jt = j.at("theta_rule");
    cfg.theta_n_max = jt.value("n_max", 0);
    cfg.theta_sample = jt.value("sample", 1000);
    cfg.theta_seed = jt.value("seed", 0);
  }
  if (cfg.theta_n_max == 0) cfg.theta_n_max = cfg.n_max;

  const bool one_step = cfg.method == Method::KhPredefined ||
                        cfg.method == Method::KhOptimal ||
                        cfg.method == Method::GmPredefined ||
                        cfg.method == Method::GmOptimal;
  if (cfg.source.resample_each_iteration && !one_step)
    throw config_error("candidates.resample is valid only for the one-step-ahead "
                       "methods (kh_predefined, kh_optimal, gm_predefined, gm_optimal)");
  if (cfg.source.resample_each_iteration &&
      cfg.source.mode != CandidateSource::Mode::IidTarget)
    throw config_error("candidates.resample requires mode iid_target");
  if (cfg.method == Method::IidBaseline && !cfg.target.samplable())
    throw config_error("iid_baseline requires a samplable target");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error(path + ": " + e.what());
  }
  return parse_run_config(j);
}

} // namespace mmdq

#include "mmdq/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mmdq {

namespace {

constexpr double kAlphaZeroTol = 1e-14;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double step_size(StepRule rule, const AlgoOptions& opt, int k) {
  switch (rule) {
  case StepRule::InvK: return 1.0 / static_cast<double>(k);
  case StepRule::TwoOverKPlus1: return 2.0 / static_cast<double>(k + 1);
  case StepRule::Custom: {
    if (static_cast<std::size_t>(k) > opt.custom_steps.size())
      throw config_error("custom step sequence shorter than n_max");
    return opt.custom_steps[static_cast<std::size_t>(k - 1)];
  }
  }
  throw config_error("unknown step rule");
}

void validate_steps(StepRule rule, const AlgoOptions& opt) {
  if (rule != StepRule::Custom) return;
  if (opt.custom_steps.empty() || std::abs(opt.custom_steps[0] - 1.0) > 0.0)
    throw config_error("custom step sequence must start with alpha_1 = 1");
  for (double a : opt.custom_steps)
    if (!(a >= 0.0 && a <= 1.0))
      throw config_error("custom step sizes must lie in [0,1]");
}

Vec kernel_row(const CandidateSet& cs, const KernelSpec& k, PointRef x) {
  Vec row(cs.size());
  for (Eigen::Index c = 0; c < cs.size(); ++c)
    row[c] = kernel_eval(k, x, cs.points.row(c));
  return row;
}

// Merged support with an independently assembled plain-kernel Gram; gives
// the per-iteration "direct" MMD^2 that cross-checks the running recursions.
class SupportTracker {
public:
  SupportTracker(const KernelSpec& kernel, double energy, Eigen::Index dim)
      : kernel_(kernel), energy_(energy), cols_(dim) {
    pts_.resize(16, dim);
    gram_.resize(16, 16);
    pot_.resize(16);
    w_.resize(16);
    cap_ = 16;
  }

  // key >= 0 merges repeated selections of the same candidate; key < 0
  // always opens a new slot (resampled pools)
  Eigen::Index touch(PointRef x, Eigen::Index key, double potential) {
    if (key >= 0) {
      auto it = slot_of_.find(key);
      if (it != slot_of_.end()) return it->second;
    }
    const Eigen::Index slot = n_;
    reserve(n_ + 1);
    pts_.row(slot) = x;
    pot_[slot] = potential;
    gram_(slot, slot) = kernel_diag(kernel_, x);
    for (Eigen::Index i = 0; i < slot; ++i) {
      const double v = kernel_eval(kernel_, pts_.row(i), x);
      gram_(i, slot) = gram_(slot, i) = v;
    }
    w_[slot] = 0.0;
    ++n_;
    if (key >= 0) slot_of_.emplace(key, slot);
    return slot;
  }

  void scale_weights(double f) { w_.head(n_) *= f; }
  void add_weight(Eigen::Index slot, double delta) { w_[slot] += delta; }
  void set_weights(const Vec& w) { w_.head(n_) = w; }

  double direct_mmd2() const {
    const auto w = w_.head(n_);
    return w.dot(gram_.topLeftCorner(n_, n_) * w) - 2.0 * w.dot(pot_.head(n_)) +
           energy_;
  }
  double wkw() const {
    const auto w = w_.head(n_);
    return w.dot(gram_.topLeftCorner(n_, n_) * w);
  }
  double wp() const { return w_.head(n_).dot(pot_.head(n_)); }

  Eigen::Index size() const { return n_; }
  Vec weights() const { return w_.head(n_); }
  Mat points() const { return pts_.topRows(n_); }

  DiscreteMeasure measure(const std::vector<Eigen::Index>& slot_keys) const {
    DiscreteMeasure m;
    m.support = pts_.topRows(n_);
    m.weights = w_.head(n_);
    m.candidate_indices = slot_keys;
    return m;
  }

private:
  void reserve(Eigen::Index n) {
    if (n <= cap_) return;
    Eigen::Index cap = cap_;
    while (cap < n) cap *= 2;
    pts_.conservativeResize(cap, cols_);
    gram_.conservativeResize(cap, cap);
    pot_.conservativeResize(cap);
    w_.conservativeResize(cap);
    cap_ = cap;
  }

  KernelSpec kernel_;
  double energy_;
  std::unordered_map<Eigen::Index, Eigen::Index> slot_of_;
  Mat pts_, gram_;
  Vec pot_, w_;
  Eigen::Index n_ = 0, cap_ = 0, cols_ = 0;
};

void check_direct_vs_recursive(IterationRecord& rec, Trace& trace) {
  const double scale = std::max(1.0, std::abs(rec.mmd2));
  const double err = std::abs(rec.mmd2 - rec.mmd2_recursive) / scale;
  trace.max_audit_rel_err = std::max(trace.max_audit_rel_err, err);
  if (err > 1e-8)
    throw std::runtime_error("iteration " + std::to_string(rec.k) +
                             ": recursive MMD^2 " +
                             std::to_string(rec.mmd2_recursive) +
                             " disagrees with direct value " +
                             std::to_string(rec.mmd2));
}

// fresh potential of the current measure at every pool point
Vec potential_of_measure(const SupportTracker& sup, const CandidateSet& cs,
                         const KernelSpec& k) {
  Vec s = Vec::Zero(cs.size());
  const Mat pts = sup.points();
  const Vec w = sup.weights();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (w[i] == 0.0) continue;
    for (Eigen::Index c = 0; c < cs.size(); ++c)
      s[c] += w[i] * kernel_eval(k, pts.row(i), cs.points.row(c));
  }
  return s;
}

void audit_state(int k, const SupportTracker& sup, const CandidateSet& cs,
                 const KernelSpec& kernel, const Vec& s_running, double q_running,
                 double r_running, Trace& trace) {
  const Vec s_fresh = potential_of_measure(sup, cs, kernel);
  const double s_scale = std::max(1.0, s_fresh.cwiseAbs().maxCoeff());
  const double s_err = (s_fresh - s_running).cwiseAbs().maxCoeff() / s_scale;
  const double q_fresh = sup.wkw();
  const double r_fresh = sup.wp();
  const double q_err = std::abs(q_fresh - q_running) / std::max(1.0, std::abs(q_fresh));
  const double r_err = std::abs(r_fresh - r_running) / std::max(1.0, std::abs(r_fresh));
  const double worst = std::max({s_err, q_err, r_err});
  trace.max_audit_rel_err = std::max(trace.max_audit_rel_err, worst);
  if (worst > 1e-8)
    throw std::runtime_error("iteration " + std::to_string(k) +
                             ": running S/Q/R state drifted from direct "
                             "recomputation (rel err " +
                             std::to_string(worst) + ")");
}

struct PoolContext {
  const CandidateSet* fixed = nullptr;
  const AlgoOptions* opt = nullptr;
  const TargetMeasure* target = nullptr;
  const KernelSpec* kernel = nullptr;
  CandidateSet scratch;

  bool resampling() const { return opt->resample_source != nullptr; }

  const CandidateSet& at(int k) {
    if (!resampling()) return *fixed;
    scratch = resample_candidates(*opt->resample_source,
                                  static_cast<std::uint64_t>(k),
                                  opt->resample_c, *target, *kernel);
    return scratch;
  }
};

void require_nonempty(const CandidateSet& cs) {
  if (cs.size() == 0) throw config_error("empty candidate set");
}

enum class OneStep { KhPredefined, KhOptimal, GmPredefined, GmOptimal };

// The four one-step-ahead constructions share their state recursions
// (S, Q, R) and the convex-combination measure update; they differ in the
// selection score and the step size.
RunResult run_one_step_ahead(OneStep which, const CandidateSet& cs,
                             const TargetMeasure& t, const KernelSpec& kernel,
                             StepRule rule, const AlgoOptions& opt) {
  require_nonempty(cs);
  validate_steps(rule, opt);
  const auto t0 = Clock::now();
  const double energy = cs.target_energy;

  RunResult out;
  Trace& trace = out.trace;
  SupportTracker sup(kernel, energy, cs.dim());
  std::vector<Eigen::Index> slot_keys;

  PoolContext pool{&cs, &opt, &t, &kernel, {}};
  const bool resampling = pool.resampling();

  const CandidateSet* cur = &pool.at(1);
  Vec s = Vec::Zero(cur->size());
  double q = 0.0, r = 0.0;
  // per-candidate state for the optimal-step greedy variant
  Vec acand, bcand, alphacand;
  const bool gm_opt = which == OneStep::GmOptimal;
  if (gm_opt) {
    acand = cur->pot;
    bcand = cur->diag;
    alphacand = Vec::Ones(cur->size());
  }

  for (int k = 1; k <= opt.n_max; ++k) {
    if (resampling && k > 1) {
      cur = &pool.at(k);
      s = potential_of_measure(sup, *cur, kernel);
      if (gm_opt) {
        acand = Vec::Constant(cur->size(), q - r) + cur->pot - s;
        bcand = Vec::Constant(cur->size(), q) - 2.0 * s + cur->diag;
        alphacand.resize(cur->size());
        for (Eigen::Index j = 0; j < cur->size(); ++j)
          alphacand[j] = bcand[j] > kAlphaZeroTol
                             ? std::clamp(acand[j] / bcand[j], 0.0, 1.0)
                             : 0.0;
        if (alphacand.cwiseAbs().maxCoeff() <= kAlphaZeroTol) {
          trace.stop_reason = "all_alpha_zero";
          break;
        }
      }
    }
    const Eigen::Index c = cur->size();

    // selection
    Eigen::Index j = 0;
    double alpha = 0.0;
    switch (which) {
    case OneStep::KhPredefined:
    case OneStep::KhOptimal: {
      double best = s[0] - cur->pot[0];
      for (Eigen::Index i = 1; i < c; ++i) {
        const double v = s[i] - cur->pot[i];
        if (v < best) { best = v; j = i; }
      }
      break;
    }
    case OneStep::GmPredefined: {
      alpha = step_size(rule, opt, k);
      double best = 2.0 * (1.0 - alpha) * s[0] + alpha * cur->diag[0] -
                    2.0 * cur->pot[0];
      for (Eigen::Index i = 1; i < c; ++i) {
        const double v =
            2.0 * (1.0 - alpha) * s[i] + alpha * cur->diag[i] - 2.0 * cur->pot[i];
        if (v < best) { best = v; j = i; }
      }
      break;
    }
    case OneStep::GmOptimal: {
      double best = alphacand[0] * alphacand[0] * bcand[0] -
                    2.0 * alphacand[0] * acand[0];
      for (Eigen::Index i = 1; i < c; ++i) {
        const double v =
            alphacand[i] * alphacand[i] * bcand[i] - 2.0 * alphacand[i] * acand[i];
        if (v < best) { best = v; j = i; }
      }
      alpha = alphacand[j];
      break;
    }
    }

    const double sxk = s[j];
    const double kxx = cur->diag[j];
    const double pxk = cur->pot[j];

    if (which == OneStep::KhPredefined) alpha = step_size(rule, opt, k);
    if (which == OneStep::KhOptimal) {
      if (k == 1) {
        alpha = 1.0;
      } else {
        const double a_k = q - r + pxk - sxk;
        const double b_k = q - 2.0 * sxk + kxx;
        if (b_k < -1e-12 * std::max(1.0, cs.kbar_c))
          throw std::logic_error("kernel herding: negative curvature B_k");
        alpha = b_k > kAlphaZeroTol ? std::min(a_k / b_k, 1.0) : 0.0;
        if (alpha <= kAlphaZeroTol) {
          trace.stop_reason = "alpha_star_zero";
          break; // return xi_{k-1}
        }
      }
    }

    // measure and state updates
    const Eigen::Index slot =
        sup.touch(cur->points.row(j), resampling ? -1 : j, pxk);
    if (slot == static_cast<Eigen::Index>(slot_keys.size()))
      slot_keys.push_back(resampling ? -1 : j);
    sup.scale_weights(1.0 - alpha);
    sup.add_weight(slot, alpha);
    r = (1.0 - alpha) * r + alpha * pxk;
    q = (1.0 - alpha) * (1.0 - alpha) * q + 2.0 * alpha * (1.0 - alpha) * sxk +
        alpha * alpha * kxx;
    if (!resampling) {
      const Vec row = kernel_row(*cur, kernel, cur->points.row(j));
      s = (1.0 - alpha) * s + alpha * row;
    }

    IterationRecord rec;
    rec.k = k;
    rec.chosen_index = j;
    rec.alpha = alpha;
    rec.mmd2_recursive = q - 2.0 * r + energy;
    rec.support_size = sup.size();
    if (opt.direct_mmd2_every_iteration) {
      rec.mmd2 = sup.direct_mmd2();
      check_direct_vs_recursive(rec, trace);
    } else {
      rec.mmd2 = rec.mmd2_recursive;
    }
    rec.cum_time_s = seconds_since(t0);
    trace.records.push_back(rec);

    if (!resampling && opt.audit_every > 0 && k % opt.audit_every == 0)
      audit_state(k, sup, *cur, kernel, s, q, r, trace);

    if (gm_opt) {
      if (!resampling) {
        acand = Vec::Constant(c, q - r) + cur->pot - s;
        bcand = Vec::Constant(c, q) - 2.0 * s + cur->diag;
        for (Eigen::Index i = 0; i < c; ++i)
          alphacand[i] = bcand[i] > kAlphaZeroTol
                             ? std::clamp(acand[i] / bcand[i], 0.0, 1.0)
                             : 0.0;
      }
      if (!resampling && alphacand.cwiseAbs().maxCoeff() <= kAlphaZeroTol) {
        trace.stop_reason = "all_alpha_zero";
        out.measure = sup.measure(slot_keys);
        return out;
      }
    }
  }
  out.measure = sup.measure(slot_keys);
  return out;
}

} // namespace

RunResult kh_predefined(const CandidateSet& cs, const TargetMeasure& t,
                        const KernelSpec& k, StepRule rule, const AlgoOptions& opt) {
  return run_one_step_ahead(OneStep::KhPredefined, cs, t, k, rule, opt);
}

RunResult kh_optimal(const CandidateSet& cs, const TargetMeasure& t,
                     const KernelSpec& k, const AlgoOptions& opt) {
  return run_one_step_ahead(OneStep::KhOptimal, cs, t, k, StepRule::InvK, opt);
}

RunResult gm_predefined(const CandidateSet& cs, const TargetMeasure& t,
                        const KernelSpec& k, StepRule rule, const AlgoOptions& opt) {
  return run_one_step_ahead(OneStep::GmPredefined, cs, t, k, rule, opt);
}

RunResult gm_optimal(const CandidateSet& cs, const TargetMeasure& t,
                     const KernelSpec& k, const AlgoOptions& opt) {
  return run_one_step_ahead(OneStep::GmOptimal, cs, t, k, StepRule::InvK, opt);
}

RunResult kh_iwo(const CandidateSet& cs, const TargetMeasure& t, const KernelSpec& k,
                 IwoVariant variant, const AlgoOptions& opt) {
  (void)t; // potential/energy values are read from the pool caches
  require_nonempty(cs);
  if (opt.resample_source)
    throw config_error("resampled candidate pools are restricted to the "
                       "one-step-ahead algorithms");
  const auto t0 = Clock::now();
  const double energy = cs.target_energy;
  const Eigen::Index c = cs.size();

  RunResult out;
  Trace& trace = out.trace;
  GramState gram(cs, k, /*reduced=*/false);
  SupportTracker sup(k, energy, cs.dim());
  std::vector<char> masked(static_cast<std::size_t>(c), 0);
  std::vector<char> in_support(static_cast<std::size_t>(c), 0);
  Vec s = Vec::Zero(c);
  Vec weights;
  DiscreteMeasure previous; // xi_{k-1}, returned by the stopping rules
  Eigen::Index prev_chosen = -1;
  double qp_objective = 0.0;

  for (int k1 = 1; k1 <= opt.n_max; ++k1) {
    // stopping rules evaluate the true argmin over the whole pool
    Eigen::Index jmin = 0;
    double vmin = s[0] - cs.pot[0];
    for (Eigen::Index i = 1; i < c; ++i) {
      const double v = s[i] - cs.pot[i];
      if (v < vmin) { vmin = v; jmin = i; }
    }
    if (variant == IwoVariant::Unconstrained && vmin >= 0.0) {
      trace.stop_reason = "stopping_rule_iii";
      trace.refactorisations = gram.refactorisations();
      out.measure = previous;
      return out;
    }
    if (variant == IwoVariant::SumOne && k1 >= 2) {
      const double prev_val = s[prev_chosen] - cs.pot[prev_chosen];
      if (vmin >= prev_val) {
        trace.stop_reason = "stopping_rule_ii";
        trace.refactorisations = gram.refactorisations();
        out.measure = previous;
        return out;
      }
    }
    if (variant == IwoVariant::Simplex && in_support[static_cast<std::size_t>(jmin)]) {
      trace.stop_reason = "converged_support_argmin";
      trace.refactorisations = gram.refactorisations();
      out.measure = previous;
      return out;
    }

    // extend with the best admissible candidate, skipping near-duplicates
    Eigen::Index chosen = -1;
    for (;;) {
      Eigen::Index jtry = -1;
      double vtry = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < c; ++i) {
        if (masked[static_cast<std::size_t>(i)] ||
            in_support[static_cast<std::size_t>(i)])
          continue;
        const double v = s[i] - cs.pot[i];
        if (v < vtry) { vtry = v; jtry = i; }
      }
      if (jtry < 0) {
        trace.stop_reason = "all_candidates_skipped";
        trace.refactorisations = gram.refactorisations();
        out.measure = previous;
        return out;
      }
      try {
        gram.extend_candidate(jtry);
        chosen = jtry;
        break;
      } catch (const near_duplicate_error&) {
        masked[static_cast<std::size_t>(jtry)] = 1;
        ++trace.beta_floor_skips;
      }
    }
    in_support[static_cast<std::size_t>(chosen)] = 1;
    prev_chosen = chosen;
    sup.touch(cs.points.row(chosen), chosen, cs.pot[chosen]);

    const Vec p = gram.support_potentials();
    double mmd2_rec = 0.0;
    switch (variant) {
    case IwoVariant::Unconstrained:
      weights = gram.solve(p);
      mmd2_rec = energy - gram.p_kinv_p();
      break;
    case IwoVariant::SumOne: {
      weights = hat_weights(gram, p).values;
      const double r1 = 1.0 - gram.p_kinv_one();
      mmd2_rec = energy - gram.p_kinv_p() + r1 * r1 / gram.one_kinv_one();
      break;
    }
    case IwoVariant::Simplex: {
      Vec warm(gram.size());
      if (gram.size() >= 2 && weights.size() == gram.size() - 1) {
        warm.head(weights.size()) = weights;
        warm[gram.size() - 1] = 0.0;
      } else {
        warm.setConstant(1.0 / static_cast<double>(gram.size()));
      }
      SimplexQpResult r =
          simplex_qp_minimize(gram.gram(), p, opt.qp_gap_tol, 100000, &warm);
      if (r.gap > opt.qp_gap_tol) ++trace.qp_cap_hits;
      weights = std::move(r.w);
      qp_objective = r.objective;
      mmd2_rec = energy + qp_objective;
      break;
    }
    }

    s = gram.candidate_rows().transpose() * weights;

    IterationRecord rec;
    rec.k = k1;
    rec.chosen_index = chosen;
    rec.alpha = kNaN;
    rec.mmd2_recursive = mmd2_rec;
    rec.support_size = gram.size();
    sup.set_weights(weights);
    if (opt.direct_mmd2_every_iteration) {
      rec.mmd2 = sup.direct_mmd2();
      check_direct_vs_recursive(rec, trace);
    } else {
      rec.mmd2 = rec.mmd2_recursive;
    }
    rec.cum_time_s = seconds_since(t0);
    trace.records.push_back(rec);

    previous = sup.measure(gram.support());
  }
  trace.refactorisations = gram.refactorisations();
  out.measure = previous;
  return out;
}

RunResult sbq(const CandidateSet& cs, const TargetMeasure& t, const KernelSpec& k,
              SbqVariant variant, const AlgoOptions& opt) {
  (void)t; // potential/energy values are read from the pool caches
  require_nonempty(cs);
  if (opt.resample_source)
    throw config_error("resampled candidate pools are restricted to the "
                       "one-step-ahead algorithms");
  const auto t0 = Clock::now();
  const double energy = cs.target_energy;
  const Eigen::Index c = cs.size();

  RunResult out;
  Trace& trace = out.trace;
  SupportTracker sup(k, energy, cs.dim());

  if (variant == SbqVariant::CoordDescent) {
    // coordinate descent on the candidate weights; no Gram factor needed
    Vec s_cd = Vec::Zero(c);
    std::vector<Eigen::Index> slot_keys;
    double mmd2_run = energy;
    const double floor = 1e-12 * std::max(cs.kbar_c, 1e-300);
    for (int k1 = 1; k1 <= opt.n_max; ++k1) {
      Eigen::Index j = -1;
      double best = -1.0;
      for (Eigen::Index i = 0; i < c; ++i) {
        if (cs.diag[i] <= floor) continue;
        const double d = s_cd[i] - cs.pot[i];
        const double v = d * d / cs.diag[i];
        if (v > best) { best = v; j = i; }
      }
      if (j < 0) {
        trace.stop_reason = "all_candidates_skipped";
        break;
      }
      const double wstar = (cs.pot[j] - s_cd[j]) / cs.diag[j];
      const Eigen::Index slot = sup.touch(cs.points.row(j), j, cs.pot[j]);
      if (slot == static_cast<Eigen::Index>(slot_keys.size()))
        slot_keys.push_back(j);
      sup.add_weight(slot, wstar);
      mmd2_run -= best;
      s_cd += wstar * kernel_row(cs, k, cs.points.row(j));

      IterationRecord rec;
      rec.k = k1;
      rec.chosen_index = j;
      rec.alpha = wstar;
      rec.mmd2_recursive = mmd2_run;
      rec.support_size = sup.size();
      if (opt.direct_mmd2_every_iteration) {
        rec.mmd2 = sup.direct_mmd2();
        check_direct_vs_recursive(rec, trace);
      } else {
        rec.mmd2 = rec.mmd2_recursive;
      }
      rec.cum_time_s = seconds_since(t0);
      trace.records.push_back(rec);
    }
    out.measure = sup.measure(slot_keys);
    return out;
  }

  const bool reduced = variant == SbqVariant::SumOne;
  GramState gram(cs, k, reduced);
  std::vector<char> masked(static_cast<std::size_t>(c), 0);
  std::vector<char> in_support(static_cast<std::size_t>(c), 0);
  Vec weights;

  for (int k1 = 1; k1 <= opt.n_max; ++k1) {
    Eigen::Index chosen = -1;
    for (;;) {
      Eigen::Index j = -1;
      double best = -1.0;
      for (Eigen::Index i = 0; i < c; ++i) {
        if (masked[static_cast<std::size_t>(i)] ||
            in_support[static_cast<std::size_t>(i)])
          continue;
        const double denom =
            (reduced ? cs.reduced_diag(i) : cs.diag[i]) - gram.q()[i];
        if (denom <= gram.beta_floor()) continue;
        const double num = reduced ? (gram.s()[i] - 1.0) * (gram.s()[i] - 1.0)
                                   : (gram.t()[i] - cs.pot[i]) *
                                         (gram.t()[i] - cs.pot[i]);
        const double v = num / denom;
        if (v > best) { best = v; j = i; }
      }
      if (j < 0) {
        trace.stop_reason = "all_candidates_skipped";
        trace.refactorisations = gram.refactorisations();
        out.measure = sup.measure(gram.support());
        return out;
      }
      try {
        gram.extend_candidate(j);
        chosen = j;
        break;
      } catch (const near_duplicate_error&) {
        masked[static_cast<std::size_t>(j)] = 1;
        ++trace.beta_floor_skips;
      }
    }
    in_support[static_cast<std::size_t>(chosen)] = 1;
    sup.touch(cs.points.row(chosen), chosen, cs.pot[chosen]);

    double mmd2_rec = 0.0;
    if (reduced) {
      const Vec v = gram.solve(Vec::Ones(gram.size()));
      weights = v / v.sum();
      mmd2_rec = 1.0 / gram.one_kinv_one();
    } else {
      weights = gram.solve(gram.support_potentials());
      mmd2_rec = energy - gram.p_kinv_p();
    }

    IterationRecord rec;
    rec.k = k1;
    rec.chosen_index = chosen;
    rec.alpha = kNaN;
    rec.mmd2_recursive = mmd2_rec;
    rec.support_size = gram.size();
    sup.set_weights(weights);
    if (opt.direct_mmd2_every_iteration) {
      rec.mmd2 = sup.direct_mmd2();
      check_direct_vs_recursive(rec, trace);
    } else {
      rec.mmd2 = rec.mmd2_recursive;
    }
    rec.cum_time_s = seconds_since(t0);
    trace.records.push_back(rec);
  }
  trace.refactorisations = gram.refactorisations();
  out.measure = sup.measure(gram.support());
  return out;
}

BaselineStats iid_baseline(const TargetMeasure& t, const KernelSpec& k,
                           const std::vector<int>& ns, int repetitions,
                           std::uint64_t seed) {
  if (!t.samplable()) throw config_error("iid baseline requires a samplable target");
  if (ns.empty() || repetitions < 1)
    throw config_error("iid baseline: need sizes and at least one repetition");
  const int n_max = *std::max_element(ns.begin(), ns.end());
  const TargetMoments mom = t.moments(k);

  BaselineStats stats;
  stats.ns = ns;
  stats.theory_m2 = mom.tau_one - mom.energy;
  Mat vals(repetitions, static_cast<Eigen::Index>(ns.size()));

  std::mt19937_64 rng(seed);
  for (int rep = 0; rep < repetitions; ++rep) {
    const Mat pts = t.sample(rng, n_max);
    double pair_sum = 0.0; // sum over all ordered pairs of K(x_i, x_j)
    double pot_sum = 0.0;
    std::size_t next = 0;
    std::vector<int> sorted(ns);
    std::sort(sorted.begin(), sorted.end());
    for (int m = 1; m <= n_max; ++m) {
      const Eigen::Index i = m - 1;
      double row = 0.0;
      for (Eigen::Index l = 0; l < i; ++l)
        row += kernel_eval(k, pts.row(l), pts.row(i));
      pair_sum += 2.0 * row + kernel_diag(k, pts.row(i));
      pot_sum += t.potential(k, pts.row(i));
      while (next < sorted.size() && sorted[next] == m) {
        const double mm = static_cast<double>(m);
        const double mmd2 = pair_sum / (mm * mm) - 2.0 * pot_sum / mm + mom.energy;
        // place the value at the position of this n in the caller's order
        for (std::size_t pos = 0; pos < ns.size(); ++pos)
          if (ns[pos] == m) vals(rep, static_cast<Eigen::Index>(pos)) = mmd2;
        ++next;
      }
    }
  }
  stats.mean_mmd2 = vals.colwise().mean();
  stats.sd_mmd2.resize(vals.cols());
  for (Eigen::Index j = 0; j < vals.cols(); ++j) {
    const double mu = stats.mean_mmd2[j];
    stats.sd_mmd2[j] = std::sqrt((vals.col(j).array() - mu).square().sum() /
                                 static_cast<double>(repetitions - 1));
  }
  return stats;
}

OlwoCurve olwo_postprocess(const std::vector<std::pair<Eigen::Index, double>>& selections,
                           const CandidateSet& cs, const TargetMeasure& t,
                           const KernelSpec& k, WeightClass cls, double qp_gap_tol) {
  (void)t;
  OlwoCurve curve;
  GramState gram(cs, k, /*reduced=*/false);
  const double energy = cs.target_energy;
  std::unordered_map<Eigen::Index, Eigen::Index> slot_of; // candidate -> support row
  Vec replay; // construction weights on the unique support (when replayable)
  bool replayable = true;

  for (const auto& [idx, alpha] : selections) {
    auto it = slot_of.find(idx);
    if (it == slot_of.end()) {
      try {
        gram.extend_candidate(idx);
        slot_of.emplace(idx, gram.size() - 1);
        curve.unique_support.push_back(idx);
        replay.conservativeResize(gram.size());
        replay[gram.size() - 1] = 0.0;
      } catch (const near_duplicate_error&) {
        slot_of.emplace(idx, -1); // beta-floor skip; prefix keeps its old span
      }
    }
    if (std::isfinite(alpha) && replayable && slot_of[idx] >= 0) {
      replay *= (1.0 - alpha);
      replay[slot_of[idx]] += alpha;
    } else {
      // a NaN step or a skipped atom means the construction weights cannot
      // be reproduced on this support
      replayable = false;
    }

    if (gram.size() == 0) {
      curve.mmd2.push_back(energy);
      continue;
    }
    const Vec p = gram.support_potentials();
    double mmd2 = 0.0;
    switch (cls) {
    case WeightClass::Unconstrained:
      mmd2 = energy - gram.p_kinv_p();
      break;
    case WeightClass::SumOne: {
      const double r1 = 1.0 - gram.p_kinv_one();
      mmd2 = energy - gram.p_kinv_p() + r1 * r1 / gram.one_kinv_one();
      break;
    }
    case WeightClass::Simplex: {
      Vec warm = replayable ? replay
                            : Vec::Constant(gram.size(),
                                            1.0 / static_cast<double>(gram.size()));
      SimplexQpResult r =
          simplex_qp_minimize(gram.gram(), p, qp_gap_tol, 100000, &warm);
      mmd2 = energy + r.objective;
      break;
    }
    }
    curve.mmd2.push_back(mmd2);
  }
  return curve;
}

} // namespace mmdq

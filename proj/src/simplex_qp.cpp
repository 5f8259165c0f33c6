#include "mmdq/simplex_qp.hpp"

#include <limits>

namespace mmdq {

SimplexQpResult simplex_qp_minimize(const Mat& k, const Vec& p, double gap_tol,
                                    int max_iter, const Vec* warm_start) {
  const Eigen::Index n = k.rows();
  SimplexQpResult r;
  r.w = warm_start ? *warm_start : Vec::Constant(n, 1.0 / static_cast<double>(n));
  Vec kw = k * r.w;
  double wkw = r.w.dot(kw);
  double wp = r.w.dot(p);
  r.objective = wkw - 2.0 * wp;
  for (int it = 0; it < max_iter; ++it) {
    // gradient 2(Kw - p); vertex with the steepest descent direction
    Eigen::Index j = 0;
    double gj = 2.0 * (kw[0] - p[0]);
    for (Eigen::Index i = 1; i < n; ++i) {
      const double gi = 2.0 * (kw[i] - p[i]);
      if (gi < gj) { gj = gi; j = i; }
    }
    r.gap = 2.0 * (wkw - wp) - gj;
    r.iterations = it;
    if (r.gap <= gap_tol) return r;
    const double dkd = k(j, j) - 2.0 * kw[j] + wkw;
    double alpha = dkd > 0.0 ? std::min(1.0, r.gap / (2.0 * dkd)) : 1.0;
    wkw = (1.0 - alpha) * (1.0 - alpha) * wkw +
          2.0 * alpha * (1.0 - alpha) * kw[j] + alpha * alpha * k(j, j);
    kw = (1.0 - alpha) * kw + alpha * k.col(j);
    wp = (1.0 - alpha) * wp + alpha * p[j];
    r.w = (1.0 - alpha) * r.w;
    r.w[j] += alpha;
    r.objective = wkw - 2.0 * wp;
  }
  // recompute the gap at the final iterate
  double gj = 2.0 * (kw[0] - p[0]);
  for (Eigen::Index i = 1; i < n; ++i) gj = std::min(gj, 2.0 * (kw[i] - p[i]));
  r.gap = 2.0 * (wkw - wp) - gj;
  r.iterations = max_iter;
  return r;
}

WeightVector simplex_weights(const GramState& g, const Vec& potentials, double gap_tol,
                             const Vec* warm_start) {
  constexpr int kCap = 100000;
  SimplexQpResult r =
      simplex_qp_minimize(g.gram(), potentials, gap_tol, kCap, warm_start);
  if (r.gap > gap_tol) throw simplex_cap_error(std::move(r));
  WeightVector w;
  w.values = std::move(r.w);
  w.constraint_class = WeightClass::Simplex;
  return w;
}

Mc2Interval certified_mc2(const CandidateSet& cs, const KernelSpec& kernel,
                          const TargetMeasure& target, int budget) {
  (void)target; // potentials and energy are read from the pool caches
  const Eigen::Index c = cs.size();
  auto kmu = [&](Eigen::Index i, Eigen::Index j) {
    return kernel_eval(kernel, cs.points.row(i), cs.points.row(j)) - cs.pot[i] -
           cs.pot[j] + cs.target_energy;
  };
  // start uniform; one O(C^2) pass gives Kmu*w and the initial objective
  Vec w = Vec::Constant(c, 1.0 / static_cast<double>(c));
  Vec kw = Vec::Zero(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < c; ++j) row += kmu(i, j);
    kw[i] = row / static_cast<double>(c);
  }
  double f = w.dot(kw);
  Mc2Interval out;
  out.hi = f;
  out.lo = -std::numeric_limits<double>::infinity();
  Vec colj(c);
  for (int it = 0; it < budget; ++it) {
    Eigen::Index j = 0;
    double kwj = kw[0];
    for (Eigen::Index i = 1; i < c; ++i)
      if (kw[i] < kwj) { kwj = kw[i]; j = i; }
    const double gap = 2.0 * (f - kwj);
    out.gap = gap;
    out.iterations = it;
    out.lo = std::max(out.lo, f - gap);
    out.hi = f;
    if (gap <= 0.0) break;
    const double kjj = cs.reduced_diag(j);
    const double dkd = kjj - 2.0 * kwj + f;
    const double alpha = dkd > 0.0 ? std::min(1.0, gap / (2.0 * dkd)) : 1.0;
    for (Eigen::Index i = 0; i < c; ++i) colj[i] = kmu(j, i);
    f = (1.0 - alpha) * (1.0 - alpha) * f + 2.0 * alpha * (1.0 - alpha) * kwj +
        alpha * alpha * kjj;
    kw = (1.0 - alpha) * kw + alpha * colj;
    w = (1.0 - alpha) * w;
    w[j] += alpha;
    out.iterations = it + 1;
  }
  const double final_gap = 2.0 * (f - kw.minCoeff());
  out.gap = final_gap;
  out.lo = std::max(out.lo, f - final_gap);
  out.hi = f;
  return out;
}

} // namespace mmdq

#include "mmdq/metrics.hpp"

#include <cmath>
#include <limits>

namespace mmdq {

Mat support_gram(const KernelSpec& k, const Mat& points) {
  const Eigen::Index n = points.rows();
  Mat g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = kernel_diag(k, points.row(i));
    for (Eigen::Index j = i + 1; j < n; ++j)
      g(i, j) = g(j, i) = kernel_eval(k, points.row(i), points.row(j));
  }
  return g;
}

Vec support_potentials(const KernelSpec& k, const TargetMeasure& t, const Mat& points) {
  Vec p(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    p[i] = t.potential(k, points.row(i));
  return p;
}

double mmd_squared(const DiscreteMeasure& m, const TargetMeasure& t,
                   const KernelSpec& k) {
  if (!k.spd() && std::abs(m.total_mass() - 1.0) > 1e-10)
    throw std::invalid_argument(
        "distance kernel: MMD^2 is only defined for total-mass-one measures");
  const Mat g = support_gram(k, m.support);
  const Vec p = support_potentials(k, t, m.support);
  return m.weights.dot(g * m.weights) - 2.0 * m.weights.dot(p) + t.energy(k);
}

double mmd_squared_reduced(const DiscreteMeasure& m, const TargetMeasure& t,
                           const KernelSpec& k) {
  if (std::abs(m.total_mass() - 1.0) > 1e-10)
    throw std::invalid_argument("reduced-form MMD^2 requires total mass one");
  const Eigen::Index n = m.size();
  const Vec p = support_potentials(k, t, m.support);
  const double e = t.energy(k);
  Mat gmu(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gmu(i, i) = kernel_diag(k, m.support.row(i)) - 2.0 * p[i] + e;
    for (Eigen::Index j = i + 1; j < n; ++j)
      gmu(i, j) = gmu(j, i) =
          kernel_eval(k, m.support.row(i), m.support.row(j)) - p[i] - p[j] + e;
  }
  return m.weights.dot(gmu * m.weights);
}

const char* to_string(BoundMethod m) {
  switch (m) {
  case BoundMethod::KhInvK: return "kh_inv_k";
  case BoundMethod::KhTwoOverKPlus1: return "kh_two_over_kplus1";
  case BoundMethod::KhOptimal: return "kh_optimal";
  case BoundMethod::GmInvK: return "gm_inv_k";
  case BoundMethod::GmTwoOverKPlus1: return "gm_two_over_kplus1";
  case BoundMethod::GmOptimal: return "gm_optimal";
  case BoundMethod::IwoSimplex: return "kh_iwo_i";
  case BoundMethod::IwoSumOne: return "kh_iwo_ii";
  case BoundMethod::IwoUnconstrained: return "kh_iwo_iii";
  case BoundMethod::SbqUnconstrained: return "sbq_unconstrained";
  case BoundMethod::SbqSumOne: return "sbq_sum_one";
  case BoundMethod::SbqCoordDescent: return "sbq_coord_descent";
  }
  return "?";
}

BoundSpec make_bound_spec(BoundMethod method, const CandidateSet& cs,
                          const KernelSpec& kernel, const TargetMoments& moments,
                          const Mc2Interval& mc2) {
  BoundSpec b;
  b.method = method;
  b.kernel_positive = kernel.positive();
  b.kbar = kernel.kbar();
  b.kbar_c = cs.kbar_c;
  const double root = std::sqrt(cs.kbar_c);
  if (b.kernel_positive) {
    b.a_c = cs.kbar_c + moments.tau_half * moments.tau_half;
    b.b_c = 2.0 * cs.kbar_c;
  } else {
    b.a_c = (root + moments.tau_half) * (root + moments.tau_half);
    b.b_c = 4.0 * cs.kbar_c;
  }
  b.mc2 = mc2;
  return b;
}

double bound_term(const BoundSpec& b, int n) {
  const double nn = static_cast<double>(n);
  switch (b.method) {
  case BoundMethod::KhInvK:
    return b.b_c * (2.0 + std::log(nn)) / (nn + 1.0);
  case BoundMethod::GmInvK:
    return b.a_c * (1.0 + std::log(nn)) / nn;
  case BoundMethod::KhTwoOverKPlus1:
  case BoundMethod::KhOptimal:
  case BoundMethod::GmTwoOverKPlus1:
  case BoundMethod::GmOptimal:
  case BoundMethod::IwoSimplex:
  case BoundMethod::IwoSumOne:
  case BoundMethod::SbqSumOne:
    return 4.0 * b.b_c / (nn + 3.0);
  case BoundMethod::IwoUnconstrained:
  case BoundMethod::SbqUnconstrained:
  case BoundMethod::SbqCoordDescent:
    // the coordinate-descent rate needs a constant kernel diagonal, which
    // holds for every admissible SPD family here
    return 4.0 * b.kbar / (nn + 13.0 / 3.0);
  }
  throw std::invalid_argument("unknown bound method");
}

Vec bound_curve(const BoundSpec& b, int n_max, double mc2_offset) {
  Vec v(n_max);
  for (int n = 1; n <= n_max; ++n) v[n - 1] = mc2_offset + bound_term(b, n);
  return v;
}

std::optional<double> conditional_bound_term(const BoundSpec& b, int n) {
  const double nn = static_cast<double>(n);
  switch (b.method) {
  case BoundMethod::KhInvK:
  case BoundMethod::KhOptimal:
  case BoundMethod::GmInvK:
  case BoundMethod::GmOptimal:
  case BoundMethod::IwoSimplex:
    return b.b_c / nn;
  case BoundMethod::IwoSumOne:
  case BoundMethod::SbqSumOne:
    if (n < 2) return std::nullopt;
    return b.b_c / (nn + 2.0);
  default:
    return std::nullopt;
  }
}

double covering_radius(const Mat& design, const Vec& box_lower,
                       const Vec& box_upper, int grid_per_axis) {
  if (design.rows() == 0) throw std::invalid_argument("covering_radius: empty design");
  const Eigen::Index d = box_lower.size();
  if (design.cols() != d)
    throw std::invalid_argument("covering_radius: dimension mismatch");
  if (grid_per_axis < 2) throw std::invalid_argument("covering_radius: grid too coarse");
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  RowVec x(d);
  double worst = 0.0;
  for (;;) {
    for (Eigen::Index j = 0; j < d; ++j)
      x[j] = box_lower[j] + (box_upper[j] - box_lower[j]) *
                                (static_cast<double>(idx[static_cast<std::size_t>(j)]) /
                                 static_cast<double>(grid_per_axis - 1));
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < design.rows(); ++i)
      best = std::min(best, (design.row(i) - x).squaredNorm());
    worst = std::max(worst, best);
    // odometer over the grid
    Eigen::Index j = 0;
    for (; j < d; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < grid_per_axis) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
    if (j == d) break;
  }
  return std::sqrt(worst);
}

double mmd_distance_metric(const DiscreteMeasure& m, const CandidateSet& cs) {
  if (std::abs(m.total_mass() - 1.0) > 1e-10)
    throw std::invalid_argument("distance-kernel metric requires total mass one");
  const KernelSpec kd(KernelFamily::Distance, 1.0);
  const TargetMeasure mu_c = TargetMeasure::empirical(cs.points);
  const double m2 = mmd_squared(m, mu_c, kd);
  return std::sqrt(std::max(0.0, m2));
}

} // namespace mmdq

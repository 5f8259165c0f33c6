#pragma once

#include "mmdq/candidates.hpp"
#include "mmdq/kernel.hpp"
#include "mmdq/metrics.hpp"
#include "mmdq/target.hpp"

#include <random>

namespace testutil {

using namespace mmdq;

inline TargetMeasure mixture3() {
  Vec betas(3);
  betas << 2.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0;
  Mat means(3, 2);
  means << -1.0, 1.0, 1.0, -1.0, 1.0, 1.0;
  return TargetMeasure::gaussian_mixture(betas, means, Vec::Constant(3, 0.5));
}

inline TargetMeasure single_gaussian2d(double sigma = 0.5) {
  Vec beta(1);
  beta << 1.0;
  Vec sig(1);
  sig << sigma;
  return TargetMeasure::gaussian_mixture(beta, Mat::Zero(1, 2), sig);
}

inline CandidateSet iid_pool(const TargetMeasure& t, const KernelSpec& k,
                             Eigen::Index c, std::uint64_t seed) {
  CandidateSource src;
  src.mode = CandidateSource::Mode::IidTarget;
  src.seed = seed;
  return build_candidates(src, c, t, k);
}

inline Mat random_points(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d,
                         double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = u(rng);
  return m;
}

// brute-force MMD^2 by the plain double sum, no shared code with the library
inline double brute_mmd2(const Mat& pts, const Vec& w, const TargetMeasure& t,
                         const KernelSpec& k) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = 0; j < pts.rows(); ++j)
      acc += w[i] * w[j] * kernel_eval(k, pts.row(i), pts.row(j));
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    acc -= 2.0 * w[i] * t.potential(k, pts.row(i));
  return acc + t.energy(k);
}

} // namespace testutil

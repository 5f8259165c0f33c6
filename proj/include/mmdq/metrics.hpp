#pragma once

#include "mmdq/candidates.hpp"
#include "mmdq/measure.hpp"
#include "mmdq/simplex_qp.hpp"
#include "mmdq/target.hpp"

#include <optional>
#include <string>

namespace mmdq {

Mat support_gram(const KernelSpec& k, const Mat& points);
Vec support_potentials(const KernelSpec& k, const TargetMeasure& t, const Mat& points);

// MMD^2(mu, xi) = w'K w - 2 w'p + E_K(mu). The distance kernel is only
// admissible for total-mass-one measures.
double mmd_squared(const DiscreteMeasure& m, const TargetMeasure& t,
                   const KernelSpec& k);

// same quantity through the reduced-kernel quadratic form w' Kmu w;
// requires total mass one
double mmd_squared_reduced(const DiscreteMeasure& m, const TargetMeasure& t,
                           const KernelSpec& k);

// the tabulated method/step combinations with proven rate curves
enum class BoundMethod {
  KhInvK,
  KhTwoOverKPlus1,
  KhOptimal,
  GmInvK,
  GmTwoOverKPlus1,
  GmOptimal,
  IwoSimplex,
  IwoSumOne,
  IwoUnconstrained,
  SbqUnconstrained,
  SbqSumOne,
  SbqCoordDescent,
};

const char* to_string(BoundMethod m);

struct BoundSpec {
  BoundMethod method = BoundMethod::KhInvK;
  double a_c = 0.0;    // (Kbar_C^{1/2} + tau_half)^2, or Kbar_C + tau_half^2 if K >= 0
  double b_c = 0.0;    // 4 Kbar_C, or 2 Kbar_C if K >= 0
  double kbar = 0.0;   // global sup of K(x,x)
  double kbar_c = 0.0;
  Mc2Interval mc2;
  bool kernel_positive = false;
};

BoundSpec make_bound_spec(BoundMethod method, const CandidateSet& cs,
                          const KernelSpec& kernel, const TargetMoments& moments,
                          const Mc2Interval& mc2);

// the n-dependent term of the tabulated rate (without the M_C^2 offset)
double bound_term(const BoundSpec& b, int n);

// mc2_offset is added to every entry; pass b.mc2.hi for the certified bound
// or 0 for the strict variant
Vec bound_curve(const BoundSpec& b, int n_max, double mc2_offset);

// sharper rates valid only under hat == star (all sum-one optimal weights
// nonnegative); advisory. Empty when the method has no conditional row.
std::optional<double> conditional_bound_term(const BoundSpec& b, int n);

// grid lower approximation of max_{x in box} min_i |x - x_i|
double covering_radius(const Mat& design, const Vec& box_lower,
                       const Vec& box_upper, int grid_per_axis);

// MMD_{K_D}(mu_C, xi) with K_D the distance kernel and mu_C the empirical
// measure of the candidate pool; requires total mass one
double mmd_distance_metric(const DiscreteMeasure& m, const CandidateSet& cs);

} // namespace mmdq

#pragma once

#include "mmdq/candidates.hpp"
#include "mmdq/gram.hpp"
#include "mmdq/types.hpp"

namespace mmdq {

struct SimplexQpResult {
  Vec w;
  double objective = 0.0; // w'Kw - 2 w'p at w
  double gap = 0.0;       // Frank-Wolfe duality gap at w
  int iterations = 0;
};

class simplex_cap_error : public std::runtime_error {
public:
  simplex_cap_error(SimplexQpResult best)
      : std::runtime_error("simplex QP: iteration cap reached with gap " +
                           std::to_string(best.gap)),
        best_iterate(std::move(best)) {}
  SimplexQpResult best_iterate;
};

// min_{w in simplex} w'Kw - 2 w'p by Frank-Wolfe with exact line search,
// started at the uniform vector (so the objective never exceeds the uniform
// value). Optional warm start overrides the initial point.
SimplexQpResult simplex_qp_minimize(const Mat& k, const Vec& p, double gap_tol,
                                    int max_iter, const Vec* warm_start = nullptr);

// Spec-facing wrapper: throws simplex_cap_error past 1e5 iterations.
WeightVector simplex_weights(const GramState& g, const Vec& potentials, double gap_tol,
                             const Vec* warm_start = nullptr);

// Certified bracket on M_C^2 = min over the C-simplex of w' Kmu_C w.
struct Mc2Interval {
  double lo = 0.0; // best Frank-Wolfe lower bound seen, f - gap
  double hi = 0.0; // final objective value (feasible, hence an upper bound)
  double gap = 0.0;
  int iterations = 0;
};

Mc2Interval certified_mc2(const CandidateSet& cs, const KernelSpec& kernel,
                          const TargetMeasure& target, int budget);

} // namespace mmdq

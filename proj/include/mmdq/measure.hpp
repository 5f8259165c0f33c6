#pragma once

#include "mmdq/types.hpp"

#include <vector>

namespace mmdq {

// A finitely supported signed measure sum_i w_i delta_{x_i}. Support points
// are unique; repeated selections during a construction are merged here.
struct DiscreteMeasure {
  Mat support;  // u x d
  Vec weights;  // aligned with support rows
  std::vector<Eigen::Index> candidate_indices; // -1 when not from a pool

  Eigen::Index size() const { return support.rows(); }
  double total_mass() const { return weights.size() ? weights.sum() : 0.0; }
  bool is_probability(double weight_tol = 1e-12, double mass_tol = 1e-10) const {
    if (weights.size() == 0) return false;
    if (weights.minCoeff() < -weight_tol) return false;
    return std::abs(total_mass() - 1.0) <= mass_tol;
  }
};

} // namespace mmdq

#pragma once

#include "mmdq/candidates.hpp"
#include "mmdq/types.hpp"

#include <vector>

namespace mmdq {

enum class WeightClass { Simplex, SumOne, Unconstrained };

struct WeightVector {
  Vec values;
  WeightClass constraint_class = WeightClass::Unconstrained;
  double sum() const { return values.sum(); }
};

// Incrementally factorised Gram matrix K_n of the current support, plus the
// per-candidate quantities q_i = k_n'(x_i) K_n^{-1} k_n(x_i),
// s_i = 1' K_n^{-1} k_n(x_i) and t_i = p_n' K_n^{-1} k_n(x_i) maintained by
// rank-one recursion so the SBQ/IWO candidate scans cost O(C) per step on
// top of the new kernel row. A lower-triangular Cholesky factor is kept
// instead of the explicit block inverse; the Schur complement of each new
// column is read off the factor and guarded by a near-duplicate floor.
class GramState {
public:
  // unbound: caller supplies columns and diagonals directly
  explicit GramState(double diag_scale);

  // bound to a candidate pool; reduced = true factorises the recentred
  // kernel K_mu instead of K (used by the sum-one SBQ variant)
  GramState(const CandidateSet& cs, const KernelSpec& kernel, bool reduced);

  Eigen::Index size() const { return n_; }
  double beta_floor() const { return 1e-12 * diag_scale_; }

  // column = [K(x_1,x_new), ..., K(x_n,x_new)], diag_value = K(x_new,x_new);
  // throws near_duplicate_error when the Schur complement hits the floor
  void extend(const Vec& column, double diag_value);

  // bound-mode extension by candidate index; also advances q/s/t and the
  // scalar recursions
  void extend_candidate(Eigen::Index j);

  Vec solve(const Vec& rhs) const; // K_n^{-1} rhs

  Mat gram() const { return k_.topLeftCorner(n_, n_); }
  Mat chol() const { return l_.topLeftCorner(n_, n_); }
  double last_beta() const { return last_beta_; }
  const Vec& last_u() const { return last_u_; }

  // bound-mode accessors
  const std::vector<Eigen::Index>& support() const { return support_; }
  Vec support_potentials() const;               // p_n (plain kernel potentials)
  Eigen::Block<const Mat> candidate_rows() const; // n x C kernel rows
  const Vec& q() const { return q_; }
  const Vec& s() const { return s_; }
  const Vec& t() const { return t_; }
  double one_kinv_one() const { return one_kinv_one_; }
  double p_kinv_p() const { return p_kinv_p_; }
  double p_kinv_one() const { return p_kinv_one_; }
  bool reduced() const { return reduced_; }

  int rejected_extensions() const { return rejected_; }
  int refactorisations() const { return refactorisations_; }

  // max-abs reconstruction error |LL' - K|; a failed check triggers a
  // from-scratch refactorisation inside extend
  double reconstruction_error() const;

private:
  void append_factor_row(const Vec& column, double diag_value, const Vec& a,
                         double schur);
  void reserve(Eigen::Index n);
  void maybe_recheck();
  void refactor_from_scratch();
  void recompute_candidate_caches();
  double candidate_pair(Eigen::Index i, Eigen::Index j) const; // kernel entry
  double candidate_diag(Eigen::Index j) const;

  const CandidateSet* cs_ = nullptr;
  KernelSpec kernel_;
  bool reduced_ = false;
  double diag_scale_ = 1.0;

  Eigen::Index n_ = 0;
  Eigen::Index cap_ = 0;
  Mat k_, l_;
  Mat g_; // support x candidates kernel rows (bound mode)
  std::vector<Eigen::Index> support_;
  Vec p_;             // potentials at support (plain kernel)
  Vec q_, s_, t_;     // per-candidate recursions
  double one_kinv_one_ = 0.0, p_kinv_p_ = 0.0, p_kinv_one_ = 0.0;
  Vec last_u_;
  double last_beta_ = 0.0;
  int rejected_ = 0;
  int refactorisations_ = 0;
  int recheck_period_ = 50;
};

// w~ = K_n^{-1} p, the unconstrained minimiser of the MMD quadratic
WeightVector tilde_weights(const GramState& g, const Vec& potentials);

// sum-to-one minimiser, assembled from K^{-1}p and K^{-1}1
WeightVector hat_weights(const GramState& g, const Vec& potentials);

} // namespace mmdq

#include "mmdq/gram.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace mmdq {

GramState::GramState(double diag_scale) : diag_scale_(diag_scale) {
  if (!(diag_scale > 0.0))
    throw std::invalid_argument("GramState: diag scale must be positive");
  reserve(16);
}

GramState::GramState(const CandidateSet& cs, const KernelSpec& kernel, bool reduced)
    : cs_(&cs), kernel_(kernel), reduced_(reduced) {
  diag_scale_ = reduced ? std::max(cs.kmu_bar_c, 1e-300) : std::max(cs.kbar_c, 1e-300);
  reserve(16);
  const Eigen::Index c = cs.size();
  g_.resize(cap_, c);
  q_ = Vec::Zero(c);
  s_ = Vec::Zero(c);
  t_ = Vec::Zero(c);
}

void GramState::reserve(Eigen::Index n) {
  if (n <= cap_) return;
  Eigen::Index cap = cap_ > 0 ? cap_ : 16;
  while (cap < n) cap *= 2;
  k_.conservativeResize(cap, cap);
  l_.conservativeResize(cap, cap);
  if (cs_) g_.conservativeResize(cap, cs_->size());
  cap_ = cap;
}

double GramState::candidate_pair(Eigen::Index i, Eigen::Index j) const {
  double v = kernel_eval(kernel_, cs_->points.row(i), cs_->points.row(j));
  if (reduced_) v += -cs_->pot[i] - cs_->pot[j] + cs_->target_energy;
  return v;
}

double GramState::candidate_diag(Eigen::Index j) const {
  return reduced_ ? cs_->reduced_diag(j) : cs_->diag[j];
}

void GramState::append_factor_row(const Vec& column, double diag_value,
                                  const Vec& a, double schur) {
  reserve(n_ + 1);
  k_.block(0, n_, n_, 1) = column;
  k_.block(n_, 0, 1, n_) = column.transpose();
  k_(n_, n_) = diag_value;
  l_.block(n_, 0, 1, n_) = a.transpose();
  l_.block(0, n_, n_ + 1, 1).setZero();
  l_(n_, n_) = std::sqrt(schur);
  ++n_;
}

void GramState::extend(const Vec& column, double diag_value) {
  if (column.size() != n_)
    throw std::invalid_argument("GramState::extend: column size mismatch");
  Vec a(n_);
  if (n_ > 0)
    a = l_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solve(column);
  const double schur = diag_value - a.squaredNorm();
  if (schur <= beta_floor()) {
    ++rejected_;
    throw near_duplicate_error(schur);
  }
  last_u_ = n_ > 0 ? Vec(l_.topLeftCorner(n_, n_)
                             .transpose()
                             .triangularView<Eigen::Upper>()
                             .solve(a))
                   : Vec(0);
  last_beta_ = 1.0 / schur;
  append_factor_row(column, diag_value, a, schur);
  maybe_recheck();
}

void GramState::extend_candidate(Eigen::Index j) {
  if (!cs_) throw std::logic_error("extend_candidate on an unbound GramState");
  const Eigen::Index c = cs_->size();
  const Eigen::Index n = n_;
  RowVec newrow(c);
  for (Eigen::Index i = 0; i < c; ++i) newrow[i] = candidate_pair(j, i);
  const Vec column = n > 0 ? Vec(g_.block(0, 0, n, c).col(j)) : Vec(0);
  const double diag_value = candidate_diag(j);

  Vec a(n);
  if (n > 0)
    a = l_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(column);
  const double schur = diag_value - a.squaredNorm();
  if (schur <= beta_floor()) {
    ++rejected_;
    throw near_duplicate_error(schur);
  }
  const double beta = 1.0 / schur;
  Vec u(n);
  if (n > 0)
    u = l_.topLeftCorner(n, n).transpose().triangularView<Eigen::Upper>().solve(a);
  last_u_ = u;
  last_beta_ = beta;

  // rank-one recursions: (u', -1) against the extended kernel rows
  Vec e = -newrow.transpose();
  if (n > 0) e += g_.block(0, 0, n, c).transpose() * u;
  const double e1 = (n > 0 ? u.sum() : 0.0) - 1.0;
  q_ += beta * e.cwiseProduct(e);
  s_ += (beta * e1) * e;
  one_kinv_one_ += beta * e1 * e1;
  if (!reduced_) {
    const double ep = (n > 0 ? u.dot(p_.head(n)) : 0.0) - cs_->pot[j];
    t_ += (beta * ep) * e;
    p_kinv_one_ += beta * e1 * ep;
    p_kinv_p_ += beta * ep * ep;
  }

  append_factor_row(column, diag_value, a, schur);
  g_.block(n, 0, 1, c) = newrow;
  support_.push_back(j);
  p_.conservativeResize(n_);
  p_[n_ - 1] = cs_->pot[j];
  maybe_recheck();
}

Vec GramState::solve(const Vec& rhs) const {
  if (rhs.size() != n_)
    throw std::invalid_argument("GramState::solve: size mismatch");
  Vec y = l_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solve(rhs);
  return l_.topLeftCorner(n_, n_).transpose().triangularView<Eigen::Upper>().solve(y);
}

Vec GramState::support_potentials() const { return p_.head(n_); }

Eigen::Block<const Mat> GramState::candidate_rows() const {
  return g_.block(0, 0, n_, cs_ ? cs_->size() : 0);
}

double GramState::reconstruction_error() const {
  if (n_ == 0) return 0.0;
  const Mat l = l_.topLeftCorner(n_, n_);
  return ((l * l.transpose()) - k_.topLeftCorner(n_, n_)).cwiseAbs().maxCoeff();
}

void GramState::maybe_recheck() {
  if (recheck_period_ <= 0 || n_ == 0 || n_ % recheck_period_ != 0) return;
  const double tol = 1e-10 * static_cast<double>(n_) * diag_scale_;
  if (reconstruction_error() > tol) refactor_from_scratch();
}

void GramState::refactor_from_scratch() {
  Eigen::LLT<Mat> llt(k_.topLeftCorner(n_, n_));
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("Gram refactorisation failed: matrix not positive definite");
  l_.topLeftCorner(n_, n_) = llt.matrixL();
  ++refactorisations_;
  if (cs_) recompute_candidate_caches();
}

void GramState::recompute_candidate_caches() {
  const Eigen::Index c = cs_->size();
  const auto lview = l_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>();
  Mat a = lview.solve(g_.block(0, 0, n_, c));
  q_ = a.colwise().squaredNorm().transpose();
  const Vec kinv_one = solve(Vec::Ones(n_));
  s_ = g_.block(0, 0, n_, c).transpose() * kinv_one;
  one_kinv_one_ = kinv_one.sum();
  if (!reduced_) {
    const Vec kinv_p = solve(p_.head(n_));
    t_ = g_.block(0, 0, n_, c).transpose() * kinv_p;
    p_kinv_p_ = p_.head(n_).dot(kinv_p);
    p_kinv_one_ = kinv_p.sum();
  }
}

WeightVector tilde_weights(const GramState& g, const Vec& potentials) {
  WeightVector w;
  w.values = g.solve(potentials);
  w.constraint_class = WeightClass::Unconstrained;
  return w;
}

WeightVector hat_weights(const GramState& g, const Vec& potentials) {
  const Vec a = g.solve(potentials);
  const Vec b = g.solve(Vec::Ones(g.size()));
  WeightVector w;
  w.values = a + b * ((1.0 - a.sum()) / b.sum());
  w.constraint_class = WeightClass::SumOne;
  return w;
}

} // namespace mmdq

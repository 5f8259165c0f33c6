#include "mmdq/target.hpp"

#include <cmath>

namespace mmdq {

namespace {

// One-dimensional pieces of the Matern-3/2 x uniform closed forms, with
// eps = sqrt(3)*theta. F is the antiderivative of s -> (1+eps*s)exp(-eps*s),
// F(a) = int_0^a, so F(0) = 0.
inline double matern_cdf_piece(double eps, double a) {
  return 2.0 / eps - std::exp(-eps * a) * (a + 2.0 / eps);
}

// int_l^u K_{3/2,theta}(x,t) dt / (u-l)
double matern_uniform_potential_1d(double eps, double l, double u, double x) {
  auto pos = [](double v) { return v > 0.0 ? v : 0.0; };
  const double num = matern_cdf_piece(eps, pos(x - l)) +
                     matern_cdf_piece(eps, pos(u - x)) -
                     matern_cdf_piece(eps, pos(l - x)) -
                     matern_cdf_piece(eps, pos(x - u));
  return num / (u - l);
}

// int_l^u int_l^u K_{3/2,theta}(s,t) ds dt / (u-l)^2
double matern_uniform_energy_1d(double eps, double l, double u) {
  const double w = u - l;
  const double e = std::exp(-eps * w);
  const double num = 4.0 * w / eps - 6.0 / (eps * eps) * (1.0 - e) +
                     2.0 * w / eps * e;
  return num / (w * w);
}

} // namespace

TargetMeasure TargetMeasure::uniform_box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw config_error("uniform_box: lower/upper must be nonempty and equal-sized");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(upper[i] > lower[i]))
      throw config_error("uniform_box: upper must exceed lower in every dimension");
  TargetMeasure t;
  t.variant_ = Variant::UniformBox;
  t.dim_ = lower.size();
  t.lower_ = std::move(lower);
  t.upper_ = std::move(upper);
  return t;
}

TargetMeasure TargetMeasure::gaussian_mixture(Vec betas, Mat means, Vec sigmas) {
  const Eigen::Index m = betas.size();
  if (m == 0 || means.rows() != m || sigmas.size() != m)
    throw config_error("gaussian_mixture: betas/means/sigmas sizes disagree");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!(betas[j] > 0.0)) throw config_error("gaussian_mixture: weights must be positive");
    if (!(sigmas[j] > 0.0)) throw config_error("gaussian_mixture: sigmas must be positive");
    sum += betas[j];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw config_error("gaussian_mixture: weights must sum to one");
  TargetMeasure t;
  t.variant_ = Variant::GaussianMixture;
  t.dim_ = means.cols();
  t.betas_ = std::move(betas);
  t.means_ = std::move(means);
  t.sigmas_ = std::move(sigmas);
  return t;
}

TargetMeasure TargetMeasure::empirical(Mat reference_points) {
  if (reference_points.rows() == 0)
    throw config_error("empirical target: reference set is empty");
  TargetMeasure t;
  t.variant_ = Variant::Empirical;
  t.dim_ = reference_points.cols();
  t.reference_ = std::move(reference_points);
  return t;
}

const char* TargetMeasure::variant_name() const {
  switch (variant_) {
  case Variant::UniformBox: return "uniform_box";
  case Variant::GaussianMixture: return "gaussian_mixture";
  case Variant::Empirical: return "empirical";
  }
  return "?";
}

void TargetMeasure::require_supported(const KernelSpec& k) const {
  const bool ok =
      (variant_ == Variant::Empirical) ||
      (variant_ == Variant::UniformBox && k.family == KernelFamily::Matern32Product) ||
      (variant_ == Variant::GaussianMixture && k.family == KernelFamily::GaussianRbf);
  if (!ok)
    throw unsupported_pairing(std::string("no closed form for target '") +
                              variant_name() + "' with kernel '" +
                              to_string(k.family) + "'");
}

double TargetMeasure::potential(const KernelSpec& k, PointRef x) const {
  require_supported(k);
  if (x.size() != dim_)
    throw std::invalid_argument("potential: point dimension mismatch");
  switch (variant_) {
  case Variant::UniformBox: {
    const double eps = std::sqrt(3.0) * k.theta;
    double v = 1.0;
    for (Eigen::Index i = 0; i < dim_; ++i)
      v *= matern_uniform_potential_1d(eps, lower_[i], upper_[i], x[i]);
    return v;
  }
  case Variant::GaussianMixture: {
    double v = 0.0;
    const double d = static_cast<double>(dim_);
    for (Eigen::Index j = 0; j < betas_.size(); ++j) {
      const double c = 1.0 + 2.0 * k.theta * sigmas_[j] * sigmas_[j];
      const double r2 = (x - means_.row(j)).squaredNorm();
      v += betas_[j] * std::pow(c, -d / 2.0) * std::exp(-k.theta * r2 / c);
    }
    return v;
  }
  case Variant::Empirical: {
    double v = 0.0;
    for (Eigen::Index i = 0; i < reference_.rows(); ++i)
      v += kernel_eval(k, x, reference_.row(i));
    return v / static_cast<double>(reference_.rows());
  }
  }
  return 0.0;
}

double TargetMeasure::energy(const KernelSpec& k) const {
  require_supported(k);
  switch (variant_) {
  case Variant::UniformBox: {
    const double eps = std::sqrt(3.0) * k.theta;
    double v = 1.0;
    for (Eigen::Index i = 0; i < dim_; ++i)
      v *= matern_uniform_energy_1d(eps, lower_[i], upper_[i]);
    return v;
  }
  case Variant::GaussianMixture: {
    double v = 0.0;
    const double d = static_cast<double>(dim_);
    for (Eigen::Index j = 0; j < betas_.size(); ++j)
      for (Eigen::Index l = 0; l < betas_.size(); ++l) {
        const double c = 1.0 + 2.0 * k.theta * (sigmas_[j] * sigmas_[j] +
                                                sigmas_[l] * sigmas_[l]);
        const double r2 = (means_.row(j) - means_.row(l)).squaredNorm();
        v += betas_[j] * betas_[l] * std::pow(c, -d / 2.0) *
             std::exp(-k.theta * r2 / c);
      }
    return v;
  }
  case Variant::Empirical: {
    std::lock_guard<std::mutex> lock(energy_cache_->m);
    if (energy_cache_->filled && energy_cache_->family == k.family &&
        energy_cache_->theta == k.theta)
      return energy_cache_->value;
    const Eigen::Index c = reference_.rows();
    double v = 0.0;
    for (Eigen::Index i = 0; i < c; ++i) {
      v += kernel_diag(k, reference_.row(i));
      for (Eigen::Index j = i + 1; j < c; ++j)
        v += 2.0 * kernel_eval(k, reference_.row(i), reference_.row(j));
    }
    v /= static_cast<double>(c) * static_cast<double>(c);
    energy_cache_->filled = true;
    energy_cache_->family = k.family;
    energy_cache_->theta = k.theta;
    energy_cache_->value = v;
    return v;
  }
  }
  return 0.0;
}

TargetMoments TargetMeasure::moments(const KernelSpec& k) const {
  require_supported(k);
  TargetMoments m;
  m.energy = energy(k);
  if (variant_ == Variant::Empirical) {
    double t1 = 0.0, th = 0.0;
    for (Eigen::Index i = 0; i < reference_.rows(); ++i) {
      const double d = kernel_diag(k, reference_.row(i));
      t1 += d;
      th += std::sqrt(std::max(0.0, d));
    }
    m.tau_one = t1 / static_cast<double>(reference_.rows());
    m.tau_half = th / static_cast<double>(reference_.rows());
  } else {
    // analytic pairings use kernels with constant unit diagonal
    m.tau_one = k.kbar();
    m.tau_half = std::sqrt(k.kbar());
  }
  return m;
}

Mat TargetMeasure::sample(std::mt19937_64& rng, Eigen::Index n) const {
  if (!samplable())
    throw std::logic_error("empirical targets cannot be sampled");
  Mat out(n, dim_);
  if (variant_ == Variant::UniformBox) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < dim_; ++j)
        out(i, j) = lower_[j] + (upper_[j] - lower_[j]) * u(rng);
    return out;
  }
  // mixture: inverse-CDF on the component weights, then an isotropic draw
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = u(rng);
    double acc = 0.0;
    Eigen::Index comp = betas_.size() - 1;
    for (Eigen::Index j = 0; j < betas_.size(); ++j) {
      acc += betas_[j];
      if (v <= acc) { comp = j; break; }
    }
    for (Eigen::Index j = 0; j < dim_; ++j)
      out(i, j) = means_(comp, j) + sigmas_[comp] * g(rng);
  }
  return out;
}

} // namespace mmdq

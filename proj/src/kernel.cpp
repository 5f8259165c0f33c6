#include "mmdq/kernel.hpp"
#include "mmdq/target.hpp"

#include <cmath>

namespace mmdq {

const char* to_string(KernelFamily f) {
  switch (f) {
  case KernelFamily::Matern32Product: return "matern32_product";
  case KernelFamily::GaussianRbf: return "gaussian_rbf";
  case KernelFamily::Distance: return "distance";
  }
  return "?";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "matern32_product") return KernelFamily::Matern32Product;
  if (s == "gaussian_rbf") return KernelFamily::GaussianRbf;
  if (s == "distance") return KernelFamily::Distance;
  throw config_error("unknown kernel family: " + s);
}

KernelSpec::KernelSpec(KernelFamily f, double th) : family(f), theta(th) {
  if (f != KernelFamily::Distance && !(th > 0.0))
    throw config_error("kernel theta must be positive");
}

namespace {

inline void check_dims(PointRef x, PointRef y) {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel eval: dimension mismatch (" +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
}

} // namespace

double kernel_eval(const KernelSpec& k, PointRef x, PointRef y) {
  check_dims(x, y);
  switch (k.family) {
  case KernelFamily::Matern32Product: {
    const double eps = std::sqrt(3.0) * k.theta;
    double v = 1.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double t = eps * std::abs(x[i] - y[i]);
      v *= (1.0 + t) * std::exp(-t);
    }
    return v;
  }
  case KernelFamily::GaussianRbf:
    return std::exp(-k.theta * (x - y).squaredNorm());
  case KernelFamily::Distance:
    return -(x - y).norm();
  }
  return 0.0;
}

double kernel_diag(const KernelSpec& k, PointRef x) {
  (void)x;
  return k.family == KernelFamily::Distance ? 0.0 : 1.0;
}

double reduced_eval(const KernelSpec& k, const TargetMeasure& target,
                    PointRef x, PointRef y) {
  return kernel_eval(k, x, y) - target.potential(k, x) - target.potential(k, y) +
         target.energy(k);
}

} // namespace mmdq

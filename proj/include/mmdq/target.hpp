#pragma once

#include "mmdq/kernel.hpp"
#include "mmdq/types.hpp"

#include <memory>
#include <mutex>
#include <random>

namespace mmdq {

struct TargetMoments {
  double energy = 0.0;   // E_K(mu)
  double tau_half = 0.0; // mu-average of K(x,x)^(1/2)
  double tau_one = 0.0;  // mu-average of K(x,x)
};

// The target mu: supplies its potential P_{K,mu}(x), energy E_K(mu) and the
// moments needed by the bound constants. Only pairings with closed forms are
// accepted; there is no Monte-Carlo fallback.
class TargetMeasure {
public:
  enum class Variant { UniformBox, GaussianMixture, Empirical };

  static TargetMeasure uniform_box(Vec lower, Vec upper);
  // means: m x d, one row per component; sigmas: isotropic sd per component
  static TargetMeasure gaussian_mixture(Vec betas, Mat means, Vec sigmas);
  static TargetMeasure empirical(Mat reference_points);

  Variant variant() const { return variant_; }
  const char* variant_name() const;
  Eigen::Index dim() const { return dim_; }
  bool samplable() const { return variant_ != Variant::Empirical; }

  double potential(const KernelSpec& k, PointRef x) const;
  double energy(const KernelSpec& k) const;
  TargetMoments moments(const KernelSpec& k) const;

  // n iid draws, one per row
  Mat sample(std::mt19937_64& rng, Eigen::Index n) const;

  const Vec& box_lower() const { return lower_; }
  const Vec& box_upper() const { return upper_; }
  const Vec& mixture_betas() const { return betas_; }
  const Mat& mixture_means() const { return means_; }
  const Vec& mixture_sigmas() const { return sigmas_; }
  const Mat& reference_points() const { return reference_; }

private:
  TargetMeasure() = default;
  void require_supported(const KernelSpec& k) const;

  Variant variant_ = Variant::UniformBox;
  Eigen::Index dim_ = 0;
  Vec lower_, upper_;  // uniform_box
  Vec betas_, sigmas_; // gaussian_mixture
  Mat means_;
  Mat reference_; // empirical

  // empirical energy is an O(C^2) double sum; filled once per kernel on
  // demand and shared across copies
  struct EnergyCache {
    std::mutex m;
    bool filled = false;
    KernelFamily family = KernelFamily::GaussianRbf;
    double theta = 0.0;
    double value = 0.0;
  };
  std::shared_ptr<EnergyCache> energy_cache_ = std::make_shared<EnergyCache>();
};

} // namespace mmdq

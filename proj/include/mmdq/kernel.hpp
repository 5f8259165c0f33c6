#pragma once

#include "mmdq/types.hpp"

namespace mmdq {

enum class KernelFamily { Matern32Product, GaussianRbf, Distance };

const char* to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

// A pointwise-evaluable symmetric kernel. Evaluation is a pure function of
// (spec, x, y); all caching lives in CandidateSet.
struct KernelSpec {
  KernelFamily family = KernelFamily::GaussianRbf;
  double theta = 1.0; // bandwidth, unused by the distance kernel

  KernelSpec() = default;
  KernelSpec(KernelFamily f, double th);

  // K(x,x') >= 0 everywhere
  bool positive() const { return family != KernelFamily::Distance; }
  // strictly positive definite; the distance kernel is only CISPD on
  // mass-one measures and is rejected by all construction algorithms
  bool spd() const { return family != KernelFamily::Distance; }
  // uniform bound on K(x,x) over the whole domain
  double kbar() const { return family == KernelFamily::Distance ? 0.0 : 1.0; }
};

double kernel_eval(const KernelSpec& k, PointRef x, PointRef y);

// K(x,x) without forming a pair
double kernel_diag(const KernelSpec& k, PointRef x);

class TargetMeasure;

// K_mu(x,y) = K(x,y) - P(x) - P(y) + E, the kernel recentred at the target
double reduced_eval(const KernelSpec& k, const TargetMeasure& target,
                    PointRef x, PointRef y);

} // namespace mmdq

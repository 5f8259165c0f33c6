#pragma once

#include "mmdq/kernel.hpp"
#include "mmdq/target.hpp"
#include "mmdq/types.hpp"

#include <cstdint>
#include <string>

namespace mmdq {

// Where the finite candidate pool comes from.
struct CandidateSource {
  enum class Mode { File, UniformRng, Halton, IidTarget };

  Mode mode = Mode::IidTarget;
  std::string path;                  // File
  std::uint64_t seed = 0;            // UniformRng / IidTarget
  std::uint64_t offset = 1;          // Halton start index
  Vec box_lower, box_upper;          // UniformRng / Halton
  bool resample_each_iteration = false;

  static const char* mode_name(Mode m);
};

// The candidate pool with per-point caches. Immutable once built.
struct CandidateSet {
  Mat points;        // C x d
  Vec diag;          // K(x_i, x_i)
  Vec pot;           // P_{K,mu}(x_i)
  double kbar_c = 0.0;     // max diag
  double kmu_bar_c = 0.0;  // max diag - 2 pot + E
  double target_energy = 0.0;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  double reduced_diag(Eigen::Index i) const {
    return diag[i] - 2.0 * pot[i] + target_energy;
  }
};

// radical-inverse Halton coordinate for a given base and index
double halton_radical_inverse(std::uint64_t index, unsigned base);

// Generates/loads C points and fills the kernel/potential caches.
// Exact duplicates are removed (with a warning on stderr) and C shrinks.
CandidateSet build_candidates(const CandidateSource& src, Eigen::Index c,
                              const TargetMeasure& target, const KernelSpec& kernel);

// Fresh iid pool for iteration k of a resampling run; deterministic in
// (src.seed, iteration).
CandidateSet resample_candidates(const CandidateSource& src, std::uint64_t iteration,
                                 Eigen::Index c, const TargetMeasure& target,
                                 const KernelSpec& kernel);

// point generation without the kernel caches (used by the theta heuristic,
// which must pick theta before the kernel exists)
Mat generate_candidate_points(const CandidateSource& src, Eigen::Index c,
                              const TargetMeasure& target);

void fill_candidate_caches(CandidateSet& cs, const TargetMeasure& target,
                           const KernelSpec& kernel);

Mat load_points_csv(const std::string& path);

} // namespace mmdq

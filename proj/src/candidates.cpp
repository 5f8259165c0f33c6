#include "mmdq/candidates.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace mmdq {

const char* CandidateSource::mode_name(Mode m) {
  switch (m) {
  case Mode::File: return "file";
  case Mode::UniformRng: return "uniform_rng";
  case Mode::Halton: return "halton";
  case Mode::IidTarget: return "iid_target";
  }
  return "?";
}

double halton_radical_inverse(std::uint64_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

namespace {

const unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                            31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

Mat halton_points(std::uint64_t offset, Eigen::Index c, const Vec& lo, const Vec& hi) {
  const Eigen::Index d = lo.size();
  if (d > static_cast<Eigen::Index>(std::size(kPrimes)))
    throw config_error("halton: dimension too large for the prime table");
  Mat pts(c, d);
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double u = halton_radical_inverse(offset + static_cast<std::uint64_t>(i),
                                              kPrimes[j]);
      pts(i, j) = lo[j] + (hi[j] - lo[j]) * u;
    }
  return pts;
}

Mat uniform_points(std::uint64_t seed, Eigen::Index c, const Vec& lo, const Vec& hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat pts(c, lo.size());
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < lo.size(); ++j)
      pts(i, j) = lo[j] + (hi[j] - lo[j]) * u(rng);
  return pts;
}

Mat dedup_exact(const Mat& pts, Eigen::Index* removed) {
  std::vector<Eigen::Index> order(pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      if (pts(a, j) < pts(b, j)) return true;
      if (pts(a, j) > pts(b, j)) return false;
    }
    return a < b;
  });
  std::vector<bool> drop(pts.rows(), false);
  Eigen::Index kept = pts.rows();
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (pts.row(order[i]) == pts.row(order[i - 1])) {
      drop[order[i]] = true;
      --kept;
    }
  }
  *removed = pts.rows() - kept;
  if (*removed == 0) return pts;
  Mat out(kept, pts.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    if (!drop[i]) out.row(r++) = pts.row(i);
  return out;
}

} // namespace

Mat load_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read candidate file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  Eigen::Index d = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw config_error(path + ":" + std::to_string(lineno) +
                           ": not a number: '" + cell + "'");
      }
    }
    if (row.empty()) continue;
    if (d < 0) d = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != d)
      throw config_error(path + ":" + std::to_string(lineno) +
                         ": row has " + std::to_string(row.size()) +
                         " columns, expected " + std::to_string(d));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw config_error("candidate file has no data rows: " + path);
  Mat pts(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      pts(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return pts;
}

Mat generate_candidate_points(const CandidateSource& src, Eigen::Index c,
                              const TargetMeasure& target) {
  if (c < 1 && src.mode != CandidateSource::Mode::File)
    throw config_error("candidate count must be at least 1");
  switch (src.mode) {
  case CandidateSource::Mode::File:
    return load_points_csv(src.path);
  case CandidateSource::Mode::Halton: {
    const Vec& lo = src.box_lower.size() ? src.box_lower : target.box_lower();
    const Vec& hi = src.box_upper.size() ? src.box_upper : target.box_upper();
    if (lo.size() == 0) throw config_error("halton: no box given");
    return halton_points(src.offset, c, lo, hi);
  }
  case CandidateSource::Mode::UniformRng: {
    const Vec& lo = src.box_lower.size() ? src.box_lower : target.box_lower();
    const Vec& hi = src.box_upper.size() ? src.box_upper : target.box_upper();
    if (lo.size() == 0) throw config_error("uniform_rng: no box given");
    return uniform_points(src.seed, c, lo, hi);
  }
  case CandidateSource::Mode::IidTarget: {
    if (!target.samplable())
      throw config_error("iid_target candidates require a samplable target");
    std::mt19937_64 rng(src.seed);
    return target.sample(rng, c);
  }
  }
  throw config_error("unknown candidate mode");
}

void fill_candidate_caches(CandidateSet& cs, const TargetMeasure& target,
                           const KernelSpec& kernel) {
  const Eigen::Index c = cs.points.rows();
  cs.diag.resize(c);
  cs.pot.resize(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    cs.diag[i] = kernel_diag(kernel, cs.points.row(i));
    cs.pot[i] = target.potential(kernel, cs.points.row(i));
  }
  cs.target_energy = target.energy(kernel);
  cs.kbar_c = cs.diag.maxCoeff();
  cs.kmu_bar_c = (cs.diag.array() - 2.0 * cs.pot.array() + cs.target_energy).maxCoeff();
}

CandidateSet build_candidates(const CandidateSource& src, Eigen::Index c,
                              const TargetMeasure& target, const KernelSpec& kernel) {
  Mat pts = generate_candidate_points(src, c, target);
  if (pts.cols() != target.dim())
    throw config_error("candidate dimension " + std::to_string(pts.cols()) +
                       " does not match target dimension " +
                       std::to_string(target.dim()));
  Eigen::Index removed = 0;
  pts = dedup_exact(pts, &removed);
  if (removed > 0)
    std::cerr << "warning: removed " << removed
              << " duplicate candidate point(s); C = " << pts.rows() << "\n";
  if (pts.rows() == 0) throw config_error("candidate set empty after dedup");
  CandidateSet cs;
  cs.points = std::move(pts);
  fill_candidate_caches(cs, target, kernel);
  return cs;
}

CandidateSet resample_candidates(const CandidateSource& src, std::uint64_t iteration,
                                 Eigen::Index c, const TargetMeasure& target,
                                 const KernelSpec& kernel) {
  if (!src.resample_each_iteration)
    throw config_error("resample_candidates called without resample_each_iteration");
  if (src.mode != CandidateSource::Mode::IidTarget)
    throw config_error("resampling needs iid_target candidates, not " +
                       std::string(CandidateSource::mode_name(src.mode)));
  CandidateSource per_iter = src;
  // splitmix-style mixing keeps streams for distinct iterations disjoint
  std::uint64_t z = src.seed + 0x9e3779b97f4a7c15ULL * (iteration + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  per_iter.seed = z ^ (z >> 31);
  per_iter.resample_each_iteration = false;
  return build_candidates(per_iter, c, target, kernel);
}

} // namespace mmdq

#include "helpers.hpp"
#include "mmdq/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <thread>

using namespace mmdq;

namespace {

// quadrature oracle for the 1-d Matern x uniform potential on [0,1]
double matern_pot_quad(double eps, double x, double abs_tol = 1e-12) {
  return integrate(
      [&](double s) {
        const double u = eps * std::abs(x - s);
        return (1.0 + u) * std::exp(-u);
      },
      0.0, 1.0, abs_tol);
}

} // namespace

TEST_CASE("construction validation") {
  CHECK_THROWS_AS(TargetMeasure::uniform_box(Vec::Ones(2), Vec::Zero(2)), config_error);
  Vec bad(2);
  bad << 0.7, 0.7; // sums to 1.4
  CHECK_THROWS_AS(TargetMeasure::gaussian_mixture(bad, Mat::Zero(2, 2), Vec::Ones(2)),
                  config_error);
  Vec beta(1);
  beta << 1.0;
  Vec sig(1);
  sig << -0.5;
  CHECK_THROWS_AS(TargetMeasure::gaussian_mixture(beta, Mat::Zero(1, 2), sig),
                  config_error);
  CHECK_THROWS_AS(TargetMeasure::empirical(Mat(0, 2)), config_error);
}

TEST_CASE("unsupported pairings error with both names") {
  const TargetMeasure box = TargetMeasure::uniform_box(Vec::Zero(2), Vec::Ones(2));
  const KernelSpec rbf(KernelFamily::GaussianRbf, 1.0);
  RowVec x(2);
  x.setZero();
  try {
    box.potential(rbf, x);
    FAIL("expected unsupported_pairing");
  } catch (const unsupported_pairing& e) {
    const std::string msg = e.what();
    CHECK(msg.find("uniform_box") != std::string::npos);
    CHECK(msg.find("gaussian_rbf") != std::string::npos);
  }
}

TEST_CASE("single gaussian potential and energy closed forms") {
  const TargetMeasure t = testutil::single_gaussian2d();
  const KernelSpec k(KernelFamily::GaussianRbf, 1.0);
  RowVec mean(2);
  mean.setZero();
  CHECK(t.potential(k, mean) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(t.energy(k) == doctest::Approx(0.5).epsilon(1e-14));

  // Monte-Carlo cross-check of the potential at random points
  std::mt19937_64 rng(17);
  const Mat sample = t.sample(rng, 100000);
  const Mat xs = t.sample(rng, 10);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    double sum = 0.0, sumsq = 0.0;
    for (Eigen::Index j = 0; j < sample.rows(); ++j) {
      const double v = kernel_eval(k, xs.row(i), sample.row(j));
      sum += v;
      sumsq += v * v;
    }
    const double mc = sum / 1e5;
    const double se = std::sqrt((sumsq / 1e5 - mc * mc) / 1e5);
    CHECK(std::abs(t.potential(k, xs.row(i)) - mc) <= 3.0 * se);
  }
}

TEST_CASE("matern x uniform potential against the quadrature oracle") {
  // sqrt(3)*theta = 1 at x = 0: int_0^1 (1+t)exp(-t) dt = 2 - 3/e
  const double eps1 = 1.0;
  const KernelSpec k1(KernelFamily::Matern32Product, eps1 / std::sqrt(3.0));
  const TargetMeasure box1 = TargetMeasure::uniform_box(Vec::Zero(1), Vec::Ones(1));
  RowVec zero1(1);
  zero1.setZero();
  const double expected = 2.0 - 3.0 / std::exp(1.0);
  CHECK(box1.potential(k1, zero1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(box1.potential(k1, zero1) - matern_pot_quad(eps1, 0.0)) < 1e-10);

  // random points at the production bandwidth, 2-d product form
  const KernelSpec k(KernelFamily::Matern32Product, 10.0);
  const TargetMeasure box = TargetMeasure::uniform_box(Vec::Zero(2), Vec::Ones(2));
  const double eps = std::sqrt(3.0) * 10.0;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    RowVec x(2);
    x << u(rng), u(rng);
    const double quad = matern_pot_quad(eps, x[0]) * matern_pot_quad(eps, x[1]);
    CHECK(std::abs(box.potential(k, x) - quad) < 1e-10);
  }
}

TEST_CASE("matern x uniform energy against nested quadrature") {
  const double theta = 3.0;
  const double eps = std::sqrt(3.0) * theta;
  const KernelSpec k(KernelFamily::Matern32Product, theta);
  const TargetMeasure box = TargetMeasure::uniform_box(Vec::Zero(1), Vec::Ones(1));
  const double e2 = integrate(
      [&](double x) { return matern_pot_quad(eps, x, 1e-13); }, 0.0, 1.0, 1e-12);
  CHECK(box.energy(k) == doctest::Approx(e2).epsilon(1e-9));
}

TEST_CASE("general boxes keep the product structure") {
  const KernelSpec k(KernelFamily::Matern32Product, 2.0);
  Vec lo(2), hi(2);
  lo << -1.0, 0.5;
  hi << 2.0, 1.5;
  const TargetMeasure box = TargetMeasure::uniform_box(lo, hi);
  const double eps = std::sqrt(3.0) * 2.0;
  RowVec x(2);
  x << 0.3, 1.1;
  double expect = 1.0;
  for (int d = 0; d < 2; ++d) {
    expect *= integrate(
                  [&](double s) {
                    const double u = eps * std::abs(x[d] - s);
                    return (1.0 + u) * std::exp(-u);
                  },
                  lo[d], hi[d], 1e-13) /
              (hi[d] - lo[d]);
  }
  CHECK(box.potential(k, x) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("energy identities") {
  const KernelSpec k(KernelFamily::GaussianRbf, 1.0);
  // one-point empirical target: energy is K(x,x)
  Mat one(1, 2);
  one << 0.4, -0.2;
  CHECK(TargetMeasure::empirical(one).energy(k) == doctest::Approx(1.0));
  CHECK(TargetMeasure::empirical(one).potential(k, one.row(0)) == doctest::Approx(1.0));

  // a two-component mixture with identical components collapses
  Vec betas(2);
  betas << 0.5, 0.5;
  Mat means(2, 2);
  means << 0.3, 0.3, 0.3, 0.3;
  const TargetMeasure dup =
      TargetMeasure::gaussian_mixture(betas, means, Vec::Constant(2, 0.5));
  Vec b1(1);
  b1 << 1.0;
  const TargetMeasure single =
      TargetMeasure::gaussian_mixture(b1, means.topRows(1), Vec::Constant(1, 0.5));
  CHECK(dup.energy(k) == doctest::Approx(single.energy(k)).epsilon(1e-14));
}

TEST_CASE("energy equals the mu-average of the potential") {
  const TargetMeasure t = testutil::mixture3();
  const KernelSpec k(KernelFamily::GaussianRbf, 2.0);
  std::mt19937_64 rng(29);
  const Eigen::Index n = 200000;
  const Mat sample = t.sample(rng, n);
  double sum = 0.0, sumsq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = t.potential(k, sample.row(i));
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double se =
      std::sqrt((sumsq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
  CHECK(std::abs(t.energy(k) - mean) <= 3.0 * se);
}

TEST_CASE("moments") {
  const KernelSpec rbf(KernelFamily::GaussianRbf, 2.0);
  const KernelSpec mat(KernelFamily::Matern32Product, 2.0);
  const TargetMeasure mix = testutil::mixture3();
  const TargetMeasure box = TargetMeasure::uniform_box(Vec::Zero(2), Vec::Ones(2));
  CHECK(mix.moments(rbf).tau_one == 1.0);
  CHECK(box.moments(mat).tau_half == 1.0);
  CHECK(mix.moments(rbf).energy <=
        mix.moments(rbf).tau_half * mix.moments(rbf).tau_half);
  std::mt19937_64 rng(31);
  const Mat ref = testutil::random_points(rng, 9, 2);
  const TargetMeasure emp = TargetMeasure::empirical(ref);
  CHECK(emp.moments(rbf).tau_one == doctest::Approx(1.0));
  const KernelSpec kd(KernelFamily::Distance, 1.0);
  CHECK(emp.moments(kd).tau_one == doctest::Approx(0.0));
}

TEST_CASE("sampling is deterministic per seed") {
  const TargetMeasure t = testutil::mixture3();
  std::mt19937_64 a(42), b(42), c(43);
  CHECK(t.sample(a, 32) == t.sample(b, 32));
  CHECK(t.sample(a, 8) != t.sample(c, 8));
}

TEST_CASE("evaluation is safe from concurrent workers") {
  // pure lookups plus the idempotent empirical energy cache
  std::mt19937_64 rng(91);
  const Mat ref = testutil::random_points(rng, 64, 2);
  const TargetMeasure emp = TargetMeasure::empirical(ref);
  const TargetMeasure mix = testutil::mixture3();
  const KernelSpec k(KernelFamily::GaussianRbf, 1.0);
  std::vector<double> energies(8, 0.0);
  std::vector<double> pots(8, 0.0);
  {
    std::vector<std::thread> workers;
    for (int w = 0; w < 8; ++w)
      workers.emplace_back([&, w] {
        RowVec x(2);
        x << 0.1 * w, -0.05 * w;
        energies[static_cast<std::size_t>(w)] = emp.energy(k);
        pots[static_cast<std::size_t>(w)] = mix.potential(k, x);
      });
    for (auto& t : workers) t.join();
  }
  for (int w = 1; w < 8; ++w)
    CHECK(energies[static_cast<std::size_t>(w)] == energies[0]);
  RowVec x0(2);
  x0 << 0.0, 0.0;
  CHECK(pots[0] == mix.potential(k, x0));
}

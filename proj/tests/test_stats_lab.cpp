#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "vsbbm/rng.hpp"
#include "vsbbm/runner.hpp"
#include "vsbbm/stats_lab.hpp"

using namespace vsbbm;

namespace {
ReplicateSpec spec_for(const SpeedProfile& p, std::vector<double> checkpoints, double retention, std::uint64_t seed) {
  ReplicateSpec s{p, BranchingLaw::binary(), std::move(checkpoints), PruneSetting{}, 50'000'000, retention, {1.0},
                  PathWindowParams{}, seed};
  return s;
}
}  // namespace

TEST_CASE("basic statistics") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS(median({}));
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == 2.5);
  CHECK(standard_error(v) == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  // Pairwise summation keeps 1 + n * 1e-16 style sums accurate.
  std::vector<double> many(1 << 20, 0.1);
  CHECK(pairwise_sum(many) == doctest::Approx(0.1 * (1 << 20)).epsilon(1e-14));
}

TEST_CASE("derivative martingale") {
  const double r = 5.0;
  const std::vector<double> at_line{std::sqrt(2.0) * r};
  CHECK(derivative_martingale(at_line, r) == doctest::Approx(0.0).scale(1.0));
  const std::vector<double> below{std::sqrt(2.0) * r - 1.0};
  CHECK(derivative_martingale(below, r) == doctest::Approx(std::exp(-std::sqrt(2.0))));
  CHECK(derivative_martingale(below, r) == doctest::Approx(0.24312).epsilon(1e-4));

  CounterStream rng(1, 1);
  std::vector<double> xs(50);
  for (auto& x : xs) x = 3.0 * rng.normal() + 5.0;
  const double z = derivative_martingale(xs, r);
  std::reverse(xs.begin(), xs.end());
  std::rotate(xs.begin(), xs.begin() + 17, xs.end());
  CHECK(derivative_martingale(xs, r) == doctest::Approx(z).epsilon(1e-13));
}

TEST_CASE("mckean martingale") {
  const std::vector<double> origin{0.0};
  CHECK(mckean_martingale(origin, 0.0, 0.8) == 1.0);
  const double r = 3.0;
  const std::vector<double> on_line{std::sqrt(2.0) * r};
  CHECK(mckean_martingale(on_line, r, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("mckean martingale is stable for sigma below one") {
  ReplicateSpec s = spec_for(SpeedProfile::homogeneous(12.0), {8.0, 12.0}, 0.0, 41);
  s.mckean_sigmas = {0.8};
  const auto recs = simulate_batch(s, 0, 400, 1);
  std::vector<double> diff;
  for (const auto& rec : recs) diff.push_back(*rec.Y_at(12.0, 0.8) - *rec.Y_at(8.0, 0.8));
  CHECK(std::abs(mean(diff)) <= 3.0 * standard_error(diff));
}

TEST_CASE("empirical cdf and KS") {
  const EmpiricalCdf F({3.0, 1.0, 2.0, 2.0});
  CHECK(F(0.5) == 0.0);
  CHECK(F(2.0) == 0.75);
  CHECK(F(3.0) == 1.0);
  CHECK(ks_two_sample({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(ks_two_sample({1.0, 2.0}, {3.0, 4.0}) == 1.0);
  CHECK(ks_two_sample({1.0, 2.0, 3.0, 4.0}, {2.5}) == doctest::Approx(0.5));
  // Single point against U(0,1): sup is max(x, 1 - x).
  CHECK(ks_one_sample({0.3}, [](double x) { return std::clamp(x, 0.0, 1.0); }) == doctest::Approx(0.7));
  CounterStream rng(2, 2);
  std::vector<double> u(20000);
  for (auto& v : u) v = rng.uniform();
  CHECK(ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("lalley sellke fit on synthetic data") {
  const std::size_t n = 100000;
  for (bool random_z : {false, true}) {
    std::vector<double> y(n);
    std::vector<double> z(n);
    CounterStream rng(9, random_z);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = random_z ? std::exp(0.5 * rng.normal()) : 1.0;
      y[i] = sample_gumbel_shift(1.0, z[i], rng.uniform());
    }
    const auto fit = lalley_sellke_fit(y, z);
    CHECK(fit.c_hat == doctest::Approx(1.0).epsilon(0.05));
    CHECK(fit.sup_distance <= 0.01);
    CHECK(fit.z_used == n);
    CHECK(fit.y_grid.size() == 41);
    CHECK(fit.y_grid.front() == -4.0);
    CHECK(fit.y_grid.back() == 6.0);
    // Scaling Z by lambda scales c by 1/lambda.
    for (double lambda : {0.5, 2.0}) {
      std::vector<double> zl = z;
      for (auto& v : zl) v *= lambda;
      CHECK(lalley_sellke_fit(y, zl).c_hat * lambda == doctest::Approx(fit.c_hat).epsilon(0.02));
    }
  }
}

TEST_CASE("lalley sellke fit drops non-positive Z") {
  std::vector<double> y{0.0, 0.5, 1.0, -0.5};
  CHECK_THROWS(lalley_sellke_fit(y, {0.0, -1.0, -2.0, 0.0}));
  const auto fit = lalley_sellke_fit(y, {1.0, -1.0, 1.0, 1.0});
  CHECK(fit.z_dropped == 1);
  CHECK(fit.z_used == 3);
  CHECK_THROWS(lalley_sellke_fit({}, {}));
}

TEST_CASE("mixture cdf with Z = 1 is a Gumbel") {
  const std::vector<double> z{1.0};
  const auto F = mixture_cdf({-1.0, 0.0, 2.0}, z, 1.5);
  CHECK(F[0] == doctest::Approx(std::exp(-1.5 * std::exp(std::sqrt(2.0)))));
  CHECK(F[1] == doctest::Approx(std::exp(-1.5)));
  CHECK(F[2] == doctest::Approx(std::exp(-1.5 * std::exp(-2.0 * std::sqrt(2.0)))));
}

TEST_CASE("least squares") {
  // y = 2 x - 1 + noise-free
  const std::vector<std::vector<double>> X{{0.0, 1.0}, {1.0, 1.0}, {2.0, 1.0}, {3.0, 1.0}};
  const auto r = ordinary_least_squares(X, {-1.0, 1.0, 3.0, 5.0});
  CHECK(r.coefficients[0] == doctest::Approx(2.0));
  CHECK(r.coefficients[1] == doctest::Approx(-1.0));
  CHECK(r.residual_rms == doctest::Approx(0.0).scale(1.0));
  // Hand-solved normal equations for a noisy line.
  const auto q = ordinary_least_squares(X, {0.0, 1.0, 1.0, 3.0});
  CHECK(q.coefficients[0] == doctest::Approx(0.9));
  CHECK(q.coefficients[1] == doctest::Approx(-0.1));
  CHECK_THROWS(ordinary_least_squares({{1.0, 1.0}}, {1.0}));
}

TEST_CASE("log coefficient regression recovers planted values") {
  for (auto sign : {ProfileKind::Homogeneous, ProfileKind::Plus, ProfileKind::Minus}) {
    const std::vector<double> ts{40.0, 80.0, 160.0, 320.0};
    std::vector<double> v;
    for (double t : ts) {
      const auto p = sign == ProfileKind::Homogeneous ? SpeedProfile::homogeneous(t)
                                                      : SpeedProfile::two_speed(sign, 0.25, t);
      v.push_back(leading_term(p) - 0.9 * std::log(t) + 2.5);
    }
    const auto fit = log_coefficient_regression(ts, v, sign, 0.25);
    CHECK(fit.coefficient == doctest::Approx(-0.9));
    CHECK(fit.intercept == doctest::Approx(2.5));
  }
  CHECK_THROWS(log_coefficient_regression({40.0, 80.0, 160.0}, {1.0, 2.0, 3.0}, ProfileKind::Minus, 0.25));
}

TEST_CASE("front fit recovers planted values") {
  std::vector<double> ts;
  std::vector<double> xs;
  for (double t = 20.0; t <= 100.0; t += 1.0) {
    ts.push_back(t);
    xs.push_back(std::sqrt(2.0) * t - kBramsonLog * std::log(t) + 0.3 - 1.2 / std::sqrt(t));
  }
  const auto with = front_fit(ts, xs, true);
  CHECK(with.slope == doctest::Approx(std::sqrt(2.0)));
  CHECK(with.log_coefficient == doctest::Approx(-kBramsonLog));
  CHECK(*with.inverse_sqrt_coefficient == doctest::Approx(-1.2));
  const auto without = front_fit(ts, xs);
  CHECK_FALSE(without.inverse_sqrt_coefficient.has_value());
}

TEST_CASE("laplace functional and clusters on simulated records") {
  const auto recs = simulate_batch(spec_for(SpeedProfile::homogeneous(8.0), {4.0, 6.0, 8.0}, 10.0, 3), 0, 300, 1);
  CHECK(laplace_functional(recs, StepFunction{}, 0.3).value == 1.0);

  // Large weight on one step: probability that no particle exceeds u + y + m.
  const double m = recentering(SpeedProfile::homogeneous(8.0));
  for (double u : {-1.0, 0.0, 1.0}) {
    const auto est = laplace_functional(recs, StepFunction{{50.0}, {u}}, 0.0);
    double below = 0.0;
    for (const auto& r : recs) below += r.max < u + m;
    CHECK(est.value == doctest::Approx(below / recs.size()).epsilon(1e-9));
  }
  // Monotone in c and in u.
  double prev = 1.0;
  for (double c : {0.1, 0.5, 1.0, 3.0}) {
    const double v = laplace_functional(recs, StepFunction{{c}, {0.0}}, 0.0).value;
    CHECK(v <= prev);
    prev = v;
  }
  prev = 0.0;
  for (double u : {-2.0, -1.0, 0.0, 1.0}) {
    const double v = laplace_functional(recs, StepFunction{{1.0}, {u}}, 0.0).value;
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(laplace_functional(recs, StepFunction{{1.0}, {-20.0}}, 0.0), RetentionError);

  const auto own = cluster_decomposition(recs, 0.0);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(own[i].size() == recs[i].top.size());
    for (const auto& c : own[i]) CHECK(c.size() == 1);
  }
  const auto grouped = cluster_decomposition(recs, 2.0);
  std::size_t members = 0;
  for (const auto& c : grouped[0]) members += c.size();
  CHECK(members == recs[0].top.size());
  CHECK(summarize_clusters(grouped).mean_size >= 1.0);
  CHECK_THROWS(cluster_decomposition(recs, 3.0));
}

TEST_CASE("single particle replicate is one cluster") {
  ReplicateRecord r;
  r.t = 1.0;
  r.max = 0.7;
  r.checkpoints = {1.0};
  TopParticle p;
  p.position = 0.7;
  p.ancestors = {0.7};
  p.ancestor_lineages = {42};
  r.top = {p};
  const auto c = cluster_decomposition({r}, 0.0);
  REQUIRE(c[0].size() == 1);
  CHECK(c[0][0].size() == 1);
}

TEST_CASE("laplace slope in y") {
  const auto recs = simulate_batch(spec_for(SpeedProfile::homogeneous(12.0), {12.0}, 8.0, 4), 0, 1000, 1);
  const std::vector<double> ys{-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
  const auto fit = laplace_fit(recs, StepFunction{{1.0}, {0.0}}, ys);

  // Direct count of particles above m + y.
  const double m = recentering(SpeedProfile::homogeneous(12.0));
  double sy = 0.0, sv = 0.0, syy = 0.0, syv = 0.0;
  for (double y : ys) {
    double psi = 0.0;
    for (const auto& r : recs) {
      int n = 0;
      for (const auto& p : r.top) n += p.position >= m + y;
      psi += std::exp(-n);
    }
    const double v = std::log(-std::log(psi / recs.size()));
    sy += y;
    sv += v;
    syy += y * y;
    syv += y * v;
  }
  const double k = static_cast<double>(ys.size());
  const double slope = (k * syv - sy * sv) / (k * syy - sy * sy);
  CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-9));
  // The random shift flattens the bulk slope below sqrt 2 at this horizon.
  CHECK(fit.slope < -0.5);
  CHECK(fit.slope > -std::sqrt(2.0) * 1.1);
}

TEST_CASE("localisation histogram") {
  ReplicateRecord r;
  r.t = 10.0;
  r.max = 5.0;
  for (double x : {5.0, 4.5, 3.0}) {
    TopParticle p;
    p.position = x;
    p.half_offset = x;
    p.in_G = x > 4.0;
    r.top.push_back(p);
  }
  const auto near = localisation_histogram({r}, {1.0, 1.0});
  CHECK(near.offsets.size() == 2);
  CHECK(near.median == doctest::Approx(4.75));
  CHECK(near.exceedance == 0.0);
  const auto all = localisation_histogram({r}, {1e9, 0.5});
  CHECK(all.offsets.size() == 3);
  CHECK(all.exceedance == doctest::Approx(1.0 / 3.0));
  CHECK(std::accumulate(all.counts.begin(), all.counts.end(), std::size_t{0}) == 3);
}

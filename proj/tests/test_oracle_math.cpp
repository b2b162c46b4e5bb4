#include <cmath>
#include <numbers>

#include "doctest.h"
#include "vsbbm/oracle_math.hpp"
#include "vsbbm/rng.hpp"

using namespace vsbbm;

namespace {
double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Condition on the bridge value at time r, then apply the exact two-point
// bridge formula on [r, span]. Trapezoid in the Gaussian variable.
double stay_below_from_r_quadrature(double y, double r, double span) {
  const double mu = -y * r / span;
  const double sd = std::sqrt(r * (span - r) / span);
  const int n = 200000;
  const double lo = mu - 12.0 * sd;
  const double hi = 0.0;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + h * i;
    const double dens = std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
    const double stay = -std::expm1(-2.0 * (-x) * y / (span - r));
    acc += (i == 0 || i == n ? 0.5 : 1.0) * dens * stay;
  }
  return acc * h;
}
}  // namespace

TEST_CASE("gaussian tail") {
  CHECK(gaussian_tail(0.0) == doctest::Approx(0.5));
  CHECK(gaussian_tail(1.0) == doctest::Approx(0.158655253931457));
  CHECK(gaussian_tail(-2.0) == doctest::Approx(0.977249868051821));
  CHECK(gaussian_tail(10.0) == doctest::Approx(7.61985302416e-24).epsilon(1e-9));
}

TEST_CASE("bridge stay below") {
  CHECK(bridge_stay_below(0.0, 1.0, 1.0) == 0.0);
  CHECK(bridge_stay_below(1.0, 1.0, 2.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(bridge_stay_below(1.0, 1.0, 2.0) == doctest::Approx(0.63212).epsilon(1e-5));
  const double small = bridge_stay_below(0.1, 0.1, 100.0);
  CHECK(std::abs(small / 2.0e-4 - 1.0) < 1e-4);
  for (double a : {0.2, 1.0, 3.0}) {
    for (double b : {0.1, 2.0}) {
      CHECK(bridge_stay_below(a, b, 1.5) == doctest::Approx(bridge_stay_below(b, a, 1.5)));
    }
  }
  CHECK(bridge_stay_below(100.0, 100.0, 1.0) == doctest::Approx(1.0));
  CHECK(bridge_stay_below(1e-6, 1e-6, 1.0) < 1e-11);
  CHECK_THROWS(bridge_stay_below(1.0, 1.0, 0.0));
}

TEST_CASE("bridge stay below from r") {
  const double v = bridge_stay_below_from_r(1.0, 4.0, 1e4);
  CHECK(v == doctest::Approx(std::sqrt(2.0 / std::numbers::pi) * 2.0 / 9996.0));
  CHECK(v == doctest::Approx(1.596e-4).epsilon(1e-3));
  CHECK(bridge_stay_below_from_r(2.0, 4.0, 1e4) == doctest::Approx(2.0 * v));
  // The leading-order expression against the exact conditional integral.
  const double exact = stay_below_from_r_quadrature(1.0, 4.0, 1e4);
  CHECK(std::abs(v / exact - 1.0) < 0.2);
}

TEST_CASE("gaussian max bound") {
  CHECK(gaussian_max_bound(0.0, 2.0) == doctest::Approx(1.0 / (std::sqrt(2.0 * std::numbers::pi) * 2.0)));
  CHECK(gaussian_max_bound(0.0, 2.0) == doctest::Approx(0.19947).epsilon(1e-4));
  double prev = gaussian_max_bound(0.0, 6.0);
  for (double x = 0.1; x < 10.0; x += 0.1) {
    const double b = gaussian_max_bound(x, 6.0);
    CHECK(b < prev);
    prev = b;
  }
  // Dominates the first-moment bound e^t P(N(0,t) > sqrt2 t + x) up to the Mills-ratio factor.
  for (double x : {0.0, 1.0, 3.0}) {
    const double t = 6.0;
    CHECK(gaussian_max_bound(x, t) >= std::exp(t) * upper_tail((std::sqrt(2.0) * t + x) / std::sqrt(t)) * 0.999);
  }
}

TEST_CASE("many to one level count") {
  const auto h5 = SpeedProfile::homogeneous(5.0);
  CHECK(many_to_one_level_count(h5, 5.0, 3.0) == doctest::Approx(std::exp(5.0) * upper_tail(3.0 / std::sqrt(5.0))));
  CHECK(many_to_one_level_count(h5, 5.0, 3.0) == doctest::Approx(13.34).epsilon(2e-3));
  CHECK(many_to_one_level_count(h5, 5.0, 0.0) == doctest::Approx(std::exp(5.0) / 2.0));
  CHECK(many_to_one_level_count(h5, 5.0, -1e6) == doctest::Approx(std::exp(5.0)));
  const auto p = SpeedProfile::two_speed(ProfileKind::Plus, 0.3, 8.0);
  double prev = 1e300;
  for (double a = -5.0; a <= 10.0; a += 0.5) {
    const double v = many_to_one_level_count(p, 6.0, a);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(many_to_one_level_count(p, 6.0, 2.0) ==
        doctest::Approx(std::exp(6.0) * upper_tail(2.0 / std::sqrt(p.cumulative_speed(6.0)))));
}

TEST_CASE("gumbel double log") {
  // Standard Gumbel samples: -ln(-ln F) is the identity in y.
  CounterStream rng(3, 0);
  const std::size_t n = 100000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = -std::log(-std::log(rng.uniform()));
  std::sort(xs.begin(), xs.end());
  std::vector<double> ys;
  std::vector<double> F;
  for (double y = -1.0; y <= 3.0 + 1e-12; y += 0.25) {
    ys.push_back(y);
    F.push_back(double(std::upper_bound(xs.begin(), xs.end(), y) - xs.begin()) / n);
  }
  const auto curve = gumbel_double_log(ys, F);
  REQUIRE(curve.points.size() == ys.size());
  double sy = 0, sv = 0, syy = 0, syv = 0;
  for (auto [y, v] : curve.points) {
    sy += y;
    sv += v;
    syy += y * y;
    syv += y * v;
  }
  const double m = static_cast<double>(curve.points.size());
  const double slope = (m * syv - sy * sv) / (m * syy - sy * sy);
  CHECK(std::abs(slope - 1.0) <= 0.03);

  // Model law with Z = 1 at scale sqrt2.
  std::vector<double> G;
  for (double y : ys) G.push_back(std::exp(-std::exp(-std::sqrt(2.0) * y)));
  const auto exact = gumbel_double_log(ys, G);
  for (auto [y, v] : exact.points) CHECK(v == doctest::Approx(std::sqrt(2.0) * y).epsilon(1e-9).scale(1.0));

  // A point mass gives only 0 and 1.
  const auto empty = gumbel_double_log({-1.0, 0.0, 1.0}, {0.0, 1.0, 1.0});
  CHECK(empty.points.empty());
  CHECK(empty.dropped == 3);
}

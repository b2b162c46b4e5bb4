#include "vsbbm/oracle_math.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vsbbm {

double gaussian_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double bridge_stay_below(double a, double b, double T) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw std::domain_error("bridge_stay_below: endpoints must be at or below 0");
  if (!(T > 0.0)) throw std::domain_error("bridge_stay_below: T must be positive");
  return -std::expm1(-2.0 * a * b / T);
}

double bridge_stay_below_from_r(double y, double r, double span) {
  return std::sqrt(2.0 / std::numbers::pi) * std::sqrt(r) * y / (span - r);
}

double gaussian_max_bound(double x, double t) {
  if (!(x >= 0.0)) throw std::domain_error("gaussian_max_bound: x must be non-negative");
  if (!(t > 0.0)) throw std::domain_error("gaussian_max_bound: t must be positive");
  const double num = std::exp(-kSqrt2 * x - x * x / (2.0 * t));
  const double den = std::sqrt(2.0 * std::numbers::pi) * (std::sqrt(2.0 * t) + x / std::sqrt(t));
  return num / den;
}

double many_to_one_level_count(const SpeedProfile& profile, double s, double a) {
  const double var = profile.cumulative_speed(s);
  const double mass = std::exp(s);
  if (var == 0.0) return a < 0.0 ? mass : 0.0;
  return mass * gaussian_tail(a / std::sqrt(var));
}

DoubleLogCurve gumbel_double_log(const std::vector<double>& ys, const std::vector<double>& cdf) {
  if (ys.size() != cdf.size()) throw std::invalid_argument("gumbel_double_log: grid and values differ in length");
  DoubleLogCurve out;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double f = cdf[i];
    if (!(f > 0.0 && f < 1.0)) {
      ++out.dropped;
      continue;
    }
    out.points.emplace_back(ys[i], -std::log(-std::log(f)));
  }
  return out;
}

}  // namespace vsbbm

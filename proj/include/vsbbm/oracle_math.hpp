#pragma once

#include <utility>
#include <vector>

#include "vsbbm/core_model.hpp"

namespace vsbbm {

/// Standard Gaussian upper tail.
double gaussian_tail(double z);

/// P(a Brownian bridge from -a to -b over [0, T] stays below 0) = 1 - exp(-2ab/T).
double bridge_stay_below(double a, double b, double T);

/// Leading-order probability that a bridge from 0 to -y over [0, span] stays
/// below 0 on [r, span]: sqrt(2/pi) sqrt(r) y / (span - r). Asymptotic for
/// y << sqrt(span); not a probability bound.
double bridge_stay_below_from_r(double y, double r, double span);

/// e^{-sqrt2 x - x^2/2t} / (sqrt(2 pi) (sqrt(2t) + x / sqrt t)), an upper bound on
/// P(max_k x_k(t) > sqrt2 t + x) for standard BBM.
double gaussian_max_bound(double x, double t);

/// Expected number of particles above level a at time s: e^s P(N(0, Sigma^2(s)) > a).
double many_to_one_level_count(const SpeedProfile& profile, double s, double a);

struct DoubleLogCurve {
  std::vector<std::pair<double, double>> points;  // (y, -ln(-ln F(y)))
  std::size_t dropped = 0;
};

/// Gumbel linearisation of an empirical CDF tabulated on a grid. Grid points
/// with F in {0, 1} are dropped and counted.
DoubleLogCurve gumbel_double_log(const std::vector<double>& ys, const std::vector<double>& cdf);

}  // namespace vsbbm

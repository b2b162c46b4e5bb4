#include "vsbbm/stats_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <Eigen/Dense>

namespace vsbbm {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  const double upper = values[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + n / 2);
  return 0.5 * (lower + upper);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double standard_error(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("standard error needs two samples");
  const double m = mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m) * (values[i] - m);
  const double n = static_cast<double>(values.size());
  return std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
}

double derivative_martingale(std::span<const double> positions, double r, double ratio) {
  if (positions.empty()) throw std::invalid_argument("derivative_martingale: empty population");
  std::vector<double> terms(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double gap = kSqrt2 * r - positions[i];
    terms[i] = ratio * gap * std::exp(-kSqrt2 * ratio * gap);
  }
  return pairwise_sum(terms);
}

double mckean_martingale(std::span<const double> positions, double r, double sigma) {
  if (positions.empty()) throw std::invalid_argument("mckean_martingale: empty population");
  std::vector<double> terms(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    terms[i] = std::exp(kSqrt2 * sigma * positions[i] - (1.0 + sigma * sigma) * r);
  }
  return pairwise_sum(terms);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw std::invalid_argument("EmpiricalCdf: no samples");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

std::vector<double> mixture_cdf(const std::vector<double>& ys, std::span<const double> positive_Z, double c) {
  std::vector<double> out(ys.size());
  std::vector<double> terms(positive_Z.size());
  for (std::size_t g = 0; g < ys.size(); ++g) {
    const double scale = c * std::exp(-kSqrt2 * ys[g]);
    for (std::size_t i = 0; i < positive_Z.size(); ++i) terms[i] = std::exp(-scale * positive_Z[i]);
    out[g] = pairwise_sum(terms) / static_cast<double>(positive_Z.size());
  }
  return out;
}

double sample_gumbel_shift(double c, double Z, double uniform) {
  return std::log(c * Z / -std::log(uniform)) / kSqrt2;
}

LawFit lalley_sellke_fit(const std::vector<double>& recentered_max, const std::vector<double>& Z_samples,
                         const LawFitOptions& options) {
  if (recentered_max.empty()) throw std::invalid_argument("lalley_sellke_fit: no maxima");
  if (options.points < 2) throw std::invalid_argument("lalley_sellke_fit: grid needs two points");
  std::vector<double> z;
  for (double v : Z_samples) {
    if (v > 0.0 && std::isfinite(v)) z.push_back(v);
  }
  if (z.empty()) throw std::invalid_argument("lalley_sellke_fit: no positive Z samples");

  LawFit fit;
  fit.z_used = z.size();
  fit.z_dropped = Z_samples.size() - z.size();
  const double step = (options.y_high - options.y_low) / static_cast<double>(options.points - 1);
  for (std::size_t g = 0; g < options.points; ++g) fit.y_grid.push_back(options.y_low + step * static_cast<double>(g));
  const EmpiricalCdf F(recentered_max);
  for (double y : fit.y_grid) fit.empirical.push_back(F(y));

  auto objective = [&](double log_c) {
    const auto model = mixture_cdf(fit.y_grid, z, std::exp(log_c));
    double d = 0.0;
    for (std::size_t g = 0; g < model.size(); ++g) d = std::max(d, std::abs(model[g] - fit.empirical[g]));
    return d;
  };

  // Coarse scan in ln c, then golden-section refinement around the three best
  // scan points.
  const double lo = std::log(1e-6);
  const double hi = std::log(1e6);
  const int scan = 97;
  const double h = (hi - lo) / (scan - 1);
  std::vector<std::pair<double, double>> scanned;
  for (int k = 0; k < scan; ++k) {
    const double lc = lo + h * k;
    scanned.emplace_back(objective(lc), lc);
  }
  std::vector<std::pair<double, double>> seeds = scanned;
  std::sort(seeds.begin(), seeds.end());
  seeds.resize(3);

  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double best_value = std::numeric_limits<double>::infinity();
  double best_log_c = 0.0;
  for (const auto& [value, center] : seeds) {
    double a = center - h;
    double b = center + h;
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int it = 0; it < 60 && b - a > 1e-9; ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - ratio * (b - a);
        f1 = objective(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + ratio * (b - a);
        f2 = objective(x2);
      }
    }
    const double lc = f1 <= f2 ? x1 : x2;
    const double f = std::min({f1, f2, value});
    if (f < best_value) {
      best_value = f;
      best_log_c = f == value ? center : lc;
    }
  }
  fit.c_hat = std::exp(best_log_c);
  fit.model = mixture_cdf(fit.y_grid, z, fit.c_hat);
  fit.sup_distance = objective(best_log_c);
  return fit;
}

OlsResult ordinary_least_squares(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  if (X.empty() || X.size() != y.size()) throw std::invalid_argument("ordinary_least_squares: shape mismatch");
  const auto n = static_cast<Eigen::Index>(X.size());
  const auto p = static_cast<Eigen::Index>(X.front().size());
  if (n < p) throw std::invalid_argument("ordinary_least_squares: fewer points than regressors");
  Eigen::MatrixXd A(n, p);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(X[i].size()) != p) throw std::invalid_argument("ordinary_least_squares: ragged X");
    for (Eigen::Index j = 0; j < p; ++j) A(i, j) = X[i][j];
    b(i) = y[i];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < p) throw std::invalid_argument("ordinary_least_squares: regressors are collinear");
  const Eigen::VectorXd beta = qr.solve(b);
  const Eigen::VectorXd resid = b - A * beta;

  OlsResult out;
  out.coefficients.assign(beta.data(), beta.data() + p);
  out.residual_rms = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  const double dof = static_cast<double>(n - p);
  const Eigen::MatrixXd cov_unit = (A.transpose() * A).inverse();
  for (Eigen::Index j = 0; j < p; ++j) {
    out.standard_errors.push_back(dof > 0 ? std::sqrt(resid.squaredNorm() / dof * cov_unit(j, j))
                                          : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

LogRegression log_coefficient_regression(const std::vector<double>& horizons, const std::vector<double>& values,
                                         ProfileKind sign, double alpha, const LogRegressionOptions& options) {
  if (horizons.size() != values.size()) throw std::invalid_argument("log_coefficient_regression: length mismatch");
  if (horizons.size() < 4) throw std::invalid_argument("log_coefficient_regression: needs at least 4 horizons");
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const double t = horizons[i];
    const SpeedProfile p =
        sign == ProfileKind::Homogeneous ? SpeedProfile::homogeneous(t) : SpeedProfile::two_speed(sign, alpha, t);
    std::vector<double> row{std::log(t), 1.0};
    if (options.inverse_sqrt_term) row.push_back(1.0 / std::sqrt(t));
    X.push_back(std::move(row));
    y.push_back(values[i] - leading_term(p));
  }
  const OlsResult ols = ordinary_least_squares(X, y);
  LogRegression out;
  out.coefficient = ols.coefficients[0];
  out.standard_error = ols.standard_errors[0];
  out.intercept = ols.coefficients[1];
  if (options.inverse_sqrt_term) out.inverse_sqrt_coefficient = ols.coefficients[2];
  return out;
}

FrontFit front_fit(const std::vector<double>& horizons, const std::vector<double>& fronts, bool inverse_sqrt_term) {
  if (horizons.size() != fronts.size()) throw std::invalid_argument("front_fit: length mismatch");
  std::vector<std::vector<double>> X;
  for (double t : horizons) {
    std::vector<double> row{t, std::log(t), 1.0};
    if (inverse_sqrt_term) row.push_back(1.0 / std::sqrt(t));
    X.push_back(std::move(row));
  }
  const OlsResult ols = ordinary_least_squares(X, fronts);
  FrontFit out;
  out.slope = ols.coefficients[0];
  out.log_coefficient = ols.coefficients[1];
  out.intercept = ols.coefficients[2];
  if (inverse_sqrt_term) out.inverse_sqrt_coefficient = ols.coefficients[3];
  out.residual_rms = ols.residual_rms;
  return out;
}

LocalisationSummary localisation_histogram(const std::vector<ReplicateRecord>& records,
                                           const LocalisationOptions& options) {
  if (!(options.bin_width > 0.0)) throw std::invalid_argument("localisation_histogram: bin width must be positive");
  LocalisationSummary out;
  out.bin_width = options.bin_width;
  std::size_t outside = 0;
  for (const auto& r : records) {
    for (const auto& p : r.top) {
      if (p.position < r.max - options.d || !std::isfinite(p.half_offset)) continue;
      out.offsets.push_back(p.half_offset);
      if (!p.in_G) ++outside;
    }
  }
  if (out.offsets.empty()) return out;
  out.median = median(out.offsets);
  out.exceedance = static_cast<double>(outside) / static_cast<double>(out.offsets.size());
  const auto [lo, hi] = std::minmax_element(out.offsets.begin(), out.offsets.end());
  out.bin_low = std::floor(*lo / options.bin_width) * options.bin_width;
  const auto bins = static_cast<std::size_t>(std::floor((*hi - out.bin_low) / options.bin_width)) + 1;
  out.counts.assign(bins, 0);
  for (double v : out.offsets) {
    const auto b = static_cast<std::size_t>(std::floor((v - out.bin_low) / options.bin_width));
    ++out.counts[std::min(b, bins - 1)];
  }
  return out;
}

double StepFunction::operator()(double x) const {
  double s = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (x >= thresholds[l]) s += weights[l];
  }
  return s;
}

LaplaceEstimate laplace_functional(const std::vector<ReplicateRecord>& records, const StepFunction& phi, double y) {
  if (records.empty()) throw std::invalid_argument("laplace_functional: no records");
  if (phi.weights.size() != phi.thresholds.size()) throw std::invalid_argument("laplace_functional: malformed phi");
  std::vector<double> samples;
  samples.reserve(records.size());
  for (const auto& r : records) {
    const double m = recentering(r.profile());
    double exponent = 0.0;
    if (!phi.weights.empty()) {
      const double lowest = *std::min_element(phi.thresholds.begin(), phi.thresholds.end()) + y + m;
      if (lowest < r.max - r.retention_depth) {
        throw RetentionError("laplace_functional: phi reaches below the retained window");
      }
      for (const auto& p : r.top) exponent += phi(p.position - m - y);
    }
    samples.push_back(std::exp(-exponent));
  }
  LaplaceEstimate out;
  out.value = mean(samples);
  out.standard_error = samples.size() > 1 ? standard_error(samples) : 0.0;
  return out;
}

LaplaceFit laplace_fit(const std::vector<ReplicateRecord>& records, const StepFunction& phi,
                       const std::vector<double>& ys) {
  LaplaceFit out;
  std::vector<std::vector<double>> X;
  std::vector<double> target;
  for (double y : ys) {
    const double psi = laplace_functional(records, phi, y).value;
    if (!(psi > 0.0 && psi < 1.0)) continue;
    out.ys.push_back(y);
    out.values.push_back(psi);
    X.push_back({y, 1.0});
    target.push_back(std::log(-std::log(psi)));
  }
  if (X.size() < 2) throw std::invalid_argument("laplace_fit: fewer than two usable grid points");
  const OlsResult ols = ordinary_least_squares(X, target);
  out.slope = ols.coefficients[0];
  out.intercept = ols.coefficients[1];
  return out;
}

std::vector<std::vector<Cluster>> cluster_decomposition(const std::vector<ReplicateRecord>& records, double zeta) {
  std::vector<std::vector<Cluster>> out;
  for (const auto& r : records) {
    const auto k = r.checkpoint_index(r.t - zeta);
    if (!k) throw std::invalid_argument("cluster_decomposition: no snapshot at t - zeta");
    const double m = recentering(r.profile());
    std::map<std::uint64_t, std::vector<double>> groups;
    for (const auto& p : r.top) groups[p.ancestor_lineages.at(*k)].push_back(p.position);
    std::vector<Cluster> clusters;
    for (auto& [lineage, xs] : groups) {
      std::sort(xs.begin(), xs.end(), std::greater<>());
      Cluster c;
      c.leader_offset = xs.front() - m;
      for (std::size_t i = 1; i < xs.size(); ++i) c.gaps.push_back(xs.front() - xs[i]);
      clusters.push_back(std::move(c));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.leader_offset > b.leader_offset; });
    out.push_back(std::move(clusters));
  }
  return out;
}

ClusterSummary summarize_clusters(const std::vector<std::vector<Cluster>>& clusters) {
  ClusterSummary out;
  std::size_t count = 0;
  std::size_t members = 0;
  for (const auto& rep : clusters) {
    for (const auto& c : rep) {
      ++count;
      members += c.size();
      out.gaps.insert(out.gaps.end(), c.gaps.begin(), c.gaps.end());
    }
  }
  out.mean_size = count ? static_cast<double>(members) / static_cast<double>(count) : 0.0;
  return out;
}

}  // namespace vsbbm

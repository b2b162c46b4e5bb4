#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vsbbm/core_model.hpp"
#include "vsbbm/records.hpp"

namespace vsbbm {

/// Pairwise summation; the result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

double median(std::vector<double> values);
double mean(std::span<const double> values);
/// Standard error of the mean.
double standard_error(std::span<const double> values);

/// Z(r) = sum (sqrt2 r - x) e^{-sqrt2 ratio (sqrt2 r - x)} ratio. With ratio = 1
/// this is the derivative martingale of standard BBM; for the first phase of a
/// two-speed run pass sigma_1-rescaled positions and ratio = sigma_1/sigma_2.
double derivative_martingale(std::span<const double> positions, double r, double ratio = 1.0);

/// Y_sigma(r) = sum exp(sqrt2 sigma x - (1 + sigma^2) r).
double mckean_martingale(std::span<const double> positions, double r, double sigma);

class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);
  /// Fraction of samples <= x.
  double operator()(double x) const;
  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
double ks_one_sample(std::vector<double> samples, const std::function<double(double)>& cdf);

struct LawFit {
  double c_hat = 0.0;
  double sup_distance = 0.0;
  std::vector<double> y_grid;
  std::vector<double> empirical;
  std::vector<double> model;
  std::size_t z_used = 0;
  std::size_t z_dropped = 0;
};

struct LawFitOptions {
  double y_low = -4.0;
  double y_high = 6.0;
  std::size_t points = 41;
};

/// Fits P(max - m <= y) = mean_Z exp(-c Z e^{-sqrt2 y}) by minimising the sup
/// distance on a y-grid over c. Only positive Z samples enter the mixture.
LawFit lalley_sellke_fit(const std::vector<double>& recentered_max, const std::vector<double>& Z_samples,
                         const LawFitOptions& options = {});

/// Model CDF mean_Z exp(-c Z e^{-sqrt2 y}) on a grid.
std::vector<double> mixture_cdf(const std::vector<double>& ys, std::span<const double> positive_Z, double c);

/// Inverse-CDF draw from exp(-c Z e^{-sqrt2 y}) for a uniform in (0,1).
double sample_gumbel_shift(double c, double Z, double uniform);

struct OlsResult {
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  double residual_rms = 0.0;
};

/// Least squares of y on the columns of X (row-major, one row per point).
OlsResult ordinary_least_squares(const std::vector<std::vector<double>>& X, const std::vector<double>& y);

struct LogRegressionOptions {
  /// Add a t^{-1/2} regressor that absorbs the leading finite-t relaxation of
  /// a pulled front.
  bool inverse_sqrt_term = false;
};

struct LogRegression {
  double coefficient = 0.0;
  double standard_error = 0.0;
  double intercept = 0.0;
  std::optional<double> inverse_sqrt_coefficient;
};

/// OLS of value - leading_term(profile at t) against ln t across horizons.
LogRegression log_coefficient_regression(const std::vector<double>& horizons, const std::vector<double>& values,
                                         ProfileKind sign, double alpha, const LogRegressionOptions& options = {});

struct FrontFit {
  double slope = 0.0;
  double log_coefficient = 0.0;
  double intercept = 0.0;
  std::optional<double> inverse_sqrt_coefficient;
  double residual_rms = 0.0;
};

/// X(t) = a t + b ln t + c (+ d / sqrt t).
FrontFit front_fit(const std::vector<double>& horizons, const std::vector<double>& fronts,
                   bool inverse_sqrt_term = false);

struct LocalisationOptions {
  /// Particles within d of the replicate's maximum.
  double d = 1.0;
  double bin_width = 1.0;
};

struct LocalisationSummary {
  std::vector<double> offsets;
  double median = 0.0;
  /// Fraction of selected particles whose t/2 ancestor lies outside G.
  double exceedance = 0.0;
  double bin_low = 0.0;
  double bin_width = 1.0;
  std::vector<std::size_t> counts;
};

/// Offsets sqrt2 sigma_1 t/2 - x(t/2) of t/2 ancestors of near-maximal particles.
LocalisationSummary localisation_histogram(const std::vector<ReplicateRecord>& records,
                                           const LocalisationOptions& options = {});

/// phi(x) = sum_l c_l 1_{x >= u_l}.
struct StepFunction {
  std::vector<double> weights;
  std::vector<double> thresholds;
  double operator()(double x) const;
};

class RetentionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LaplaceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Mean over records of exp(-sum_k phi(x_k - m(t) - y)).
LaplaceEstimate laplace_functional(const std::vector<ReplicateRecord>& records, const StepFunction& phi, double y);

struct LaplaceFit {
  double slope = 0.0;  // of ln(-ln Psi) against y
  double intercept = 0.0;
  std::vector<double> ys;
  std::vector<double> values;
};

/// ln(-ln Psi(y)) against y over the grid points with Psi strictly in (0,1).
LaplaceFit laplace_fit(const std::vector<ReplicateRecord>& records, const StepFunction& phi,
                       const std::vector<double>& ys);

struct Cluster {
  double leader_offset = 0.0;  // leader position - m(t)
  std::vector<double> gaps;    // leader - member, members in descending order
  std::size_t size() const { return gaps.size() + 1; }
};

/// Groups each record's retained particles by their ancestor at t - zeta.
std::vector<std::vector<Cluster>> cluster_decomposition(const std::vector<ReplicateRecord>& records, double zeta);

struct ClusterSummary {
  double mean_size = 0.0;
  std::vector<double> gaps;
};

ClusterSummary summarize_clusters(const std::vector<std::vector<Cluster>>& clusters);

}  // namespace vsbbm

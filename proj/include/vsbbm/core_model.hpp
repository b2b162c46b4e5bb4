#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsbbm {

inline const double kSqrt2 = std::sqrt(2.0);
/// 3/(2*sqrt(2)), the ln t coefficient of homogeneous BBM.
inline const double kBramsonLog = 3.0 / (2.0 * std::sqrt(2.0));

enum class ProfileKind { Homogeneous, Plus, Minus };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& name);

/// Which ln t coefficient to use for the Plus profile: the sigma-dependent
/// expression 3/(2 sqrt 2)(s1 + s2(1-2a)) or its t -> infinity value
/// 3/(2 sqrt 2)(2-2a).
enum class CorrectionForm { Sigma, Asymptotic };

CorrectionForm correction_form_from_string(const std::string& name);

/// Two-speed variance profile on the horizon [0, t].
///
/// Plus means sigma_1^2 = 1 + t^{-alpha} on [0, t/2) and sigma_2^2 = 1 - t^{-alpha}
/// on [t/2, t]; Minus swaps the signs. Homogeneous has sigma^2 = 1 throughout.
/// Immutable after construction.
class SpeedProfile {
 public:
  static SpeedProfile homogeneous(double horizon);
  static SpeedProfile two_speed(ProfileKind sign, double alpha, double horizon);

  ProfileKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double horizon() const { return horizon_; }
  double change_time() const { return 0.5 * horizon_; }

  double sigma1_sq() const { return sigma1_sq_; }
  double sigma2_sq() const { return sigma2_sq_; }
  double sigma1() const { return std::sqrt(sigma1_sq_); }
  double sigma2() const { return std::sqrt(sigma2_sq_); }
  double max_sigma_sq() const { return std::max(sigma1_sq_, sigma2_sq_); }

  /// sigma^2 at real time s: sigma_1^2 for s < t/2, sigma_2^2 otherwise.
  double sigma_squared(double s) const;
  /// Sigma_t^2(s) = t A_t(s/t).
  double cumulative_speed(double s) const;
  /// Covariance of two particle positions at times s and r whose most recent
  /// common ancestor branched at time d.
  double covariance(double s, double r, double d) const;

  /// Same as cumulative_speed without the range check; the simulator calls this
  /// in its inner loop with arguments it already knows are in range.
  double cumulative_speed_unchecked(double s) const {
    const double half = 0.5 * horizon_;
    return s < half ? sigma1_sq_ * s : sigma1_sq_ * half + sigma2_sq_ * (s - half);
  }

  /// The same profile family evaluated at another horizon.
  SpeedProfile with_horizon(double horizon) const;

  std::map<std::string, std::string> to_key_values() const;
  static SpeedProfile from_key_values(const std::map<std::string, std::string>& kv);

 private:
  SpeedProfile(ProfileKind kind, double alpha, double horizon);
  void check_time(double s, const char* what) const;

  ProfileKind kind_;
  double alpha_;
  double horizon_;
  double sigma1_sq_;
  double sigma2_sq_;
};

/// Offspring distribution p_1, ..., p_K with sum 1 and mean 2.
class BranchingLaw {
 public:
  /// probabilities[k-1] = p_k.
  explicit BranchingLaw(std::vector<double> probabilities);
  static BranchingLaw binary();

  std::span<const double> probabilities() const { return probabilities_; }
  std::size_t max_offspring() const { return probabilities_.size(); }
  /// sum k (k-1) p_k
  double second_factorial_moment() const;

  /// F(u) = (1-u) - sum_k p_k (1-u)^k.
  double nonlinearity(double u) const;
  double nonlinearity_derivative(double u) const;
  /// Offspring count for a uniform draw in [0,1).
  int sample(double uniform) const {
    for (std::size_t k = 0; k + 1 < cumulative_.size(); ++k) {
      if (uniform < cumulative_[k]) return static_cast<int>(k) + 1;
    }
    return static_cast<int>(cumulative_.size());
  }
  bool is_binary() const { return binary_; }

  std::map<std::string, std::string> to_key_values() const;
  static BranchingLaw from_key_values(const std::map<std::string, std::string>& kv);

 private:
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  bool binary_ = false;
};

struct CorrectionPrediction {
  std::function<double(double)> leading_slope;  // coefficient of t, as a function of t
  double log_coefficient;                       // coefficient of ln t
};

/// Deterministic centering m(t) of the maximum.
double recentering(const SpeedProfile& profile);

/// Leading (linear in t) part of the centering.
double leading_term(const SpeedProfile& profile);

CorrectionPrediction log_correction_coefficient(ProfileKind sign, double alpha);

/// ln t coefficient for a concrete horizon. For Plus with alpha < 1/2 the Sigma
/// form keeps the sigma dependence; every other case equals the asymptotic value.
double log_coefficient_at(const SpeedProfile& profile, CorrectionForm form);

}  // namespace vsbbm

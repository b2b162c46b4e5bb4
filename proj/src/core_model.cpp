#include "vsbbm/core_model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace vsbbm {

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::string& require_key(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::invalid_argument("missing key '" + key + "'");
  return it->second;
}

double parse_double(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("key '" + key + "': not a number: '" + text + "'");
  }
  if (text.find_first_not_of(" \t", used) != std::string::npos) {
    throw std::invalid_argument("key '" + key + "': trailing characters in '" + text + "'");
  }
  return v;
}

}  // namespace

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Homogeneous: return "homogeneous";
    case ProfileKind::Plus: return "plus";
    case ProfileKind::Minus: return "minus";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(const std::string& name) {
  if (name == "homogeneous" || name == "bbm") return ProfileKind::Homogeneous;
  if (name == "plus" || name == "+") return ProfileKind::Plus;
  if (name == "minus" || name == "-") return ProfileKind::Minus;
  throw std::invalid_argument("unknown profile sign '" + name + "' (expected homogeneous, plus, minus)");
}

CorrectionForm correction_form_from_string(const std::string& name) {
  if (name == "sigma") return CorrectionForm::Sigma;
  if (name == "asymptotic") return CorrectionForm::Asymptotic;
  throw std::invalid_argument("unknown correction form '" + name + "' (expected sigma, asymptotic)");
}

SpeedProfile::SpeedProfile(ProfileKind kind, double alpha, double horizon)
    : kind_(kind), alpha_(alpha), horizon_(horizon), sigma1_sq_(1.0), sigma2_sq_(1.0) {
  // A homogeneous run of length zero is the single initial particle.
  const bool ok = kind == ProfileKind::Homogeneous ? horizon >= 0.0 : horizon > 0.0;
  if (!ok || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be positive and finite");
  if (kind == ProfileKind::Homogeneous) return;
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be positive and finite");
  }
  // t^{-alpha} < 1 keeps the smaller variance positive.
  if (horizon <= 1.0) {
    throw std::invalid_argument("two-speed profile needs horizon > 1");
  }
  const double eps = std::pow(horizon, -alpha);
  sigma1_sq_ = kind == ProfileKind::Plus ? 1.0 + eps : 1.0 - eps;
  sigma2_sq_ = 2.0 - sigma1_sq_;
}

SpeedProfile SpeedProfile::homogeneous(double horizon) {
  return SpeedProfile(ProfileKind::Homogeneous, 0.0, horizon);
}

SpeedProfile SpeedProfile::two_speed(ProfileKind sign, double alpha, double horizon) {
  if (sign == ProfileKind::Homogeneous) return homogeneous(horizon);
  return SpeedProfile(sign, alpha, horizon);
}

SpeedProfile SpeedProfile::with_horizon(double horizon) const {
  return SpeedProfile(kind_, alpha_, horizon);
}

void SpeedProfile::check_time(double s, const char* what) const {
  if (!(s >= 0.0 && s <= horizon_)) {
    throw std::domain_error(std::string(what) + ": time outside [0, horizon]");
  }
}

double SpeedProfile::sigma_squared(double s) const {
  check_time(s, "sigma_squared");
  return s < change_time() ? sigma1_sq_ : sigma2_sq_;
}

double SpeedProfile::cumulative_speed(double s) const {
  check_time(s, "cumulative_speed");
  return cumulative_speed_unchecked(s);
}

double SpeedProfile::covariance(double s, double r, double d) const {
  check_time(s, "covariance");
  check_time(r, "covariance");
  check_time(d, "covariance");
  return cumulative_speed_unchecked(std::min({d, s, r}));
}

std::map<std::string, std::string> SpeedProfile::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["sign"] = to_string(kind_);
  kv["horizon"] = format_double(horizon_);
  if (kind_ != ProfileKind::Homogeneous) kv["alpha"] = format_double(alpha_);
  return kv;
}

SpeedProfile SpeedProfile::from_key_values(const std::map<std::string, std::string>& kv) {
  const ProfileKind kind = profile_kind_from_string(require_key(kv, "sign"));
  const double horizon = parse_double(require_key(kv, "horizon"), "horizon");
  if (kind == ProfileKind::Homogeneous) return homogeneous(horizon);
  return two_speed(kind, parse_double(require_key(kv, "alpha"), "alpha"), horizon);
}

BranchingLaw::BranchingLaw(std::vector<double> probabilities) : probabilities_(std::move(probabilities)) {
  if (probabilities_.empty()) throw std::invalid_argument("branching law needs at least one probability");
  double total = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    const double p = probabilities_[i];
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("offspring probabilities must be non-negative");
    total += p;
    mean += static_cast<double>(i + 1) * p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("offspring probabilities must sum to 1");
  if (std::abs(mean - 2.0) > 1e-12) throw std::invalid_argument("offspring mean must equal 2");
  cumulative_.resize(probabilities_.size());
  std::partial_sum(probabilities_.begin(), probabilities_.end(), cumulative_.begin());
  binary_ = probabilities_.size() >= 2 && probabilities_[1] == 1.0;
}

BranchingLaw BranchingLaw::binary() { return BranchingLaw({0.0, 1.0}); }

double BranchingLaw::second_factorial_moment() const {
  double k2 = 0.0;
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    k2 += k * (k - 1.0) * probabilities_[i];
  }
  return k2;
}

double BranchingLaw::nonlinearity(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("nonlinearity: u outside [0,1]");
  if (binary_) return u - u * u;
  const double q = 1.0 - u;
  double power = q;
  double generating = 0.0;
  for (double p : probabilities_) {
    generating += p * power;
    power *= q;
  }
  return q - generating;
}

double BranchingLaw::nonlinearity_derivative(double u) const {
  if (binary_) return 1.0 - 2.0 * u;
  // d/du [(1-u) - sum p_k (1-u)^k] = -1 + sum k p_k (1-u)^{k-1}
  const double q = 1.0 - u;
  double power = 1.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    acc += static_cast<double>(i + 1) * probabilities_[i] * power;
    power *= q;
  }
  return acc - 1.0;
}

std::map<std::string, std::string> BranchingLaw::to_key_values() const {
  std::string list;
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    if (i) list += ", ";
    list += format_double(probabilities_[i]);
  }
  return {{"offspring", list}};
}

BranchingLaw BranchingLaw::from_key_values(const std::map<std::string, std::string>& kv) {
  const std::string& list = require_key(kv, "offspring");
  std::vector<double> probs;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    probs.push_back(parse_double(item.substr(first), "offspring"));
  }
  return BranchingLaw(std::move(probs));
}

double leading_term(const SpeedProfile& p) {
  const double t = p.horizon();
  if (p.kind() == ProfileKind::Plus && p.alpha() <= 0.5) {
    return kSqrt2 * 0.5 * (p.sigma1() + p.sigma2()) * t;
  }
  return kSqrt2 * t;
}

double recentering(const SpeedProfile& p) {
  const double t = p.horizon();
  const double a = p.alpha();
  const double log_t = std::log(t);
  if (p.kind() == ProfileKind::Homogeneous || a > 0.5) {
    return kSqrt2 * t - kBramsonLog * log_t;
  }
  if (p.kind() == ProfileKind::Plus) {
    return leading_term(p) - kBramsonLog * (2.0 - 2.0 * a) * log_t;
  }
  return kSqrt2 * t - (1.0 + 4.0 * a) / (2.0 * kSqrt2) * log_t;
}

CorrectionPrediction log_correction_coefficient(ProfileKind sign, double alpha) {
  CorrectionPrediction out;
  if (sign == ProfileKind::Homogeneous || alpha > 0.5) {
    out.log_coefficient = -kBramsonLog;
  } else if (sign == ProfileKind::Plus) {
    out.log_coefficient = -kBramsonLog * (2.0 - 2.0 * alpha);
  } else {
    out.log_coefficient = -(1.0 + 4.0 * alpha) / (2.0 * kSqrt2);
  }
  if (sign == ProfileKind::Plus && alpha <= 0.5) {
    out.leading_slope = [alpha](double t) {
      const double eps = std::pow(t, -alpha);
      return kSqrt2 * 0.5 * (std::sqrt(1.0 + eps) + std::sqrt(1.0 - eps));
    };
  } else {
    out.leading_slope = [](double) { return kSqrt2; };
  }
  return out;
}

double log_coefficient_at(const SpeedProfile& p, CorrectionForm form) {
  const auto asymptotic = log_correction_coefficient(p.kind(), p.alpha()).log_coefficient;
  if (form == CorrectionForm::Asymptotic || p.kind() != ProfileKind::Plus) return asymptotic;
  if (p.alpha() < 0.5) return -kBramsonLog * (p.sigma1() + p.sigma2() * (1.0 - 2.0 * p.alpha()));
  return -kBramsonLog * p.sigma1();
}

}  // namespace vsbbm

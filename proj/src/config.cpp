#include "vsbbm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace vsbbm {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: '" + s + "'");
  }
}

std::uint64_t to_unsigned(const std::string& key, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config key " + key + ": not a non-negative integer: '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": out of range: '" + s + "'");
  }
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config key " + key + ": expected true/false, got '" + s + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(key, item));
  return out;
}

/// Reads section.key if present and marks it consumed.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto value = sec->get_optional<std::string>(key);
    if (!value) return std::nullopt;
    used_.insert(section + "." + key);
    return trim(*value);
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw ConfigError("config key '" + section + "' must be inside a section");
      for (const auto& [key, value] : body) {
        if (!used_.count(section + "." + key)) throw ConfigError("unknown config key " + section + "." + key);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> used_;
};

}  // namespace

std::optional<PruneRule> PruneSetting::rule_for(double horizon) const {
  switch (mode) {
    case Mode::Off:
      return std::nullopt;
    case Mode::Fixed:
      return PruneRule{depth, interval};
    case Mode::Default:
      break;
  }
  PruneRule rule = PruneRule::default_for(horizon);
  rule.check_interval = interval;
  return rule;
}

std::vector<double> EngineSettings::resolve_checkpoints(double horizon, double beta) const {
  std::vector<double> out;
  for (const auto& c : checkpoints) {
    double v;
    if (c == "t") {
      v = horizon;
    } else if (c == "t/2") {
      v = 0.5 * horizon;
    } else if (c == "t^beta") {
      v = std::pow(horizon, beta);
    } else {
      v = to_double("engine.checkpoints", c);
    }
    if (!(v >= 0.0 && v <= horizon)) {
      throw ConfigError("checkpoint " + c + " lies outside [0, " + std::to_string(horizon) + "]");
    }
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SpeedProfile ExperimentConfig::profile(double horizon) const {
  return sign == ProfileKind::Homogeneous ? SpeedProfile::homogeneous(horizon)
                                          : SpeedProfile::two_speed(sign, alpha, horizon);
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  Reader r(tree);
  ExperimentConfig c;
  c.source_text = text;

  try {
    if (auto v = r.get("profile", "sign")) c.sign = profile_kind_from_string(*v);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("profile.sign: ") + e.what());
  }
  if (auto v = r.get("profile", "alpha")) c.alpha = to_double("profile.alpha", *v);
  if (auto v = r.get("profile", "horizons")) c.horizons = to_doubles("profile.horizons", *v);
  for (double t : c.horizons) {
    if (!(t > 0.0)) throw ConfigError("profile.horizons: horizons must be positive");
    try {
      c.profile(t);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("profile: ") + e.what());
    }
  }

  if (auto v = r.get("law", "offspring")) {
    try {
      c.law = BranchingLaw(to_doubles("law.offspring", *v));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("law.offspring: ") + e.what());
    }
  }

  auto& e = c.engine;
  if (auto v = r.get("engine", "prune_depth")) {
    if (*v == "default") {
      e.prune.mode = PruneSetting::Mode::Default;
    } else if (*v == "off") {
      e.prune.mode = PruneSetting::Mode::Off;
    } else {
      e.prune.mode = PruneSetting::Mode::Fixed;
      e.prune.depth = to_double("engine.prune_depth", *v);
      if (!(e.prune.depth > 0.0)) throw ConfigError("engine.prune_depth must be positive");
    }
  }
  if (auto v = r.get("engine", "prune_interval")) {
    e.prune.interval = to_double("engine.prune_interval", *v);
    if (!(e.prune.interval > 0.0)) throw ConfigError("engine.prune_interval must be positive");
  }
  if (auto v = r.get("engine", "checkpoints")) e.checkpoints = split_list(*v);
  if (auto v = r.get("engine", "replicates")) e.replicates = to_unsigned("engine.replicates", *v);
  if (auto v = r.get("engine", "seed")) e.seed = to_unsigned("engine.seed", *v);
  if (auto v = r.get("engine", "population_cap")) e.population_cap = to_unsigned("engine.population_cap", *v);
  if (auto v = r.get("engine", "retention_depth")) {
    e.retention_depth = to_double("engine.retention_depth", *v);
    if (!(e.retention_depth >= 0.0)) throw ConfigError("engine.retention_depth must be non-negative");
  }
  if (auto v = r.get("engine", "mckean_sigmas")) e.mckean_sigmas = to_doubles("engine.mckean_sigmas", *v);

  auto& g = c.solver;
  if (auto v = r.get("solver", "dx")) g.dx = to_double("solver.dx", *v);
  if (auto v = r.get("solver", "dt_factor")) g.dt_factor = to_double("solver.dt_factor", *v);
  if (auto v = r.get("solver", "width")) {
    if (*v != "auto") g.width = to_double("solver.width", *v);
  }
  try {
    if (auto v = r.get("solver", "diffusion")) g.diffusion = diffusion_scheme_from_string(*v);
    if (auto v = r.get("solver", "reaction")) g.reaction = reaction_scheme_from_string(*v);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("solver: ") + ex.what());
  }
  if (auto v = r.get("solver", "trace_interval")) g.trace_interval = to_double("solver.trace_interval", *v);
  if (auto v = r.get("solver", "follow_front")) g.follow_front = to_bool("solver.follow_front", *v);
  if (!(g.dx > 0.0) || !(g.dt_factor > 0.0) || !(g.trace_interval > 0.0)) {
    throw ConfigError("solver: dx, dt_factor and trace_interval must be positive");
  }

  auto& a = c.analysis;
  if (auto v = r.get("analysis", "y_low")) a.law_fit.y_low = to_double("analysis.y_low", *v);
  if (auto v = r.get("analysis", "y_high")) a.law_fit.y_high = to_double("analysis.y_high", *v);
  if (auto v = r.get("analysis", "y_points")) a.law_fit.points = to_unsigned("analysis.y_points", *v);
  if (auto v = r.get("analysis", "A")) a.window.A = to_double("analysis.A", *v);
  if (auto v = r.get("analysis", "B")) a.window.B = to_double("analysis.B", *v);
  if (auto v = r.get("analysis", "gamma")) {
    if (*v != "auto") a.window.gamma = to_double("analysis.gamma", *v);
  }
  if (auto v = r.get("analysis", "beta")) a.window.beta = to_double("analysis.beta", *v);
  if (auto v = r.get("analysis", "delta")) a.window.delta = to_double("analysis.delta", *v);
  if (auto v = r.get("analysis", "r")) a.window.r = to_double("analysis.r", *v);
  if (auto v = r.get("analysis", "zeta")) a.zeta = to_double("analysis.zeta", *v);
  if (auto v = r.get("analysis", "d")) a.d = to_double("analysis.d", *v);
  if (auto v = r.get("analysis", "z_checkpoint")) a.z_checkpoint = to_double("analysis.z_checkpoint", *v);
  if (auto v = r.get("analysis", "correction_form")) {
    try {
      a.correction_form = correction_form_from_string(*v);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("analysis.correction_form: ") + ex.what());
    }
  }
  if (auto v = r.get("analysis", "inverse_sqrt_term")) a.inverse_sqrt_term = to_bool("analysis.inverse_sqrt_term", *v);
  if (auto v = r.get("analysis", "fit_from")) a.fit_from = to_double("analysis.fit_from", *v);
  if (a.law_fit.points < 2 || !(a.law_fit.y_high > a.law_fit.y_low)) throw ConfigError("analysis: bad y grid");
  if (!(a.window.A > a.window.B) || !(a.window.B >= 0.0)) throw ConfigError("analysis: need A > B >= 0");

  r.reject_unknown();
  for (double t : c.horizons) e.resolve_checkpoints(t, a.window.beta);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace vsbbm

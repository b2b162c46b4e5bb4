#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsbbm/bbm_engine.hpp"
#include "vsbbm/core_model.hpp"
#include "vsbbm/fkpp_solver.hpp"
#include "vsbbm/stats_lab.hpp"

namespace vsbbm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the engine prunes: the default 3 sqrt(t) + 6, off, or a fixed depth.
struct PruneSetting {
  enum class Mode { Default, Off, Fixed } mode = Mode::Default;
  double depth = 0.0;
  double interval = 1.0;

  std::optional<PruneRule> rule_for(double horizon) const;
};

struct EngineSettings {
  PruneSetting prune;
  /// Numbers or the symbols "t", "t/2", "t^beta"; resolved per horizon.
  std::vector<std::string> checkpoints{"t^beta", "t/2", "t"};
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  std::size_t population_cap = 50'000'000;
  /// Particles within this distance of the maximum are written out.
  double retention_depth = 10.0;
  std::vector<double> mckean_sigmas{0.8, 1.0};

  std::vector<double> resolve_checkpoints(double horizon, double beta) const;
};

struct AnalysisSettings {
  LawFitOptions law_fit;
  PathWindowParams window;
  double zeta = 4.0;
  double d = 1.0;
  /// Checkpoint whose Z samples feed the law fit.
  std::optional<double> z_checkpoint;
  CorrectionForm correction_form = CorrectionForm::Sigma;
  bool inverse_sqrt_term = false;
  double fit_from = 20.0;
};

/// Sectioned key=value experiment description. See README for the grammar.
struct ExperimentConfig {
  std::string source_text;
  ProfileKind sign = ProfileKind::Homogeneous;
  double alpha = 0.0;
  std::vector<double> horizons{12.0};
  BranchingLaw law = BranchingLaw::binary();
  EngineSettings engine;
  GridSpec solver;
  AnalysisSettings analysis;

  SpeedProfile profile(double horizon) const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace vsbbm

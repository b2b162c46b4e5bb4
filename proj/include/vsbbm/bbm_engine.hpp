#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vsbbm/core_model.hpp"

namespace vsbbm {

/// The population outgrew its hard cap; the replicate cannot be completed.
class PopulationCapExceeded : public std::runtime_error {
 public:
  PopulationCapExceeded(std::size_t cap, double time);
  std::size_t cap;
  double time;
};

/// Kill every particle more than `depth` below the current maximum, checked
/// every `check_interval` units of time.
struct PruneRule {
  double depth = 0.0;
  double check_interval = 1.0;

  /// depth 3 sqrt(t) + 6, checked every unit of time.
  static PruneRule default_for(double horizon);
};

struct SimulationOptions {
  /// Times in [0, horizon] at which every particle records its position and
  /// lineage id; descendants inherit the record.
  std::vector<double> checkpoints;
  std::optional<PruneRule> prune;
  std::size_t population_cap = 50'000'000;
  /// Keep the branching tree so most-recent-common-ancestor times can be read.
  bool retain_genealogy = false;
};

/// A single particle as seen from outside the engine.
struct Particle {
  double position = 0.0;
  std::uint64_t lineage = 0;
  std::map<double, double> ancestor_snapshots;
  std::map<double, std::uint64_t> ancestor_lineages;
  bool alive = true;
};

/// Flat particle store at one instant. Snapshots are stored row-major, one row
/// of checkpoint values per particle.
class Population {
 public:
  std::size_t size() const { return position_.size(); }
  bool empty() const { return position_.empty(); }
  double sim_time() const { return sim_time_; }
  std::uint64_t pruned_count() const { return pruned_count_; }
  std::uint64_t rng_key() const { return rng_key_; }

  std::span<const double> positions() const { return position_; }
  double position(std::size_t i) const { return position_[i]; }
  std::uint64_t lineage(std::size_t i) const { return lineage_[i]; }

  const std::vector<double>& checkpoints() const { return checkpoints_; }
  std::optional<std::size_t> checkpoint_index(double time) const;
  /// Ancestor position / lineage at checkpoint k; only valid once that
  /// checkpoint has been passed.
  double snapshot(std::size_t i, std::size_t k) const { return snapshot_[i * checkpoints_.size() + k]; }
  std::uint64_t snapshot_lineage(std::size_t i, std::size_t k) const {
    return snapshot_lineage_[i * checkpoints_.size() + k];
  }
  std::size_t checkpoints_passed() const { return checkpoints_passed_; }

  Particle particle(std::size_t i) const;

  bool has_genealogy() const { return !node_parent_.empty(); }
  /// Time at which the lineages of particles i and j split (sim_time if i == j).
  double split_time(std::size_t i, std::size_t j) const;

 private:
  friend class Simulator;

  double sim_time_ = 0.0;
  std::uint64_t pruned_count_ = 0;
  std::uint64_t rng_key_ = 0;
  std::vector<double> checkpoints_;
  std::size_t checkpoints_passed_ = 0;

  std::vector<double> position_;
  std::vector<double> clock_;       // time the stored position refers to
  std::vector<double> next_branch_; // absolute time of the next branching
  std::vector<std::uint64_t> lineage_;
  std::vector<std::uint64_t> counter_;
  std::vector<double> snapshot_;
  std::vector<std::uint64_t> snapshot_lineage_;
  std::vector<std::uint32_t> node_;
  std::vector<std::uint32_t> node_parent_;
  std::vector<double> node_start_;
};

/// Called after the snapshot at each checkpoint has been taken.
using CheckpointObserver = std::function<void(double time, const Population&)>;

/// Exact simulation of variable-speed BBM on [0, horizon].
///
/// Branching times are Exp(1); between events a particle's displacement is
/// Gaussian with variance Sigma^2(b) - Sigma^2(a), so increments straddling the
/// speed change are exact. Every particle draws from its own Philox stream,
/// addressed by (replicate key, lineage id, per-particle counter), which makes
/// each trajectory independent of processing order and of which other
/// particles were pruned.
Population simulate(const SpeedProfile& profile, const BranchingLaw& law, std::uint64_t key,
                    const SimulationOptions& options, const CheckpointObserver& observer = {});

/// Largest position, or nothing for an empty population.
std::optional<double> sample_max(const Population& population);

struct PathWindowParams {
  double A = 2.0;
  double B = 0.5;
  /// Exponent of the Plus-case window; the profile's alpha when unset.
  std::optional<double> gamma;
  double beta = 0.4;
  double delta = 0.25;
  double r = 1.0;
};

struct PathFlags {
  bool in_G = false;
  bool in_T = false;
  bool in_H = false;
};

/// Tests the sigma_1-rescaled first-phase path of a particle against the
/// localisation windows. G: Plus uses X(s) - sqrt2 s in [-A s^g, -B s^g],
/// Minus uses X(s) - sqrt2 sigma_1 s in [-A sqrt s, A sqrt s], with s = t/2.
/// T: X(q) <= sqrt2 q at every recorded checkpoint q in [r, t/2]. H: X(t^beta)
/// <= sqrt2 t^beta - t^{beta delta}.
PathFlags classify_path(const Particle& particle, const SpeedProfile& profile, const PathWindowParams& params);

struct CovarianceBucket {
  double d_low = 0.0;
  double d_high = 0.0;
  std::size_t pairs = 0;
  double empirical = 0.0;
  double predicted = 0.0;
  double standard_error = 0.0;
};

struct GaussianConsistencyReport {
  std::vector<CovarianceBucket> buckets;
  double max_abs_deviation = 0.0;
  /// max over buckets of |empirical - predicted| / standard_error
  double max_z = 0.0;
};

/// Accumulates products x_i x_j over sampled pairs, bucketed by split time.
class GaussianConsistency {
 public:
  GaussianConsistency(SpeedProfile profile, std::size_t buckets);
  /// Adds `pairs` random pairs (plus one i == i pair) from a population
  /// simulated with retained genealogy. Pair choice uses `key` only.
  void add(const Population& population, std::size_t pairs, std::uint64_t key);
  GaussianConsistencyReport report() const;

 private:
  struct Acc {
    std::size_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    double predicted = 0.0;
  };
  SpeedProfile profile_;
  std::vector<Acc> acc_;
  Acc same_;
};

}  // namespace vsbbm

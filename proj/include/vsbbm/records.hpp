#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "vsbbm/core_model.hpp"

namespace vsbbm {

inline constexpr int kRecordSchemaVersion = 1;

struct MartingaleSample {
  double checkpoint_time = 0.0;
  double Z_value = 0.0;
  double Y_value = 0.0;
  double sigma_used = 1.0;
};

/// A particle retained near the maximum at the horizon, with its ancestors'
/// positions and lineage ids at each checkpoint of the run.
struct TopParticle {
  double position = 0.0;
  std::vector<double> ancestors;
  std::vector<std::uint64_t> ancestor_lineages;
  /// Offset below sqrt2 sigma_1 t/2 at the speed change (NaN without a t/2 checkpoint).
  double half_offset = 0.0;
  bool in_G = false;
  bool in_T = false;
  bool in_H = false;
};

/// One simulated replicate, as written to JSONL.
struct ReplicateRecord {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  ProfileKind sign = ProfileKind::Homogeneous;
  double alpha = 0.0;
  double t = 0.0;
  double max = 0.0;
  std::vector<double> checkpoints;
  std::vector<MartingaleSample> martingales;
  std::vector<TopParticle> top;
  double retention_depth = 0.0;
  double prune_depth = 0.0;  // 0 when pruning was off
  std::uint64_t pruned_count = 0;
  std::uint64_t population = 0;
  int prune_reruns = 0;

  SpeedProfile profile() const;
  std::optional<std::size_t> checkpoint_index(double time) const;
  /// Z at the given checkpoint (sigma-independent), if recorded.
  std::optional<double> Z_at(double time) const;
  std::optional<double> Y_at(double time, double sigma) const;
};

nlohmann::json to_json(const ReplicateRecord& record);
ReplicateRecord record_from_json(const nlohmann::json& j);

/// Compact single-line JSON with a stable key order.
std::string to_jsonl_line(const ReplicateRecord& record);

}  // namespace vsbbm

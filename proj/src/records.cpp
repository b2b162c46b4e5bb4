#include "vsbbm/records.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace vsbbm {

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

SpeedProfile ReplicateRecord::profile() const { return SpeedProfile::two_speed(sign, alpha, t); }

std::optional<std::size_t> ReplicateRecord::checkpoint_index(double time) const {
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (same_time(checkpoints[k], time)) return k;
  }
  return std::nullopt;
}

std::optional<double> ReplicateRecord::Z_at(double time) const {
  for (const auto& m : martingales) {
    if (same_time(m.checkpoint_time, time)) return m.Z_value;
  }
  return std::nullopt;
}

std::optional<double> ReplicateRecord::Y_at(double time, double sigma) const {
  for (const auto& m : martingales) {
    if (same_time(m.checkpoint_time, time) && same_time(m.sigma_used, sigma)) return m.Y_value;
  }
  return std::nullopt;
}

nlohmann::json to_json(const ReplicateRecord& r) {
  nlohmann::json j;
  j["schema"] = kRecordSchemaVersion;
  j["seed"] = r.seed;
  j["replicate"] = r.replicate;
  j["profile"] = {{"sign", to_string(r.sign)}, {"alpha", r.alpha}, {"horizon", r.t}};
  j["t"] = r.t;
  j["max"] = r.max;
  j["checkpoints"] = r.checkpoints;

  // Z does not depend on sigma; emit it once per checkpoint.
  nlohmann::json z = nlohmann::json::array();
  nlohmann::json y = nlohmann::json::array();
  std::vector<double> seen;
  for (const auto& m : r.martingales) {
    bool fresh = true;
    for (double s : seen) fresh = fresh && !same_time(s, m.checkpoint_time);
    if (fresh) {
      z.push_back({{"time", m.checkpoint_time}, {"value", number_or_null(m.Z_value)}});
      seen.push_back(m.checkpoint_time);
    }
    y.push_back({{"time", m.checkpoint_time}, {"sigma", m.sigma_used}, {"value", number_or_null(m.Y_value)}});
  }
  j["Z_at_checkpoints"] = z;
  j["Y_at_checkpoints"] = y;

  nlohmann::json offsets = nlohmann::json::array();
  nlohmann::json flags = nlohmann::json::array();
  nlohmann::json top = nlohmann::json::array();
  for (const auto& p : r.top) {
    offsets.push_back(number_or_null(p.half_offset));
    flags.push_back({{"G", p.in_G}, {"T", p.in_T}, {"H", p.in_H}});
    top.push_back({{"x", p.position}, {"anc", p.ancestors}, {"lin", p.ancestor_lineages}});
  }
  j["ancestor_offsets"] = offsets;
  j["flags"] = flags;
  j["top"] = top;
  j["retention_depth"] = r.retention_depth;
  j["prune_depth"] = r.prune_depth;
  j["pruned_count"] = r.pruned_count;
  j["population"] = r.population;
  j["prune_reruns"] = r.prune_reruns;
  return j;
}

ReplicateRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");
  if (j.at("schema").get<int>() != kRecordSchemaVersion) throw std::invalid_argument("unsupported record schema");
  ReplicateRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.replicate = j.at("replicate").get<std::uint64_t>();
  const auto& prof = j.at("profile");
  r.sign = profile_kind_from_string(prof.at("sign").get<std::string>());
  r.alpha = prof.at("alpha").get<double>();
  r.t = j.at("t").get<double>();
  r.max = j.at("max").get<double>();
  r.checkpoints = j.at("checkpoints").get<std::vector<double>>();

  std::map<double, double> z_by_time;
  for (const auto& z : j.at("Z_at_checkpoints")) z_by_time[z.at("time").get<double>()] = number_from(z.at("value"));
  for (const auto& y : j.at("Y_at_checkpoints")) {
    MartingaleSample m;
    m.checkpoint_time = y.at("time").get<double>();
    m.sigma_used = y.at("sigma").get<double>();
    m.Y_value = number_from(y.at("value"));
    auto it = z_by_time.find(m.checkpoint_time);
    m.Z_value = it == z_by_time.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    r.martingales.push_back(m);
  }
  // Checkpoints that only carry Z.
  for (const auto& [time, value] : z_by_time) {
    bool covered = false;
    for (const auto& m : r.martingales) covered = covered || same_time(m.checkpoint_time, time);
    if (!covered) r.martingales.push_back({time, value, std::numeric_limits<double>::quiet_NaN(), 0.0});
  }

  const auto& top = j.at("top");
  const auto& offsets = j.at("ancestor_offsets");
  const auto& flags = j.at("flags");
  if (offsets.size() != top.size() || flags.size() != top.size()) {
    throw std::invalid_argument("record arrays disagree in length");
  }
  for (std::size_t i = 0; i < top.size(); ++i) {
    TopParticle p;
    p.position = top[i].at("x").get<double>();
    for (const auto& a : top[i].at("anc")) p.ancestors.push_back(number_from(a));
    p.ancestor_lineages = top[i].at("lin").get<std::vector<std::uint64_t>>();
    if (p.ancestors.size() != r.checkpoints.size() || p.ancestor_lineages.size() != r.checkpoints.size()) {
      throw std::invalid_argument("ancestor rows do not match checkpoints");
    }
    p.half_offset = number_from(offsets[i]);
    p.in_G = flags[i].at("G").get<bool>();
    p.in_T = flags[i].at("T").get<bool>();
    p.in_H = flags[i].at("H").get<bool>();
    r.top.push_back(std::move(p));
  }
  r.retention_depth = j.at("retention_depth").get<double>();
  r.prune_depth = j.at("prune_depth").get<double>();
  r.pruned_count = j.at("pruned_count").get<std::uint64_t>();
  r.population = j.at("population").get<std::uint64_t>();
  r.prune_reruns = j.at("prune_reruns").get<int>();
  return r;
}

std::string to_jsonl_line(const ReplicateRecord& record) { return to_json(record).dump(); }

}  // namespace vsbbm

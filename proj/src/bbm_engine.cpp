#include "vsbbm/bbm_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "vsbbm/rng.hpp"

namespace vsbbm {

PopulationCapExceeded::PopulationCapExceeded(std::size_t cap_, double time_)
    : std::runtime_error("population exceeded cap of " + std::to_string(cap_) + " particles at time " +
                         std::to_string(time_)),
      cap(cap_),
      time(time_) {}

PruneRule PruneRule::default_for(double horizon) { return {3.0 * std::sqrt(horizon) + 6.0, 1.0}; }

std::optional<std::size_t> Population::checkpoint_index(double time) const {
  for (std::size_t k = 0; k < checkpoints_.size(); ++k) {
    if (std::abs(checkpoints_[k] - time) <= 1e-9 * std::max(1.0, std::abs(time))) return k;
  }
  return std::nullopt;
}

Particle Population::particle(std::size_t i) const {
  Particle p;
  p.position = position_[i];
  p.lineage = lineage_[i];
  for (std::size_t k = 0; k < checkpoints_passed_; ++k) {
    p.ancestor_snapshots[checkpoints_[k]] = snapshot(i, k);
    p.ancestor_lineages[checkpoints_[k]] = snapshot_lineage(i, k);
  }
  return p;
}

double Population::split_time(std::size_t i, std::size_t j) const {
  if (!has_genealogy()) throw std::logic_error("split_time needs a population simulated with genealogy");
  if (i == j) return sim_time_;
  std::vector<std::uint32_t> chain;
  for (std::uint32_t n = node_[i];; n = node_parent_[n]) {
    chain.push_back(n);
    if (node_parent_[n] == n) break;
  }
  std::uint32_t below = node_[j];
  for (std::uint32_t n = node_[j];; below = n, n = node_parent_[n]) {
    if (std::find(chain.begin(), chain.end(), n) != chain.end()) {
      // n is the common node; the split happened when its children started.
      return n == node_[j] ? node_start_[node_[i]] : node_start_[below];
    }
    if (node_parent_[n] == n) break;
  }
  return 0.0;
}

class Simulator {
 public:
  Simulator(const SpeedProfile& profile, const BranchingLaw& law, std::uint64_t key, const SimulationOptions& options)
      : profile_(profile), law_(law), gen_(key), options_(options) {
    auto& pop = pop_;
    pop.rng_key_ = key;
    pop.checkpoints_ = options.checkpoints;
    std::sort(pop.checkpoints_.begin(), pop.checkpoints_.end());
    for (double c : pop.checkpoints_) {
      if (!(c >= 0.0 && c <= profile.horizon())) throw std::invalid_argument("checkpoint outside [0, horizon]");
    }
    if (options.prune && !(options.prune->depth > 0.0 && options.prune->check_interval > 0.0)) {
      throw std::invalid_argument("prune depth and interval must be positive");
    }
    stride_ = pop.checkpoints_.size();
  }

  Population run(const CheckpointObserver& observer) {
    spawn(0.0, 0.0, 1, 0, kNoRow, kNoParent);
    const double horizon = profile_.horizon();
    std::vector<double> syncs = pop_.checkpoints_;
    if (options_.prune) {
      const double step = options_.prune->check_interval;
      for (double s = step; s < horizon; s += step) syncs.push_back(s);
    }
    syncs.push_back(horizon);
    std::sort(syncs.begin(), syncs.end());
    syncs.erase(std::unique(syncs.begin(), syncs.end()), syncs.end());

    double now = 0.0;
    for (double target : syncs) {
      if (target > now) advance_all(target);
      now = target;
      pop_.sim_time_ = now;
      while (pop_.checkpoints_passed_ < stride_ && pop_.checkpoints_[pop_.checkpoints_passed_] <= now) {
        take_snapshot(pop_.checkpoints_passed_);
        if (observer) observer(now, pop_);
        ++pop_.checkpoints_passed_;
      }
      if (options_.prune && now < horizon) prune(options_.prune->depth);
    }
    pop_.sim_time_ = horizon;
    return std::move(pop_);
  }

 private:
  static constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);
  static constexpr std::uint32_t kNoParent = static_cast<std::uint32_t>(-1);

  void spawn(double x, double time, std::uint64_t lineage, std::uint64_t counter, std::size_t parent_row,
             std::uint32_t parent_node) {
    auto& p = pop_;
    if (p.position_.size() >= options_.population_cap) throw PopulationCapExceeded(options_.population_cap, time);
    const auto block = gen_(lineage, counter);
    p.position_.push_back(x);
    p.clock_.push_back(time);
    p.next_branch_.push_back(time - std::log(open_uniform(block[0])));
    p.lineage_.push_back(lineage);
    p.counter_.push_back(counter + 1);
    if (stride_) {
      const std::size_t row = p.snapshot_.size();
      p.snapshot_.resize(row + stride_);
      p.snapshot_lineage_.resize(row + stride_);
      if (parent_row != kNoRow) {
        // Copy by index: resize may have moved the storage.
        for (std::size_t k = 0; k < stride_; ++k) {
          p.snapshot_[row + k] = p.snapshot_[parent_row * stride_ + k];
          p.snapshot_lineage_[row + k] = p.snapshot_lineage_[parent_row * stride_ + k];
        }
      }
    }
    if (options_.retain_genealogy) {
      const auto node = static_cast<std::uint32_t>(p.node_parent_.size());
      p.node_parent_.push_back(parent_node == kNoParent ? node : parent_node);
      p.node_start_.push_back(time);
      p.node_.push_back(node);
    }
  }

  void advance_all(double target) {
    auto& p = pop_;
    const double s_target = profile_.cumulative_speed_unchecked(target);
    // Children appended during the loop are advanced in the same pass.
    for (std::size_t i = 0; i < p.position_.size(); ++i) {
      double x = p.position_[i];
      double clock = p.clock_[i];
      double s_clock = profile_.cumulative_speed_unchecked(clock);
      double next = p.next_branch_[i];
      const std::uint64_t lineage = p.lineage_[i];
      std::uint64_t counter = p.counter_[i];
      while (next < target) {
        const auto block = gen_(lineage, counter++);
        const double s_next = profile_.cumulative_speed_unchecked(next);
        x += std::sqrt(s_next - s_clock) * box_muller(block[1], block[2]);
        clock = next;
        s_clock = s_next;
        next = clock - std::log(open_uniform(block[0]));
        const int k = law_.sample(open_uniform(block[3]));
        if (k > 1) {
          const std::uint64_t event = mix64(lineage ^ mix64(counter));
          std::uint32_t parent_node = kNoParent;
          if (options_.retain_genealogy) {
            // Close the current node: the parent continues in a fresh one.
            parent_node = p.node_[i];
            const auto fresh = static_cast<std::uint32_t>(p.node_parent_.size());
            p.node_parent_.push_back(parent_node);
            p.node_start_.push_back(clock);
            p.node_[i] = fresh;
          }
          for (int j = 1; j < k; ++j) {
            spawn(x, clock, mix64(event + static_cast<std::uint64_t>(j)), 0, i, parent_node);
          }
        }
      }
      const auto block = gen_(lineage, counter++);
      x += std::sqrt(s_target - s_clock) * box_muller(block[1], block[2]);
      p.position_[i] = x;
      p.clock_[i] = target;
      p.next_branch_[i] = next;
      p.counter_[i] = counter;
    }
  }

  void take_snapshot(std::size_t k) {
    auto& p = pop_;
    for (std::size_t i = 0; i < p.position_.size(); ++i) {
      p.snapshot_[i * stride_ + k] = p.position_[i];
      p.snapshot_lineage_[i * stride_ + k] = p.lineage_[i];
    }
  }

  void prune(double depth) {
    auto& p = pop_;
    if (p.position_.empty()) return;
    const double cut = *std::max_element(p.position_.begin(), p.position_.end()) - depth;
    std::size_t keep = 0;
    const std::size_t n = p.position_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (p.position_[i] < cut) continue;
      if (keep != i) {
        p.position_[keep] = p.position_[i];
        p.clock_[keep] = p.clock_[i];
        p.next_branch_[keep] = p.next_branch_[i];
        p.lineage_[keep] = p.lineage_[i];
        p.counter_[keep] = p.counter_[i];
        for (std::size_t k = 0; k < stride_; ++k) {
          p.snapshot_[keep * stride_ + k] = p.snapshot_[i * stride_ + k];
          p.snapshot_lineage_[keep * stride_ + k] = p.snapshot_lineage_[i * stride_ + k];
        }
        if (!p.node_.empty()) p.node_[keep] = p.node_[i];
      }
      ++keep;
    }
    p.pruned_count_ += n - keep;
    p.position_.resize(keep);
    p.clock_.resize(keep);
    p.next_branch_.resize(keep);
    p.lineage_.resize(keep);
    p.counter_.resize(keep);
    p.snapshot_.resize(keep * stride_);
    p.snapshot_lineage_.resize(keep * stride_);
    if (!p.node_.empty()) p.node_.resize(keep);
  }

  const SpeedProfile& profile_;
  const BranchingLaw& law_;
  Philox4x32 gen_;
  const SimulationOptions& options_;
  Population pop_;
  std::size_t stride_ = 0;
};

Population simulate(const SpeedProfile& profile, const BranchingLaw& law, std::uint64_t key,
                    const SimulationOptions& options, const CheckpointObserver& observer) {
  return Simulator(profile, law, key, options).run(observer);
}

std::optional<double> sample_max(const Population& population) {
  const auto xs = population.positions();
  if (xs.empty()) return std::nullopt;
  return *std::max_element(xs.begin(), xs.end());
}

namespace {

double lookup(const std::map<double, double>& snaps, double time, const char* what) {
  for (const auto& [when, value] : snaps) {
    if (std::abs(when - time) <= 1e-9 * std::max(1.0, time)) return value;
  }
  throw std::invalid_argument(std::string("classify_path: missing snapshot at ") + what);
}

}  // namespace

PathFlags classify_path(const Particle& particle, const SpeedProfile& profile, const PathWindowParams& params) {
  const double t = profile.horizon();
  const double half = 0.5 * t;
  const double t_beta = std::pow(t, params.beta);
  const double inv_sigma1 = 1.0 / profile.sigma1();
  const double x_half = lookup(particle.ancestor_snapshots, half, "t/2") * inv_sigma1;
  const double x_beta = lookup(particle.ancestor_snapshots, t_beta, "t^beta") * inv_sigma1;

  PathFlags flags;
  if (profile.kind() == ProfileKind::Minus) {
    const double offset = x_half - kSqrt2 * profile.sigma1() * half;
    const double w = params.A * std::sqrt(half);
    flags.in_G = offset >= -w && offset <= w;
  } else {
    const double g = params.gamma.value_or(profile.kind() == ProfileKind::Plus ? profile.alpha() : 0.5);
    const double scale = std::pow(half, g);
    const double offset = x_half - kSqrt2 * half;
    flags.in_G = offset >= -params.A * scale && offset <= -params.B * scale;
  }
  flags.in_T = true;
  for (const auto& [q, x] : particle.ancestor_snapshots) {
    if (q < params.r || q > half) continue;
    if (x * inv_sigma1 > kSqrt2 * q) flags.in_T = false;
  }
  flags.in_H = x_beta <= kSqrt2 * t_beta - std::pow(t_beta, params.delta);
  return flags;
}

GaussianConsistency::GaussianConsistency(SpeedProfile profile, std::size_t buckets)
    : profile_(std::move(profile)), acc_(buckets) {
  if (buckets == 0) throw std::invalid_argument("need at least one bucket");
}

void GaussianConsistency::add(const Population& population, std::size_t pairs, std::uint64_t key) {
  const std::size_t n = population.size();
  if (n == 0) return;
  const double t = population.sim_time();
  CounterStream rng(key, 0x5A17);
  const auto pick = [&] { return std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))); };
  const auto accumulate = [](Acc& a, double value, double predicted) {
    ++a.n;
    a.sum += value;
    a.sum_sq += value * value;
    a.predicted += predicted;
  };
  {
    const std::size_t i = pick();
    const double x = population.position(i);
    accumulate(same_, x * x, profile_.cumulative_speed(t));
  }
  if (n < 2) return;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = pick();
    std::size_t j = pick();
    while (j == i) j = pick();
    const double d = population.split_time(i, j);
    auto b = static_cast<std::size_t>(d / t * static_cast<double>(acc_.size()));
    b = std::min(b, acc_.size() - 1);
    accumulate(acc_[b], population.position(i) * population.position(j), profile_.covariance(t, t, d));
  }
}

GaussianConsistencyReport GaussianConsistency::report() const {
  GaussianConsistencyReport out;
  const double t = profile_.horizon();
  const auto summarize = [&](const Acc& a, double lo, double hi) {
    CovarianceBucket b;
    b.d_low = lo;
    b.d_high = hi;
    b.pairs = a.n;
    if (a.n > 1) {
      const double nn = static_cast<double>(a.n);
      b.empirical = a.sum / nn;
      b.predicted = a.predicted / nn;
      const double var = std::max(0.0, (a.sum_sq - nn * b.empirical * b.empirical) / (nn - 1.0));
      b.standard_error = std::sqrt(var / nn);
      const double dev = std::abs(b.empirical - b.predicted);
      out.max_abs_deviation = std::max(out.max_abs_deviation, dev);
      if (b.standard_error > 0.0) out.max_z = std::max(out.max_z, dev / b.standard_error);
    }
    out.buckets.push_back(b);
  };
  const double width = t / static_cast<double>(acc_.size());
  for (std::size_t k = 0; k < acc_.size(); ++k) {
    summarize(acc_[k], width * static_cast<double>(k), width * static_cast<double>(k + 1));
  }
  summarize(same_, t, t);
  return out;
}

}  // namespace vsbbm

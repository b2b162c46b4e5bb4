#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "vsbbm/bbm_engine.hpp"
#include "vsbbm/rng.hpp"
#include "vsbbm/stats_lab.hpp"

using namespace vsbbm;

TEST_CASE("zero horizon is one particle at the origin") {
  const Population p = simulate(SpeedProfile::homogeneous(0.0), BranchingLaw::binary(), 1, {});
  REQUIRE(p.size() == 1);
  CHECK(p.position(0) == 0.0);
  CHECK(*sample_max(p) == 0.0);
}

TEST_CASE("mean population is e^t") {
  const auto profile = SpeedProfile::two_speed(ProfileKind::Plus, 0.3, 3.0);
  std::vector<double> sizes;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    sizes.push_back(double(simulate(profile, BranchingLaw::binary(), replicate_key(5, i), {}).size()));
  }
  CHECK(std::abs(mean(sizes) - std::exp(3.0)) <= 3.0 * standard_error(sizes));
}

TEST_CASE("ternary law has the same mean growth") {
  const BranchingLaw law({0.5, 0.0, 0.5});
  std::vector<double> sizes;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    sizes.push_back(double(simulate(SpeedProfile::homogeneous(2.0), law, replicate_key(6, i), {}).size()));
  }
  CHECK(std::abs(mean(sizes) - std::exp(2.0)) <= 3.0 * standard_error(sizes));
}

TEST_CASE("level counts follow the first-moment identity") {
  const auto profile = SpeedProfile::two_speed(ProfileKind::Minus, 0.3, 4.0);
  std::vector<double> counts;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto pop = simulate(profile, BranchingLaw::binary(), replicate_key(7, i), {});
    counts.push_back(double(std::count_if(pop.positions().begin(), pop.positions().end(), [](double x) { return x > 2.0; })));
  }
  const double expected = std::exp(4.0) * 0.5 * std::erfc(2.0 / std::sqrt(2.0 * profile.cumulative_speed(4.0)));
  CHECK(std::abs(mean(counts) - expected) <= 3.0 * standard_error(counts));
}

TEST_CASE("same key same trajectory") {
  const auto profile = SpeedProfile::two_speed(ProfileKind::Minus, 0.3, 6.0);
  SimulationOptions o;
  o.checkpoints = {2.0, 3.0};
  const auto a = simulate(profile, BranchingLaw::binary(), 99, o);
  const auto b = simulate(profile, BranchingLaw::binary(), 99, o);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.position(i) == b.position(i));
    CHECK(a.lineage(i) == b.lineage(i));
  }
  const auto c = simulate(profile, BranchingLaw::binary(), 100, o);
  CHECK(*sample_max(a) != *sample_max(c));
}

TEST_CASE("pruning only removes particles far below the maximum") {
  // Prune checks are synchronisation points that consume randomness, so runs
  // are compared on a common check schedule.
  const auto profile = SpeedProfile::homogeneous(8.0);
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto key = replicate_key(8, i);
    SimulationOptions never;
    never.prune = PruneRule{1e9, 0.5};
    const auto full = simulate(profile, BranchingLaw::binary(), key, never);
    CHECK(full.pruned_count() == 0);
    SimulationOptions deep;
    deep.prune = PruneRule{50.0, 0.5};
    const auto pruned = simulate(profile, BranchingLaw::binary(), key, deep);
    CHECK(*sample_max(full) == *sample_max(pruned));
    CHECK(full.size() == pruned.size());

    SimulationOptions shallow;
    shallow.prune = PruneRule{3.0, 0.5};
    const auto thin = simulate(profile, BranchingLaw::binary(), key, shallow);
    // Survivors are unpruned particles with identical trajectories.
    std::map<std::uint64_t, double> where;
    for (std::size_t k = 0; k < full.size(); ++k) where[full.lineage(k)] = full.position(k);
    for (std::size_t k = 0; k < thin.size(); ++k) {
      const auto it = where.find(thin.lineage(k));
      REQUIRE(it != where.end());
      CHECK(it->second == thin.position(k));
    }
    CHECK(thin.size() <= full.size());
    CHECK(*sample_max(thin) <= *sample_max(full));
  }
}

TEST_CASE("pruned particles stay within depth at prune times") {
  const auto profile = SpeedProfile::homogeneous(10.0);
  SimulationOptions o;
  o.prune = PruneRule{4.0, 1.0};
  // Just after the checks at 3, 6 and 9.
  o.checkpoints = {3.0 + 1e-7, 6.0 + 1e-7, 9.0 + 1e-7};
  int checked = 0;
  simulate(profile, BranchingLaw::binary(), 17, o, [&](double, const Population& pop) {
    const double m = *sample_max(pop);
    for (double x : pop.positions()) CHECK(x >= m - 4.0 - 0.01);
    ++checked;
  });
  CHECK(checked == 3);
}

TEST_CASE("population cap") {
  SimulationOptions o;
  o.population_cap = 50;
  CHECK_THROWS_AS(simulate(SpeedProfile::homogeneous(10.0), BranchingLaw::binary(), 1, o), PopulationCapExceeded);
}

TEST_CASE("checkpoint snapshots are inherited") {
  SimulationOptions o;
  o.checkpoints = {0.0, 2.0, 4.0};
  const auto pop = simulate(SpeedProfile::homogeneous(4.0), BranchingLaw::binary(), 3, o);
  CHECK(pop.checkpoints_passed() == 3);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto p = pop.particle(i);
    CHECK(p.ancestor_snapshots.at(0.0) == 0.0);
    CHECK(p.ancestor_snapshots.at(4.0) == p.position);
  }
}

TEST_CASE("median maximum at t = 12") {
  const auto profile = SpeedProfile::homogeneous(12.0);
  SimulationOptions o;
  o.prune = PruneRule::default_for(12.0);
  std::vector<double> mx;
  for (std::uint64_t i = 0; i < 300; ++i) mx.push_back(*sample_max(simulate(profile, BranchingLaw::binary(), replicate_key(12, i), o)));
  const double centre = std::sqrt(2.0) * 12.0 - kBramsonLog * std::log(12.0);
  CHECK(std::abs(median(mx) - centre) <= 3.0);
}

TEST_CASE("classify path windows") {
  const auto profile = SpeedProfile::two_speed(ProfileKind::Plus, 0.3, 30.0);
  PathWindowParams w;
  const double half = 15.0;
  const double beta_time = std::pow(30.0, w.beta);
  const double s1 = profile.sigma1();
  Particle p;
  p.ancestor_snapshots[beta_time] = 0.0;
  p.ancestor_snapshots[half] = s1 * (std::sqrt(2.0) * half - 0.5 * (w.A + w.B) * std::pow(half, 0.3));
  auto f = classify_path(p, profile, w);
  CHECK(f.in_G);
  CHECK(f.in_T);
  CHECK(f.in_H);

  p.ancestor_snapshots[half] = s1 * std::sqrt(2.0) * half;
  CHECK_FALSE(classify_path(p, profile, w).in_G);

  p.ancestor_snapshots[beta_time] = s1 * std::sqrt(2.0) * beta_time;
  CHECK_FALSE(classify_path(p, profile, w).in_H);

  Particle missing;
  CHECK_THROWS(classify_path(missing, profile, w));

  const auto minus = SpeedProfile::two_speed(ProfileKind::Minus, 0.3, 30.0);
  Particle q;
  q.ancestor_snapshots[beta_time] = 0.0;
  q.ancestor_snapshots[half] = minus.sigma1() * std::sqrt(2.0) * minus.sigma1() * half;
  CHECK(classify_path(q, minus, w).in_G);
  q.ancestor_snapshots[half] = 0.0;
  CHECK_FALSE(classify_path(q, minus, w).in_G);
}

TEST_CASE("pair covariances match the speed function") {
  const auto profile = SpeedProfile::two_speed(ProfileKind::Plus, 0.3, 5.0);
  SimulationOptions o;
  o.retain_genealogy = true;
  GaussianConsistency gc(profile, 5);
  for (std::uint64_t i = 0; i < 3000; ++i) {
    const auto pop = simulate(profile, BranchingLaw::binary(), replicate_key(21, i), o);
    gc.add(pop, 4, replicate_key(22, i));
  }
  const auto r = gc.report();
  for (const auto& b : r.buckets) {
    if (b.pairs < 30) continue;
    CHECK(std::abs(b.empirical - b.predicted) <= 3.5 * b.standard_error);
  }
}

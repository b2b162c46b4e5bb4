#include "vsbbm/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "vsbbm/oracle_math.hpp"
#include "vsbbm/rng.hpp"

namespace vsbbm {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

std::string horizon_tag(const SpeedProfile& p) {
  std::ostringstream s;
  s << to_string(p.kind());
  if (p.kind() != ProfileKind::Homogeneous) s << "_a" << p.alpha();
  s << "_t" << p.horizon();
  return s.str();
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
  out << std::setprecision(12);
  return out;
}

nlohmann::json header_json(const ExperimentConfig& config, const std::string& command, std::uint64_t seed,
                           std::size_t replicates, std::optional<double> synthetic_c) {
  nlohmann::json h;
  h["schema"] = kRecordSchemaVersion;
  h["command"] = command;
  h["config"] = config.source_text;
  h["seed"] = seed;
  h["replicates"] = replicates;
  h["horizons"] = config.horizons;
  h["synthetic_c"] = synthetic_c ? nlohmann::json(*synthetic_c) : nlohmann::json(nullptr);
  return h;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

/// Bracket endpoints for the ln t coefficient: the alpha -> 0 and alpha = 1/2 values.
std::pair<double, double> coefficient_bracket(ProfileKind sign) {
  const double a = log_correction_coefficient(sign, 0.0).log_coefficient;
  const double b = log_correction_coefficient(sign, 0.5).log_coefficient;
  return {std::min(a, b), std::max(a, b)};
}

}  // namespace

unsigned resolve_threads(std::optional<unsigned> requested) {
  if (requested) {
    if (*requested == 0) throw ConfigError("--threads must be positive");
    return *requested;
  }
  if (const char* env = std::getenv("VSBBM_THREADS")) {
    const std::string s(env);
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos && std::stoul(s) > 0) {
      return static_cast<unsigned>(std::stoul(s));
    }
    throw ConfigError("VSBBM_THREADS must be a positive integer, got '" + s + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ReplicateError::ReplicateError(std::uint64_t replicate_, const std::string& what, bool cap)
    : std::runtime_error("replicate " + std::to_string(replicate_) + ": " + what),
      replicate(replicate_),
      cap_exceeded(cap) {}

ReplicateSpec ReplicateSpec::from_config(const ExperimentConfig& config, double horizon) {
  return ReplicateSpec{config.profile(horizon),
                       config.law,
                       config.engine.resolve_checkpoints(horizon, config.analysis.window.beta),
                       config.engine.prune,
                       config.engine.population_cap,
                       config.engine.retention_depth,
                       config.engine.mckean_sigmas,
                       config.analysis.window,
                       config.engine.seed};
}

ReplicateRecord simulate_replicate(const ReplicateSpec& spec, std::uint64_t replicate) {
  const SpeedProfile& profile = spec.profile;
  const double t = profile.horizon();
  const double half = profile.change_time();
  const bool homogeneous = profile.kind() == ProfileKind::Homogeneous;
  const std::uint64_t key = replicate_key(spec.seed, replicate);

  SimulationOptions options;
  options.checkpoints = spec.checkpoints;
  options.prune = spec.prune.rule_for(t);
  options.population_cap = spec.population_cap;

  for (int rerun = 0;; ++rerun) {
    std::vector<MartingaleSample> martingales;
    const auto observe = [&](double r, const Population& pop) {
      double Z = kNaN;
      std::vector<double> Y(spec.mckean_sigmas.size(), kNaN);
      // First-phase paths of a two-speed run are read on the sigma_1 scale.
      if (homogeneous || r <= half * (1.0 + 1e-12)) {
        const double scale = homogeneous ? 1.0 : 1.0 / profile.sigma1();
        const double ratio = homogeneous ? 1.0 : profile.sigma1() / profile.sigma2();
        std::vector<double> xs(pop.positions().begin(), pop.positions().end());
        for (double& x : xs) x *= scale;
        Z = derivative_martingale(xs, r, ratio);
        for (std::size_t k = 0; k < Y.size(); ++k) Y[k] = mckean_martingale(xs, r, spec.mckean_sigmas[k]);
      }
      if (Y.empty()) {
        martingales.push_back({r, Z, kNaN, 0.0});
      } else {
        for (std::size_t k = 0; k < Y.size(); ++k) martingales.push_back({r, Z, Y[k], spec.mckean_sigmas[k]});
      }
    };

    Population pop;
    try {
      pop = simulate(profile, spec.law, key, options, observe);
    } catch (const PopulationCapExceeded& e) {
      throw ReplicateError(replicate, e.what(), true);
    }
    const auto max = sample_max(pop);
    if (!max) {
      if (!options.prune || rerun >= 8) throw ReplicateError(replicate, "population died out");
      options.prune->depth *= 2.0;
      continue;
    }

    ReplicateRecord rec;
    rec.seed = spec.seed;
    rec.replicate = replicate;
    rec.sign = profile.kind();
    rec.alpha = profile.alpha();
    rec.t = t;
    rec.max = *max;
    rec.checkpoints = pop.checkpoints();
    rec.martingales = std::move(martingales);
    rec.retention_depth = spec.retention_depth;
    rec.prune_depth = options.prune ? options.prune->depth : 0.0;
    rec.pruned_count = pop.pruned_count();
    rec.population = pop.size();
    rec.prune_reruns = rerun;

    std::vector<std::size_t> top;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (pop.position(i) >= *max - spec.retention_depth) top.push_back(i);
    }
    std::sort(top.begin(), top.end(), [&](std::size_t a, std::size_t b) {
      return pop.position(a) != pop.position(b) ? pop.position(a) > pop.position(b) : a < b;
    });
    const auto k_half = pop.checkpoint_index(half);
    const bool classify = k_half && pop.checkpoint_index(std::pow(t, spec.window.beta));
    const std::size_t K = rec.checkpoints.size();
    for (std::size_t i : top) {
      TopParticle p;
      p.position = pop.position(i);
      for (std::size_t k = 0; k < K; ++k) {
        p.ancestors.push_back(pop.snapshot(i, k));
        p.ancestor_lineages.push_back(pop.snapshot_lineage(i, k));
      }
      p.half_offset = k_half ? kSqrt2 * profile.sigma1() * half - pop.snapshot(i, *k_half) : kNaN;
      if (classify) {
        const PathFlags f = classify_path(pop.particle(i), profile, spec.window);
        p.in_G = f.in_G;
        p.in_T = f.in_T;
        p.in_H = f.in_H;
      }
      rec.top.push_back(std::move(p));
    }
    return rec;
  }
}

std::vector<ReplicateRecord> simulate_batch(const ReplicateSpec& spec, std::uint64_t first, std::size_t count,
                                            unsigned threads) {
  std::vector<ReplicateRecord> out;
  out.reserve(count);
  ordered_parallel<ReplicateRecord>(
      count, threads, [&](std::size_t i) { return simulate_replicate(spec, first + i); },
      [&](std::size_t, ReplicateRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

std::vector<ReplicateRecord> synthetic_records(const ExperimentConfig& config, double horizon, double c,
                                               std::size_t count, std::uint64_t seed, double checkpoint) {
  const SpeedProfile profile = config.profile(horizon);
  const double m = recentering(profile);
  std::vector<ReplicateRecord> out;
  for (std::size_t i = 0; i < count; ++i) {
    CounterStream rng(replicate_key(seed, i), 0x5E7);
    const double Z = std::exp(0.5 * rng.normal());
    ReplicateRecord r;
    r.seed = seed;
    r.replicate = i;
    r.sign = profile.kind();
    r.alpha = profile.alpha();
    r.t = horizon;
    r.max = m + sample_gumbel_shift(c, Z, rng.uniform());
    r.checkpoints = {checkpoint};
    r.martingales.push_back({checkpoint, Z, kNaN, 0.0});
    r.population = 1;
    TopParticle p;
    p.position = r.max;
    p.ancestors = {kNaN};
    p.ancestor_lineages = {i + 1};
    p.half_offset = kNaN;
    r.top.push_back(p);
    out.push_back(std::move(r));
  }
  return out;
}

RecordFile read_records(std::istream& in) {
  RecordFile file;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!have_header) {
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("header")) {
        throw std::runtime_error("record file does not start with a header line");
      }
      file.header = j.at("header");
      have_header = true;
      continue;
    }
    ++file.lines;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      ++file.corrupt;
      continue;
    }
    try {
      file.records.push_back(record_from_json(j));
    } catch (const std::exception&) {
      ++file.corrupt;
    }
  }
  if (!have_header) throw std::runtime_error("record file is empty (no header line)");
  return file;
}

RecordFile read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_records(in);
}

int cmd_fkpp_front(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log) {
  if (config.horizons.empty()) {
    log << "fkpp-front: the config lists no horizons\n";
    return 2;
  }
  const unsigned threads = resolve_threads(options.threads);
  std::vector<double> horizons = config.horizons;
  std::sort(horizons.begin(), horizons.end());
  const std::string sign = to_string(config.sign);

  std::vector<MaxLawSolution> solutions;
  try {
    ordered_parallel<MaxLawSolution>(
        horizons.size(), threads,
        [&](std::size_t i) {
          return solve_max_law(config.profile(horizons[i]), config.law, InitialCondition::heaviside(), config.solver);
        },
        [&](std::size_t, MaxLawSolution&& s) { solutions.push_back(std::move(s)); });
  } catch (const ConfigurationError& e) {
    log << "fkpp-front: " << e.what() << "\n";
    return 2;
  } catch (const InternalError& e) {
    log << "fkpp-front: solver failure: " << e.what() << "\n";
    return 4;
  }

  auto csv = open_output(options.out_dir, "fronts_" + sign + ".csv");
  csv << "time,front,level,dx,dt,sign,alpha,horizon\n";
  nlohmann::json summary;
  summary["header"] = header_json(config, "fkpp-front", config.engine.seed, 0, std::nullopt);
  std::vector<double> finals;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const auto& s = solutions[h];
    for (std::size_t k = 0; k < s.trace.times.size(); ++k) {
      csv << s.trace.times[k] << ',' << s.trace.positions[k] << ',' << s.trace.level << ',' << config.solver.dx << ','
          << s.dt << ',' << sign << ',' << config.alpha << ',' << horizons[h] << '\n';
    }
    if (s.trace.positions.empty()) {
      log << "fkpp-front: no front at t=" << horizons[h] << "\n";
      return 4;
    }
    finals.push_back(s.trace.positions.back());
    summary["fronts"].push_back({{"horizon", horizons[h]},
                                 {"front", finals.back()},
                                 {"recentering", recentering(config.profile(horizons[h]))}});
  }

  if (config.sign == ProfileKind::Homogeneous) {
    // Homogeneous fronts do not depend on the horizon; fit the longest trace.
    const auto& s = solutions.back();
    std::vector<double> ts;
    std::vector<double> xs;
    for (std::size_t k = 0; k < s.trace.times.size(); ++k) {
      if (s.trace.times[k] >= config.analysis.fit_from - 1e-9) {
        ts.push_back(s.trace.times[k]);
        xs.push_back(s.trace.positions[k]);
      }
    }
    if (ts.size() >= 4) {
      const FrontFit f = front_fit(ts, xs, config.analysis.inverse_sqrt_term);
      summary["front_fit"] = {{"slope", f.slope},
                              {"log_coefficient", f.log_coefficient},
                              {"intercept", f.intercept},
                              {"from", ts.front()},
                              {"to", ts.back()},
                              {"slope_ok", std::abs(f.slope - kSqrt2) <= 0.01},
                              {"log_ok", std::abs(f.log_coefficient + kBramsonLog) <= 0.15}};
      log << "front fit: slope " << f.slope << ", ln t coefficient " << f.log_coefficient << "\n";
    }
  }
  if (horizons.size() >= 4) {
    LogRegressionOptions ro;
    ro.inverse_sqrt_term = config.analysis.inverse_sqrt_term;
    const LogRegression r = log_coefficient_regression(horizons, finals, config.sign, config.alpha, ro);
    const auto [lo, hi] = coefficient_bracket(config.sign);
    const double predicted =
        log_coefficient_at(config.profile(horizons.back()), config.analysis.correction_form);
    summary["log_regression"] = {{"coefficient", r.coefficient},
                                 {"standard_error", r.standard_error},
                                 {"predicted", predicted},
                                 {"bracket", {lo, hi}},
                                 {"bracketed", r.coefficient > lo && r.coefficient < hi}};
    log << "ln t coefficient " << r.coefficient << " (predicted " << predicted << ")\n";
  }
  auto js = open_output(options.out_dir, "fkpp_summary_" + sign + ".json");
  js << summary.dump(2) << '\n';
  return 0;
}

int cmd_bbm_sample(const ExperimentConfig& config, const CommandOptions& options, std::ostream& log) {
  const std::uint64_t seed = options.seed.value_or(config.engine.seed);
  const std::size_t n = options.replicates.value_or(config.engine.replicates);
  const unsigned threads = resolve_threads(options.threads);
  auto out = open_output(options.out_dir, "replicates.jsonl");
  out << nlohmann::json{{"header", header_json(config, "bbm-sample", seed, n, options.synthetic_c)}}.dump() << '\n';

  try {
    for (std::size_t h = 0; h < config.horizons.size(); ++h) {
      const double t = config.horizons[h];
      const std::uint64_t first = static_cast<std::uint64_t>(h) * n;
      if (options.synthetic_c) {
        const double cp = config.analysis.z_checkpoint.value_or(std::min(8.0, t));
        auto recs = synthetic_records(config, t, *options.synthetic_c, n, seed + h, cp);
        for (auto& r : recs) {
          r.replicate += first;
          out << to_jsonl_line(r) << '\n';
        }
        continue;
      }
      ReplicateSpec spec = ReplicateSpec::from_config(config, t);
      spec.seed = seed;
      std::size_t reruns = 0;
      ordered_parallel<ReplicateRecord>(
          n, threads, [&](std::size_t i) { return simulate_replicate(spec, first + i); },
          [&](std::size_t, ReplicateRecord&& r) {
            reruns += r.prune_reruns > 0;
            out << to_jsonl_line(r) << '\n';
          });
      log << "bbm-sample: t=" << t << ", " << n << " replicates, " << reruns << " rerun after extinction\n";
    }
  } catch (const ReplicateError& e) {
    log << "bbm-sample: " << e.what() << "\n";
    return e.cap_exceeded ? 5 : 4;
  }
  out.flush();
  return out ? 0 : 4;
}

namespace {

struct GroupKey {
  ProfileKind sign;
  double alpha;
  double t;
  bool operator<(const GroupKey& o) const {
    return std::tie(sign, alpha, t) < std::tie(o.sign, o.alpha, o.t);
  }
};

double gumbel_slope(const std::vector<double>& recentered, double lo, double hi) {
  const EmpiricalCdf F(recentered);
  std::vector<double> ys;
  std::vector<double> cdf;
  for (double y = lo; y <= hi + 1e-12; y += 0.25) {
    ys.push_back(y);
    cdf.push_back(F(y));
  }
  const DoubleLogCurve curve = gumbel_double_log(ys, cdf);
  if (curve.points.size() < 2) return kNaN;
  std::vector<std::vector<double>> X;
  std::vector<double> target;
  for (const auto& [y, v] : curve.points) {
    X.push_back({y, 1.0});
    target.push_back(v);
  }
  return ordinary_least_squares(X, target).coefficients[0];
}

}  // namespace

int cmd_analyze(const std::string& records_path, const ExperimentConfig& config, const CommandOptions& options,
                std::ostream& log) {
  RecordFile file;
  try {
    file = read_records(records_path);
  } catch (const std::exception& e) {
    log << "analyze: " << e.what() << "\n";
    return 3;
  }
  nlohmann::json summary;
  summary["header"] = file.header;
  summary["analysis_config"] = config.source_text;
  summary["lines"] = file.lines;
  summary["corrupt_lines"] = file.corrupt;
  if (file.corrupt) log << "analyze: skipped " << file.corrupt << " corrupt line(s) of " << file.lines << "\n";
  const bool too_corrupt = file.lines > 0 && 100 * file.corrupt > file.lines;

  std::map<GroupKey, std::vector<ReplicateRecord>> groups;
  for (auto& r : file.records) groups[{r.sign, r.alpha, r.t}].push_back(std::move(r));

  std::optional<double> synthetic_c;
  if (file.header.contains("synthetic_c") && file.header["synthetic_c"].is_number()) {
    synthetic_c = file.header["synthetic_c"].get<double>();
  }
  bool all_ok = true;

  for (const auto& [key, recs] : groups) {
    const SpeedProfile profile = recs.front().profile();
    const std::string tag = horizon_tag(profile);
    const double m = recentering(profile);
    nlohmann::json g;
    g["sign"] = to_string(key.sign);
    g["alpha"] = key.alpha;
    g["t"] = key.t;
    g["replicates"] = recs.size();
    std::vector<double> centered;
    for (const auto& r : recs) centered.push_back(r.max - m);
    g["median_max_minus_m"] = median(centered);

    // Z checkpoint for the law fit: as configured, else the latest one every record carries.
    std::optional<double> zc = config.analysis.z_checkpoint;
    if (zc) {
      for (const auto& r : recs) {
        const auto z = r.Z_at(*zc);
        if (!z || !std::isfinite(*z)) {
          log << "analyze: lalley-sellke fit requested at checkpoint " << *zc << " but replicate " << r.replicate
              << " (t=" << r.t << ") has no Z value there\n";
          return 2;
        }
      }
    } else {
      for (double c : recs.front().checkpoints) {
        const bool everywhere = std::all_of(recs.begin(), recs.end(), [&](const ReplicateRecord& r) {
          const auto z = r.Z_at(c);
          return z && std::isfinite(*z);
        });
        if (everywhere) zc = c;
      }
    }
    if (zc) {
      std::vector<double> Z;
      for (const auto& r : recs) Z.push_back(*r.Z_at(*zc));
      try {
        const LawFit fit = lalley_sellke_fit(centered, Z, config.analysis.law_fit);
        g["law_fit"] = {{"checkpoint", *zc},          {"c_hat", fit.c_hat},    {"sup_distance", fit.sup_distance},
                        {"z_used", fit.z_used},       {"z_dropped", fit.z_dropped}};
        auto csv = open_output(options.out_dir, "lawfit_" + tag + ".csv");
        csv << "y,empirical,model\n";
        for (std::size_t i = 0; i < fit.y_grid.size(); ++i) {
          csv << fit.y_grid[i] << ',' << fit.empirical[i] << ',' << fit.model[i] << '\n';
        }
        if (synthetic_c) {
          const bool ok = std::abs(fit.c_hat / *synthetic_c - 1.0) <= 0.05 && fit.sup_distance <= 0.01;
          g["synthetic_check"] = {{"c_true", *synthetic_c}, {"pass", ok}};
          all_ok = all_ok && ok;
        }
      } catch (const std::invalid_argument& e) {
        g["law_fit"] = {{"error", e.what()}};
      }
    }
    g["gumbel_slope_bulk"] = finite_or_null(gumbel_slope(centered, -1.0, 3.0));

    // Martingale medians per checkpoint.
    {
      auto csv = open_output(options.out_dir, "martingales_" + tag + ".csv");
      csv << "checkpoint,sigma,median_Z,median_Y,count\n";
      std::map<std::pair<double, double>, std::pair<std::vector<double>, std::vector<double>>> by;
      for (const auto& r : recs) {
        for (const auto& s : r.martingales) {
          if (!std::isfinite(s.Z_value)) continue;
          auto& [zs, ys] = by[{s.checkpoint_time, s.sigma_used}];
          zs.push_back(s.Z_value);
          if (std::isfinite(s.Y_value)) ys.push_back(s.Y_value);
        }
      }
      for (const auto& [k, v] : by) {
        const double mz = median(v.first);
        const double my = v.second.empty() ? kNaN : median(v.second);
        csv << k.first << ',' << k.second << ',' << mz << ',' << my << ',' << v.first.size() << '\n';
        g["martingales"].push_back(
            {{"checkpoint", k.first}, {"sigma", k.second}, {"median_Z", mz}, {"median_Y", finite_or_null(my)}});
      }
    }

    // Localisation of t/2 ancestors.
    LocalisationOptions lo;
    lo.d = config.analysis.d;
    const LocalisationSummary loc = localisation_histogram(recs, lo);
    if (!loc.offsets.empty()) {
      g["localisation"] = {{"d", lo.d},
                           {"particles", loc.offsets.size()},
                           {"median_offset", loc.median},
                           {"exceedance", loc.exceedance}};
      auto csv = open_output(options.out_dir, "localisation_" + tag + ".csv");
      csv << "bin_low,bin_high,count\n";
      for (std::size_t b = 0; b < loc.counts.size(); ++b) {
        const double a = loc.bin_low + loc.bin_width * static_cast<double>(b);
        csv << a << ',' << a + loc.bin_width << ',' << loc.counts[b] << '\n';
      }
    }

    // Clusters, when the t - zeta snapshot exists.
    if (recs.front().checkpoint_index(key.t - config.analysis.zeta)) {
      try {
        const ClusterSummary cs = summarize_clusters(cluster_decomposition(recs, config.analysis.zeta));
        g["clusters"] = {{"zeta", config.analysis.zeta}, {"mean_size", cs.mean_size}, {"gaps", cs.gaps.size()}};
      } catch (const std::exception& e) {
        g["clusters"] = {{"error", e.what()}};
      }
    }

    // Laplace functional of phi = 1_{x >= 0} on a small y grid.
    try {
      const LaplaceFit lf = laplace_fit(recs, StepFunction{{1.0}, {0.0}}, {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0});
      g["laplace"] = {{"slope", lf.slope}, {"points", lf.ys.size()}};
    } catch (const std::exception& e) {
      g["laplace"] = {{"error", e.what()}};
    }
    summary["groups"].push_back(g);
  }

  summary["pass"] = all_ok && !too_corrupt;
  auto js = open_output(options.out_dir, "summary.json");
  js << summary.dump(2) << '\n';
  if (too_corrupt) {
    log << "analyze: more than 1% of lines were corrupt\n";
    return 3;
  }
  if (!all_ok) {
    log << "analyze: synthetic self-test outside tolerance\n";
    return 1;
  }
  return 0;
}

}  // namespace vsbbm

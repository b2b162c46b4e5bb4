#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vsbbm/acceptance.hpp"
#include "vsbbm/config.hpp"
#include "vsbbm/records.hpp"
#include "vsbbm/runner.hpp"

using namespace vsbbm;
namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() / ("vsbbm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

TEST_CASE("config defaults and parsing") {
  const auto d = parse_config("");
  CHECK(d.sign == ProfileKind::Homogeneous);
  CHECK(d.horizons == std::vector<double>{12.0});
  CHECK(d.engine.prune.mode == PruneSetting::Mode::Default);

  const auto c = parse_config(
      "[profile]\nsign = minus\nalpha = 0.3\nhorizons = 10, 20\n"
      "[law]\noffspring = 0.5, 0, 0.5\n"
      "[engine]\nprune_depth = 7.5\ncheckpoints = 2, t/2, t\nreplicates = 5\nseed = 9\n"
      "[solver]\ndx = 0.1\nreaction = exact\nwidth = auto\n"
      "[analysis]\ngamma = 0.2\nz_checkpoint = 8\ncorrection_form = asymptotic\n");
  CHECK(c.sign == ProfileKind::Minus);
  CHECK(c.alpha == 0.3);
  CHECK(c.horizons == std::vector<double>{10.0, 20.0});
  CHECK(c.law.max_offspring() == 3);
  CHECK(c.engine.prune.mode == PruneSetting::Mode::Fixed);
  CHECK(c.engine.prune.depth == 7.5);
  CHECK(c.engine.resolve_checkpoints(10.0, 0.4) == std::vector<double>{2.0, 5.0, 10.0});
  CHECK(c.engine.replicates == 5);
  CHECK(c.solver.dx == 0.1);
  CHECK(c.solver.reaction == ReactionScheme::Exact);
  CHECK(*c.analysis.window.gamma == 0.2);
  CHECK(*c.analysis.z_checkpoint == 8.0);
  CHECK(c.analysis.correction_form == CorrectionForm::Asymptotic);
  CHECK(c.profile(10.0).kind() == ProfileKind::Minus);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("[profile]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mystery]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[profile]\nalpha = lots\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[profile]\nsign = minus\nalpha = 0.3\nhorizons = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[profile]\nhorizons = -4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[law]\noffspring = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[engine]\nprune_depth = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[engine]\ncheckpoints = 50\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[engine]\nreplicates = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\ndiffusion = magic\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[analysis]\nA = 0.1\nB = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("loose = 1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), ConfigError);
}

TEST_CASE("record json round trip") {
  ReplicateRecord r;
  r.seed = 4;
  r.replicate = 17;
  r.sign = ProfileKind::Plus;
  r.alpha = 0.3;
  r.t = 12.0;
  r.max = 14.25;
  r.checkpoints = {6.0, 12.0};
  r.martingales = {{6.0, 0.5, 0.1, 1.0}, {12.0, std::nan(""), std::nan(""), 1.0}};
  TopParticle p;
  p.position = 14.25;
  p.ancestors = {std::nan(""), 14.25};
  p.ancestor_lineages = {3, 9};
  p.half_offset = 1.5;
  p.in_G = true;
  r.top = {p};
  r.retention_depth = 2.0;
  r.prune_depth = 16.4;
  r.pruned_count = 10;
  r.population = 500;
  const std::string line = to_jsonl_line(r);
  CHECK(line.find("null") != std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
  const auto back = record_from_json(nlohmann::json::parse(line));
  CHECK(to_jsonl_line(back) == line);
  CHECK(*back.Z_at(6.0) == 0.5);
  CHECK(std::isnan(*back.Z_at(12.0)));
  CHECK_FALSE(back.Z_at(3.0).has_value());
  CHECK(std::isnan(back.top[0].ancestors[0]));

  auto j = nlohmann::json::parse(line);
  j["checkpoints"] = {6.0};
  CHECK_THROWS(record_from_json(j));
}

TEST_CASE("ordered parallel emits in order and propagates failures") {
  for (unsigned threads : {1u, 2u, 5u}) {
    std::vector<std::size_t> seen;
    ordered_parallel<std::size_t>(
        100, threads, [](std::size_t i) { return i * i; },
        [&](std::size_t i, std::size_t&& v) {
          CHECK(v == i * i);
          seen.push_back(i);
        });
    REQUIRE(seen.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(seen[i] == i);
    CHECK_THROWS_AS(ordered_parallel<int>(
                        50, threads,
                        [](std::size_t i) -> int {
                          if (i == 7) throw std::runtime_error("boom");
                          return 0;
                        },
                        [](std::size_t, int&&) {}),
                    std::runtime_error);
  }
}

TEST_CASE("resolve threads") {
  CHECK(resolve_threads(3u) == 3);
  ::setenv("VSBBM_THREADS", "2", 1);
  CHECK(resolve_threads(std::nullopt) == 2);
  ::unsetenv("VSBBM_THREADS");
  CHECK(resolve_threads(std::nullopt) >= 1);
}

TEST_CASE("bbm-sample output") {
  TempDir dir;
  std::ostringstream log;
  const auto config = parse_config("[profile]\nhorizons = 5\n[engine]\nreplicates = 0\n");
  CommandOptions o;
  o.out_dir = (dir.path / "empty").string();
  REQUIRE(cmd_bbm_sample(config, o, log) == 0);
  const std::string empty = slurp(dir.path / "empty" / "replicates.jsonl");
  CHECK(std::count(empty.begin(), empty.end(), '\n') == 1);
  CHECK(empty.find("\"header\"") != std::string::npos);

  const auto small = parse_config("[profile]\nsign = plus\nalpha = 0.3\nhorizons = 5, 6\n[engine]\nreplicates = 7\n");
  std::string bytes[3];
  for (int k = 0; k < 3; ++k) {
    o.out_dir = (dir.path / std::to_string(k)).string();
    o.threads = k == 2 ? 4u : 1u;
    REQUIRE(cmd_bbm_sample(small, o, log) == 0);
    bytes[k] = slurp(fs::path(o.out_dir) / "replicates.jsonl");
  }
  CHECK(bytes[0] == bytes[1]);
  CHECK(bytes[0] == bytes[2]);
  CHECK(std::count(bytes[0].begin(), bytes[0].end(), '\n') == 15);
  // The header carries the config verbatim.
  std::istringstream in(bytes[0]);
  const auto file = read_records(in);
  CHECK(file.header["config"].get<std::string>() == small.source_text);
  CHECK(file.records.size() == 14);

  o.seed = 2;
  o.out_dir = (dir.path / "other").string();
  REQUIRE(cmd_bbm_sample(small, o, log) == 0);
  CHECK(slurp(dir.path / "other" / "replicates.jsonl") != bytes[0]);
}

TEST_CASE("bbm-sample reports the population cap") {
  TempDir dir;
  std::ostringstream log;
  const auto config = parse_config("[profile]\nhorizons = 10\n[engine]\nreplicates = 2\nprune_depth = off\npopulation_cap = 100\n");
  CommandOptions o;
  o.out_dir = dir.path.string();
  CHECK(cmd_bbm_sample(config, o, log) == 5);
  CHECK(log.str().find("replicate") != std::string::npos);
}

TEST_CASE("fkpp-front") {
  TempDir dir;
  std::ostringstream log;
  CommandOptions o;
  o.out_dir = dir.path.string();
  CHECK(cmd_fkpp_front(parse_config("[profile]\nhorizons =\n"), o, log) == 2);
  REQUIRE(cmd_fkpp_front(parse_config("[profile]\nhorizons = 20, 30\n"), o, log) == 0);
  CHECK(fs::exists(dir.path / "fronts_homogeneous.csv"));
  const auto summary = nlohmann::json::parse(slurp(dir.path / "fkpp_summary_homogeneous.json"));
  CHECK(summary.contains("front_fit"));
  CHECK(std::abs(summary["front_fit"]["slope"].get<double>() - std::sqrt(2.0)) < 0.05);
}

TEST_CASE("analyze") {
  TempDir dir;
  std::ostringstream log;
  CommandOptions o;
  o.out_dir = dir.path.string();
  const auto config = parse_config("[profile]\nhorizons = 12\n[engine]\nreplicates = 100000\n");
  o.synthetic_c = 1.0;
  REQUIRE(cmd_bbm_sample(config, o, log) == 0);
  const auto records = (dir.path / "replicates.jsonl").string();
  CHECK(cmd_analyze(records, parse_config(""), o, log) == 0);
  const auto summary = nlohmann::json::parse(slurp(dir.path / "summary.json"));
  CHECK(summary["pass"].get<bool>());

  // Missing Z checkpoint.
  CHECK(cmd_analyze(records, parse_config("[analysis]\nz_checkpoint = 3\n"), o, log) == 2);

  // Corrupt lines: a few are tolerated, more than 1% fail.
  std::string text = slurp(records);
  const auto cut = [&](std::size_t lines) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    std::size_t k = 0;
    while (std::getline(in, line)) {
      if (k > 0 && k <= lines) line = "{not json";
      out << line << '\n';
      ++k;
    }
    return out.str();
  };
  {
    std::ofstream(dir.path / "few.jsonl") << cut(50);
    std::ostringstream l;
    CHECK(cmd_analyze((dir.path / "few.jsonl").string(), parse_config(""), o, l) == 0);
    CHECK(l.str().find("50 corrupt") != std::string::npos);
  }
  {
    std::ofstream(dir.path / "many.jsonl") << cut(5000);
    CHECK(cmd_analyze((dir.path / "many.jsonl").string(), parse_config(""), o, log) == 3);
  }
  CHECK(cmd_analyze((dir.path / "absent.jsonl").string(), parse_config(""), o, log) == 3);
}

TEST_CASE("acceptance suite selector") {
  const auto& names = acceptance_suites();
  CHECK(names.back() == "all");
  CHECK(std::find(names.begin(), names.end(), "oracles") != names.end());
  std::ostringstream out;
  CHECK_THROWS_AS(run_acceptance("nonsense", {}, out), std::invalid_argument);
}

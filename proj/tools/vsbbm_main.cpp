#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vsbbm/acceptance.hpp"
#include "vsbbm/config.hpp"
#include "vsbbm/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<unsigned> threads;
  std::optional<double> synthetic_c;
  std::string out = ".";
  std::string suite = "all";
  std::string records;
};

vsbbm::CommandOptions command_options(const Flags& f) {
  vsbbm::CommandOptions o;
  o.out_dir = f.out;
  o.seed = f.seed;
  o.replicates = f.replicates;
  o.threads = f.threads;
  o.synthetic_c = f.synthetic_c;
  return o;
}

void common(CLI::App* cmd, Flags& f, bool sampling) {
  cmd->add_option("--config", f.config, "experiment config (INI)");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads (default: VSBBM_THREADS, then all cores)");
  if (sampling) {
    cmd->add_option("--seed", f.seed, "master seed, overrides the config");
    cmd->add_option("--replicates", f.replicates, "replicates per horizon, overrides the config");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-speed branching Brownian motion experiments"};
  app.require_subcommand(1);
  Flags f;

  auto* front = app.add_subcommand("fkpp-front", "solve the F-KPP max law and fit front positions");
  common(front, f, false);
  auto* sample = app.add_subcommand("bbm-sample", "simulate replicates to JSONL");
  common(sample, f, true);
  sample->add_option("--synthetic-c", f.synthetic_c, "draw maxima from the model law with this c instead");
  auto* analyze = app.add_subcommand("analyze", "fit and summarise a replicate file");
  common(analyze, f, false);
  analyze->add_option("records", f.records, "replicates.jsonl")->required();
  auto* acceptance = app.add_subcommand("acceptance", "run acceptance criteria");
  acceptance->add_option("--suite", f.suite, "suite name or 'all'");
  acceptance->add_option("--seed", f.seed, "master seed");
  acceptance->add_option("--threads", f.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (acceptance->parsed()) {
      vsbbm::AcceptanceOptions o;
      o.threads = vsbbm::resolve_threads(f.threads);
      if (f.seed) o.seed = *f.seed;
      std::vector<vsbbm::CriterionResult> results;
      try {
        results = vsbbm::run_acceptance(f.suite, o, std::cout);
      } catch (const std::invalid_argument& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return 2;
      }
      std::size_t failed = 0;
      for (const auto& r : results) failed += !r.pass;
      std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
      return failed ? 1 : 0;
    }
    const vsbbm::ExperimentConfig config =
        f.config.empty() ? vsbbm::parse_config("") : vsbbm::load_config(f.config);
    const auto options = command_options(f);
    if (front->parsed()) return vsbbm::cmd_fkpp_front(config, options, std::cerr);
    if (sample->parsed()) return vsbbm::cmd_bbm_sample(config, options, std::cerr);
    return vsbbm::cmd_analyze(f.records, config, options, std::cerr);
  } catch (const vsbbm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}

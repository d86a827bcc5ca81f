// Experiment runner for the free-pressure laboratory. Subcommands execute a
// key = value config file and persist metrics, tables and plots; replay
// verifies recorded runs.

#include <CLI11.hpp>
#include <cstdio>

#include "fplab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"free pressure laboratory"};
  app.require_subcommand(1);

  const char* commands[] = {"volume",      "pressure",    "equilibrium", "gibbs-entropy",
                            "chi-penalty", "duality-gap", "microstate"};

  std::string config_path, out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;

  for (const char* name : commands) {
    auto* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker count (never changes results)");
  }

  std::string results_path, replay_hash;
  auto* replay = app.add_subcommand("replay", "verify recorded runs");
  replay->add_option("results", results_path, "metrics.jsonl to verify")->required();
  replay->add_option("--hash", replay_hash, "restrict to one config hash");
  replay->add_option("--seed", seed, "replay with a different seed")->each(
      [&](const std::string&) { seed_set = true; });
  replay->add_option("--out", out_dir, "scratch directory for reruns");
  replay->add_option("--jobs", jobs, "worker count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (replay->parsed()) {
      fplab::ReplayOptions opt;
      opt.results_path = results_path;
      if (!replay_hash.empty()) opt.config_hash = replay_hash;
      if (seed_set) opt.seed_override = seed;
      opt.out_dir = out_dir + "/replay";
      opt.jobs = jobs;
      return fplab::replay_results(opt);
    }

    auto* sub = app.get_subcommands().front();
    fplab::ExperimentConfig cfg = fplab::ExperimentConfig::load(config_path);
    if (cfg.command() != sub->get_name()) {
      std::fprintf(stderr, "config: command '%s' does not match subcommand '%s'\n",
                   cfg.command().c_str(), sub->get_name().c_str());
      return 2;
    }
    fplab::RunOptions opt;
    opt.out_dir = out_dir;
    if (seed_set) opt.seed_override = seed;
    opt.jobs = jobs;
    return fplab::run_experiment(cfg, opt);
  } catch (const fplab::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

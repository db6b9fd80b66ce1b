#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "collider/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Backdoor-robust training with gradient coresets and LID regularization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run an experiment (flags override config keys)");
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--mode", mode, "vanilla|coreset|collider, or a comma list");
  run->add_option("--seed", seed, "Run a single seed instead of the configured list");
  run->add_option("--out", out_dir, "Output directory");

  std::string lid_config;
  auto* lid = app.add_subcommand("inspect-lid", "Dump per-sample LID for a Collider run");
  lid->add_option("--config", lid_config, "Experiment config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  const std::size_t workers = collider::worker_count_from_env();
  try {
    if (*run) {
      collider::ExperimentConfig cfg = collider::parse_config(config_path);
      if (!mode.empty()) {
        cfg.modes.clear();
        std::string item;
        std::stringstream ss(mode);
        while (std::getline(ss, item, ',')) cfg.modes.push_back(collider::parse_train_mode(item));
      }
      if (seed) cfg.output.seeds = {*seed};
      if (!out_dir.empty()) cfg.output.dir = out_dir;
      cfg.validate();
      return collider::run_experiment(cfg, workers);
    }
    const collider::ExperimentConfig cfg = collider::parse_config(lid_config);
    return collider::inspect_lid(cfg, workers);
  } catch (const collider::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 3;
  }
}

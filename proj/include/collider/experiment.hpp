#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <string_view>
#include <vector>

#include "collider/data.hpp"
#include "collider/poison.hpp"
#include "collider/trainer.hpp"

namespace collider {

struct DataConfig {
  std::string source = "synthetic";  // synthetic | idx
  std::size_t classes = 10;
  std::size_t per_class = 300;
  std::size_t test_per_class = 100;
  std::size_t image_side = 12;
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  double val_fraction = 0.04;

  bool operator==(const DataConfig&) const = default;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  // When false, wall_time_ms is written as 0 so reruns are byte-identical.
  bool timing = false;
  bool lid_dump = false;
  bool coreset_dump = false;
  bool checkpoints = true;

  bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
  DataConfig data;
  PoisonSpec poison;
  TrainConfig train;
  std::vector<TrainMode> modes{TrainMode::Collider};
  OutputConfig output;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the INI-style experiment file:
///
///   [data]    source (required), classes, per_class, test_per_class, image_side,
///             train_images, train_labels, test_images, test_labels, val_fraction
///   [poison]  target_class (required), trigger, injection_rate, label_mode,
///             patch_size, patch_intensity, patch_corner, sin_amplitude, sin_frequency
///   [train]   mode (required; comma list allowed), epochs, coreset_ratio,
///             lid_start_epoch, lid_neighbors, lid_window, lambda, lid_batch,
///             lid_zero_distance, lid_max, batch_size, lr, momentum, weight_decay,
///             mixup_alpha, hidden
///   [output]  dir, seeds, timing, lid_dump, coreset_dump, checkpoints
///
/// Unknown keys, duplicate keys, missing required keys and malformed values
/// raise ConfigError. Relative paths resolve against `base_dir`.
ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig parse_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

/// Data for one seed, before training.
struct PreparedData {
  Dataset train;       // poisoned, validation removed
  Dataset validation;  // clean
  Dataset test;        // clean
  Dataset attack;      // triggered non-target test samples
};

/// Builds, poisons and splits the data for one seed. Data, poison, split and
/// training each draw from an independent stream derived from the seed.
PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed);
TrainConfig train_config_for(const ExperimentConfig& cfg, TrainMode mode, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::Collider;
  TrainResult training;
  double test_acc = 0.0;  // best-by-validation model
  double asr = 0.0;
};

SeedResult run_seed(const ExperimentConfig& cfg, const PreparedData& data, TrainMode mode, std::uint64_t seed,
                    TrainHooks hooks = {});

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
};
Summary summarize(const std::vector<double>& values);

/// Runs every (mode, seed) pair and writes per-seed CSVs, checkpoints and a
/// summary.json per mode under cfg.output.dir. Progress lines go to `log`.
/// Returns a process exit code.
int run_experiment(const ExperimentConfig& cfg, std::size_t workers = 1, std::ostream& log = std::cout);

/// Collider run on the first seed with the LID dump enabled; prints clean vs
/// poisoned medians of the first LID epoch.
int inspect_lid(const ExperimentConfig& cfg, std::size_t workers = 1);

}  // namespace collider

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "collider/coreset.hpp"
#include "collider/data.hpp"
#include "collider/lid.hpp"
#include "collider/metrics.hpp"
#include "collider/model.hpp"

namespace collider {

enum class TrainMode { Vanilla, CoresetOnly, Collider };

std::string to_string(TrainMode m);
/// Accepts vanilla | coreset | collider.
TrainMode parse_train_mode(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::Collider;
  std::size_t epochs = 60;
  double coreset_ratio = 0.3;
  // Epoch from which LID is estimated, penalized and used for elimination.
  // Equal to `epochs` means never.
  std::size_t lid_start_epoch = 15;
  std::size_t lid_neighbors = 60;
  std::size_t lid_window = 5;
  double lambda = 0.01;
  // Per-class LID batch; larger classes are subsampled each epoch.
  std::size_t lid_batch = 2048;
  double lid_zero_distance = 1e-12;
  double lid_max = 1e6;
  std::size_t batch_size = 128;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  // 0 disables mixup.
  double mixup_alpha = 0.0;
  std::vector<std::size_t> hidden{64};
  std::uint64_t seed = 0;
  // Thread fan-out across classes. Results do not depend on it.
  std::size_t workers = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Multi-step schedule: lr / 10 from floor(2T/3), lr / 100 from floor(5T/6).
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

/// Per-class removals per LID epoch: floor((1 - k) * class_size_at_start / (T - l)).
std::size_t elimination_per_epoch(std::size_t class_size_at_start, double coreset_ratio, std::size_t epochs,
                                  std::size_t lid_start_epoch);

/// Smoothed LID of one sample at the time its class was processed.
struct LidRecord {
  std::uint64_t id = 0;
  double smoothed = 0.0;
  bool eliminated = false;  // removed this epoch
};

/// Optional instrumentation. Callbacks run on the training thread.
struct TrainHooks {
  std::function<void(std::size_t epoch, std::span<const std::uint64_t> batch_ids)> on_batch;
  std::function<void(std::size_t epoch, std::size_t cls, const CoresetProblem&, const CoresetSolution&)>
      on_selection;
  std::function<void(std::size_t epoch, std::size_t cls, std::span<const LidRecord> records)> on_lid;
};

/// Held-out data used to fill EpochReport. `attack` is the triggered,
/// non-target test set; either pointer may be null.
struct EvalSets {
  const Dataset* validation = nullptr;
  const Dataset* attack = nullptr;
  std::size_t target_class = 0;
};

/// Owns the state of one training run: model, live set, LID trackers and
/// epoch counter.
///
/// Random draws come from a single generator seeded with cfg.seed, in this
/// order per epoch: per-class LID subsets (ascending class), the shuffle of
/// the epoch's training set, then per mini-batch the mixup partner
/// permutation and weights.
class Trainer {
 public:
  Trainer(const Dataset& train, TrainConfig cfg, EvalSets eval = {}, TrainHooks hooks = {});

  /// One pass of selection, elimination and SGD. Throws InvariantError when
  /// elimination would leave a class smaller than its coreset floor.
  EpochReport run_epoch();

  bool finished() const { return epoch_ >= cfg_.epochs; }
  std::size_t epoch() const { return epoch_; }
  const ModelState& model() const { return model_; }
  const TrainConfig& config() const { return cfg_; }

  std::size_t eliminated_total() const { return eliminated_total_; }
  std::vector<std::uint64_t> live_ids() const;
  std::vector<std::size_t> live_class_counts() const;
  const std::vector<std::uint64_t>& last_coreset() const { return last_coreset_; }
  const LidTracker& tracker(std::size_t cls) const { return trackers_.at(cls); }
  /// Class size frozen when LID started (0 before that).
  std::size_t class_size_at_lid_start(std::size_t cls) const { return size_at_start_.at(cls); }

 private:
  struct ClassWork;

  const Dataset& train_;
  TrainConfig cfg_;
  EvalSets eval_;
  TrainHooks hooks_;
  ModelState model_;
  Rng rng_;
  std::size_t epoch_ = 0;
  std::vector<char> live_;
  std::vector<LidTracker> trackers_;
  std::vector<std::size_t> size_at_start_;
  std::vector<std::uint64_t> poisoned_ids_;
  std::vector<std::uint64_t> last_coreset_;
  std::size_t eliminated_total_ = 0;
};

struct TrainResult {
  ModelState final_model;
  ModelState best_model;  // highest validation accuracy, later epoch on ties
  std::size_t best_epoch = 0;
  std::vector<EpochReport> history;
};

/// Runs cfg.epochs epochs. With no validation set the final model is also the best.
TrainResult train(const Dataset& train_set, const Dataset& validation, const TrainConfig& cfg,
                  const Dataset* attack = nullptr, std::size_t target_class = 0, TrainHooks hooks = {});

}  // namespace collider

#include "collider/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "collider/parallel.hpp"

namespace collider {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Vanilla:
      return "vanilla";
    case TrainMode::CoresetOnly:
      return "coreset";
    case TrainMode::Collider:
      return "collider";
  }
  return "collider";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "vanilla") return TrainMode::Vanilla;
  if (s == "coreset") return TrainMode::CoresetOnly;
  if (s == "collider") return TrainMode::Collider;
  throw ParameterError("unknown mode '" + s + "' (expected vanilla|coreset|collider)");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ParameterError("epochs must be positive");
  if (!(coreset_ratio > 0.0 && coreset_ratio <= 1.0)) throw ParameterError("coreset_ratio must be in (0, 1]");
  if (lid_start_epoch > epochs) throw ParameterError("lid_start_epoch must not exceed epochs");
  if (lid_neighbors < 2) throw ParameterError("lid_neighbors must be >= 2");
  if (lid_window == 0) throw ParameterError("lid_window must be positive");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (lid_batch <= lid_neighbors) throw ParameterError("lid_batch must exceed lid_neighbors");
  if (batch_size == 0) throw ParameterError("batch_size must be positive");
  if (!(lr > 0.0)) throw ParameterError("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be >= 0");
  if (!(mixup_alpha >= 0.0)) throw ParameterError("mixup_alpha must be >= 0");
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.lr;
  if (epoch >= (2 * cfg.epochs) / 3) lr *= 0.1;
  if (epoch >= (5 * cfg.epochs) / 6) lr *= 0.1;
  return lr;
}

std::size_t elimination_per_epoch(std::size_t class_size_at_start, double coreset_ratio, std::size_t epochs,
                                  std::size_t lid_start_epoch) {
  if (lid_start_epoch >= epochs) return 0;
  const double m = (1.0 - coreset_ratio) * static_cast<double>(class_size_at_start) /
                   static_cast<double>(epochs - lid_start_epoch);
  return static_cast<std::size_t>(std::floor(m + 1e-9));
}

// Per-class inputs and outputs of the parallel selection phase.
struct Trainer::ClassWork {
  std::vector<std::size_t> rows;        // rows of the epoch's live matrix
  std::vector<std::size_t> lid_rows;    // subset of `rows` used for LID
  std::vector<std::uint64_t> eliminated;
  std::vector<LidRecord> lid_records;
  CoresetProblem problem;
  CoresetSolution solution;
};

Trainer::Trainer(const Dataset& train, TrainConfig cfg, EvalSets eval, TrainHooks hooks)
    : train_(train), cfg_(std::move(cfg)), eval_(eval), hooks_(std::move(hooks)), rng_(cfg_.seed) {
  cfg_.validate();
  if (train_.empty()) throw ParameterError("Trainer: empty training set");
  model_ = ModelState::create(train_.shape().size(), cfg_.hidden, train_.num_classes(), derive_seed(cfg_.seed, 0));
  live_.assign(train_.size(), 1);
  trackers_.assign(train_.num_classes(), LidTracker(cfg_.lid_window));
  size_at_start_.assign(train_.num_classes(), 0);
  for (std::size_t c = 0; c < train_.num_classes(); ++c) {
    std::vector<std::uint64_t> ids;
    for (auto i : train_.indices_of_class(c)) ids.push_back(train_[i].id);
    trackers_[c].track(ids);
  }
  poisoned_ids_ = train_.poisoned_ids();
}

std::vector<std::uint64_t> Trainer::live_ids() const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < train_.size(); ++i) {
    if (live_[i]) out.push_back(train_[i].id);
  }
  return out;
}

std::vector<std::size_t> Trainer::live_class_counts() const {
  std::vector<std::size_t> counts(train_.num_classes(), 0);
  for (std::size_t i = 0; i < train_.size(); ++i) {
    if (live_[i]) ++counts[train_[i].label];
  }
  return counts;
}

EpochReport Trainer::run_epoch() {
  if (finished()) throw ParameterError("run_epoch: all epochs already ran");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t epoch = epoch_;
  const std::size_t classes = train_.num_classes();

  std::vector<std::size_t> live_pos;
  for (std::size_t i = 0; i < train_.size(); ++i) {
    if (live_[i]) live_pos.push_back(i);
  }

  std::vector<std::size_t> train_pos;
  if (cfg_.mode == TrainMode::Vanilla) {
    train_pos = live_pos;
    last_coreset_ = live_ids();
  } else {
    const bool lid_active = cfg_.mode == TrainMode::Collider && epoch >= cfg_.lid_start_epoch;
    const Matrix inputs = train_.pixels(live_pos);
    const auto labels = train_.labels(live_pos);
    const ForwardResult fwd = forward(model_, inputs);
    const Matrix proxies = gradient_proxy_from_logits(fwd.logits, labels);

    std::vector<ClassWork> work(classes);
    for (std::size_t r = 0; r < live_pos.size(); ++r) work[labels[r]].rows.push_back(r);

    if (lid_active) {
      for (std::size_t c = 0; c < classes; ++c) {
        auto& w = work[c];
        if (epoch == cfg_.lid_start_epoch) size_at_start_[c] = w.rows.size();
        w.lid_rows = w.rows;
        if (w.lid_rows.size() > cfg_.lid_batch) {
          for (std::size_t i = 0; i < cfg_.lid_batch; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, w.lid_rows.size() - 1);
            std::swap(w.lid_rows[i], w.lid_rows[pick(rng_)]);
          }
          w.lid_rows.resize(cfg_.lid_batch);
          std::sort(w.lid_rows.begin(), w.lid_rows.end());
        }
      }
    }

    parallel_for(classes, cfg_.workers, [&](std::size_t c) {
      auto& w = work[c];
      if (w.rows.empty()) return;
      std::vector<double> penalties;
      if (lid_active && w.lid_rows.size() >= 3) {
        Matrix feats(w.lid_rows.size(), fwd.penultimate.cols());
        std::vector<std::uint64_t> lid_ids(w.lid_rows.size());
        for (std::size_t i = 0; i < w.lid_rows.size(); ++i) {
          const auto src = fwd.penultimate.row(w.lid_rows[i]);
          std::copy(src.begin(), src.end(), feats.row(i).begin());
          lid_ids[i] = train_[live_pos[w.lid_rows[i]]].id;
        }
        LidOptions opts{std::min(cfg_.lid_neighbors, w.lid_rows.size() - 1), cfg_.lid_zero_distance, cfg_.lid_max};
        const auto lid = estimate_lid(feats, opts);
        auto& tracker = trackers_[c];
        tracker.update(lid_ids, lid, epoch);

        const std::size_t m = elimination_per_epoch(size_at_start_[c], cfg_.coreset_ratio, cfg_.epochs,
                                                    cfg_.lid_start_epoch);
        const std::size_t removable = std::min(m, tracker.estimated_ids().size());
        w.eliminated = top_lid_ids(tracker, removable);
        const double remaining = static_cast<double>(w.rows.size() - w.eliminated.size());
        if (remaining < cfg_.coreset_ratio * static_cast<double>(size_at_start_[c]) - 1e-9 || remaining < 1.0) {
          throw InvariantError("class " + std::to_string(c) + " would drop to " +
                               std::to_string(w.rows.size() - w.eliminated.size()) +
                               " live samples, below the coreset floor");
        }
        if (hooks_.on_lid) {
          for (auto id : tracker.estimated_ids()) {
            const bool gone = std::find(w.eliminated.begin(), w.eliminated.end(), id) != w.eliminated.end();
            w.lid_records.push_back({id, *tracker.smoothed(id), gone});
          }
        }
        tracker.eliminate(w.eliminated);
        std::vector<std::size_t> kept;
        for (auto r : w.rows) {
          const auto id = train_[live_pos[r]].id;
          if (std::find(w.eliminated.begin(), w.eliminated.end(), id) == w.eliminated.end()) kept.push_back(r);
        }
        w.rows = std::move(kept);
        penalties.resize(w.rows.size());
        for (std::size_t i = 0; i < w.rows.size(); ++i) {
          const auto s = tracker.smoothed(train_[live_pos[w.rows[i]]].id);
          penalties[i] = s ? cfg_.lambda * *s : 0.0;
        }
      } else {
        penalties.assign(w.rows.size(), 0.0);
      }

      Matrix class_proxies(w.rows.size(), proxies.cols());
      std::vector<std::uint64_t> ids(w.rows.size());
      for (std::size_t i = 0; i < w.rows.size(); ++i) {
        const auto src = proxies.row(w.rows[i]);
        std::copy(src.begin(), src.end(), class_proxies.row(i).begin());
        ids[i] = train_[live_pos[w.rows[i]]].id;
      }
      w.problem = build_problem(ids, class_proxies, penalties, cfg_.coreset_ratio);
      w.solution = facility_location_greedy(w.problem);
    });

    // Join: apply eliminations and collect the coreset in class order.
    std::vector<std::uint64_t> selected;
    for (std::size_t c = 0; c < classes; ++c) {
      auto& w = work[c];
      for (auto id : w.eliminated) {
        for (auto r : std::span(live_pos)) {
          if (train_[r].id == id) {
            live_[r] = 0;
            break;
          }
        }
      }
      eliminated_total_ += w.eliminated.size();
      if (lid_active && hooks_.on_lid) hooks_.on_lid(epoch, c, w.lid_records);
      if (!w.rows.empty() && hooks_.on_selection) hooks_.on_selection(epoch, c, w.problem, w.solution);
      selected.insert(selected.end(), w.solution.selected.begin(), w.solution.selected.end());
    }
    last_coreset_ = selected;

    std::sort(selected.begin(), selected.end());
    for (auto p : live_pos) {
      if (std::binary_search(selected.begin(), selected.end(), train_[p].id)) train_pos.push_back(p);
    }
  }

  std::shuffle(train_pos.begin(), train_pos.end(), rng_);
  const SgdParams sgd{learning_rate_at(cfg_, epoch), cfg_.momentum, cfg_.weight_decay};
  for (std::size_t start = 0; start < train_pos.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(train_pos.size(), start + cfg_.batch_size);
    const std::span<const std::size_t> batch(train_pos.data() + start, end - start);
    if (hooks_.on_batch) {
      std::vector<std::uint64_t> ids(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) ids[i] = train_[batch[i]].id;
      hooks_.on_batch(epoch, ids);
    }
    const Matrix x = train_.pixels(batch);
    const Matrix y = one_hot(train_.labels(batch), train_.num_classes());
    LossAndGrad lg;
    if (cfg_.mixup_alpha > 0.0) {
      const MixedBatch mixed = mixup_batch(x, y, cfg_.mixup_alpha, rng_);
      lg = loss_and_grad(model_, mixed.inputs, mixed.targets);
    } else {
      lg = loss_and_grad(model_, x, y);
    }
    sgd_step(model_, lg.grads, sgd);
  }

  EpochReport report;
  report.epoch = epoch;
  if (eval_.validation != nullptr && !eval_.validation->empty()) report.val_acc = accuracy(model_, *eval_.validation);
  if (eval_.attack != nullptr && !eval_.attack->empty()) {
    report.asr = fraction_predicted_as(model_, *eval_.attack, eval_.target_class);
  }
  report.filtered_poison_fraction = filtered_poison_fraction(last_coreset_, poisoned_ids_);
  report.coreset_size = last_coreset_.size();
  report.eliminated_total = eliminated_total_;
  report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  ++epoch_;
  return report;
}

TrainResult train(const Dataset& train_set, const Dataset& validation, const TrainConfig& cfg, const Dataset* attack,
                  std::size_t target_class, TrainHooks hooks) {
  EvalSets eval{validation.empty() ? nullptr : &validation, attack, target_class};
  Trainer trainer(train_set, cfg, eval, std::move(hooks));
  TrainResult result;
  double best_acc = -1.0;
  while (!trainer.finished()) {
    result.history.push_back(trainer.run_epoch());
    const auto& r = result.history.back();
    if (eval.validation == nullptr || r.val_acc >= best_acc) {
      best_acc = r.val_acc;
      result.best_model = trainer.model();
      result.best_epoch = r.epoch;
    }
  }
  result.final_model = trainer.model();
  return result;
}

}  // namespace collider

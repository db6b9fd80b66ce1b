#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "collider/experiment.hpp"
#include "collider/trainer.hpp"
#include "fixtures.hpp"

using namespace collider;

namespace {

TrainConfig small_config(TrainMode mode, std::size_t epochs) {
  TrainConfig c;
  c.mode = mode;
  c.epochs = epochs;
  c.lid_start_epoch = epochs / 4;
  c.lid_neighbors = 10;
  c.lid_batch = 200;
  c.batch_size = 32;
  c.hidden = {16};
  c.seed = 99;
  return c;
}

PreparedData small_poisoned(std::uint64_t seed, std::size_t per_class = 60) {
  ExperimentConfig cfg;
  cfg.data.classes = 4;
  cfg.data.per_class = per_class;
  cfg.data.test_per_class = 30;
  cfg.data.image_side = 8;
  cfg.data.val_fraction = 0.1;
  cfg.poison.target_class = 1;
  cfg.poison.injection_rate = 0.2;
  return prepare_data(cfg, seed);
}

std::vector<EpochReport> without_time(std::vector<EpochReport> h) {
  for (auto& r : h) r.wall_time_ms = 0.0;
  return h;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("multi-step schedule divides at two thirds and five sixths") {
    TrainConfig c;
    c.epochs = 120;
    c.lr = 0.1;
    CHECK(learning_rate_at(c, 0) == 0.1);
    CHECK(learning_rate_at(c, 79) == 0.1);
    CHECK(learning_rate_at(c, 80) == doctest::Approx(0.01));
    CHECK(learning_rate_at(c, 99) == doctest::Approx(0.01));
    CHECK(learning_rate_at(c, 100) == doctest::Approx(0.001));
  }

  TEST_CASE("per-epoch elimination count") {
    CHECK(elimination_per_epoch(5000, 0.3, 120, 30) == 38);
    CHECK(elimination_per_epoch(300, 0.3, 12, 3) == 23);
    CHECK(elimination_per_epoch(100, 0.5, 10, 0) == 5);
    CHECK(elimination_per_epoch(100, 0.5, 10, 10) == 0);
  }

  TEST_CASE("configuration is validated") {
    TrainConfig c;
    c.coreset_ratio = 0.0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = TrainConfig{};
    c.lid_start_epoch = c.epochs + 1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = TrainConfig{};
    c.lid_neighbors = 1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    CHECK(parse_train_mode("coreset") == TrainMode::CoresetOnly);
    CHECK_THROWS_AS(parse_train_mode("craig"), ParameterError);
  }

  TEST_CASE("one vanilla epoch takes ceil(n / b) steps over every sample") {
    const auto ds = generate_synthetic(3, 50, 8, 4);
    auto cfg = small_config(TrainMode::Vanilla, 1);
    std::size_t steps = 0;
    std::multiset<std::uint64_t> seen;
    TrainHooks hooks;
    hooks.on_batch = [&](std::size_t, std::span<const std::uint64_t> ids) {
      ++steps;
      seen.insert(ids.begin(), ids.end());
    };
    Trainer t(ds, cfg, {}, hooks);
    t.run_epoch();
    CHECK(steps == (150 + 31) / 32);
    CHECK(t.model().step == steps);
    CHECK(seen.size() == 150);
    CHECK(std::set<std::uint64_t>(seen.begin(), seen.end()).size() == 150);
  }

  TEST_CASE("full budget without LID reproduces vanilla training") {
    const auto data = small_poisoned(3);
    auto vanilla = small_config(TrainMode::Vanilla, 4);
    auto collider = small_config(TrainMode::Collider, 4);
    collider.coreset_ratio = 1.0;
    collider.lambda = 0.0;
    collider.lid_start_epoch = collider.epochs;
    const auto a = train(data.train, data.validation, vanilla);
    const auto b = train(data.train, data.validation, collider);
    CHECK(a.final_model == b.final_model);
    auto coreset = collider;
    coreset.mode = TrainMode::CoresetOnly;
    CHECK(train(data.train, data.validation, coreset).final_model == a.final_model);
  }

  TEST_CASE("collider without LID matches coreset-only training") {
    const auto data = small_poisoned(5);
    auto collider = small_config(TrainMode::Collider, 5);
    collider.lambda = 0.0;
    collider.lid_start_epoch = collider.epochs;
    auto coreset = collider;
    coreset.mode = TrainMode::CoresetOnly;
    const auto a = train(data.train, data.validation, collider);
    const auto b = train(data.train, data.validation, coreset);
    CHECK(a.final_model == b.final_model);
    CHECK(without_time(a.history) == without_time(b.history));
  }

  TEST_CASE("batches only draw from the live coreset and eliminations are final") {
    const auto data = small_poisoned(7);
    auto cfg = small_config(TrainMode::Collider, 12);
    cfg.lid_start_epoch = 2;
    cfg.mixup_alpha = 0.5;
    std::map<std::size_t, std::set<std::uint64_t>> batch_ids;
    std::map<std::size_t, std::set<std::uint64_t>> selected;
    std::set<std::uint64_t> eliminated;
    bool reused = false;
    TrainHooks hooks;
    hooks.on_batch = [&](std::size_t e, std::span<const std::uint64_t> ids) { batch_ids[e].insert(ids.begin(), ids.end()); };
    hooks.on_selection = [&](std::size_t e, std::size_t, const CoresetProblem& p, const CoresetSolution& s) {
      for (auto id : p.ids) reused = reused || eliminated.contains(id);
      selected[e].insert(s.selected.begin(), s.selected.end());
    };
    hooks.on_lid = [&](std::size_t, std::size_t, std::span<const LidRecord> recs) {
      for (const auto& r : recs) {
        if (r.eliminated) eliminated.insert(r.id);
      }
    };
    Trainer t(data.train, cfg, {}, hooks);
    std::size_t prev_total = 0;
    while (!t.finished()) {
      const auto rep = t.run_epoch();
      const auto e = rep.epoch;
      CHECK(batch_ids[e] == selected[e]);
      const auto live = t.live_ids();
      const std::set<std::uint64_t> live_set(live.begin(), live.end());
      for (auto id : t.last_coreset()) CHECK(live_set.contains(id));
      for (auto id : eliminated) CHECK_FALSE(live_set.contains(id));
      CHECK(rep.eliminated_total >= prev_total);
      CHECK(rep.eliminated_total == eliminated.size());
      prev_total = rep.eliminated_total;
      const auto counts = t.live_class_counts();
      for (std::size_t c = 0; c < counts.size(); ++c) {
        if (t.class_size_at_lid_start(c) == 0) continue;
        CHECK(static_cast<double>(counts[c]) >= cfg.coreset_ratio * static_cast<double>(t.class_size_at_lid_start(c)));
      }
    }
    CHECK_FALSE(reused);
    CHECK_FALSE(eliminated.empty());
  }

  TEST_CASE("scaled elimination bookkeeping") {
    // Two classes of 300, T=12, l=3, k=0.3: m = floor(210 / 9) = 23.
    const auto ds = generate_synthetic(2, 300, 8, 12);
    auto cfg = small_config(TrainMode::Collider, 12);
    cfg.lid_start_epoch = 3;
    cfg.lid_batch = 400;
    Trainer t(ds, cfg);
    while (!t.finished()) {
      const auto rep = t.run_epoch();
      const std::size_t lid_epochs = rep.epoch + 1 > 3 ? rep.epoch + 1 - 3 : 0;
      CHECK(rep.eliminated_total == 2 * 23 * lid_epochs);
      for (auto n : t.live_class_counts()) CHECK(n >= 90);
    }
    CHECK(t.live_class_counts() == std::vector<std::size_t>{300 - 207, 300 - 207});
    CHECK(t.tracker(0).live_count() == 93);
  }

  TEST_CASE("training is deterministic and independent of the worker count") {
    const auto data = small_poisoned(11);
    auto cfg = small_config(TrainMode::Collider, 6);
    cfg.lid_start_epoch = 1;
    cfg.mixup_alpha = 1.0;
    const auto a = train(data.train, data.validation, cfg, &data.attack, 1);
    cfg.workers = 3;
    const auto b = train(data.train, data.validation, cfg, &data.attack, 1);
    CHECK(a.final_model == b.final_model);
    CHECK(a.best_model == b.best_model);
    CHECK(without_time(a.history) == without_time(b.history));
  }

  TEST_CASE("coreset-only training on clean data stays close to vanilla") {
    const auto train_set = generate_synthetic(10, 100, 12, 21);
    const auto test_set = generate_synthetic(10, 50, 12, 22);
    auto [tr, val] = split(train_set, 0.04, 23);
    auto vanilla = small_config(TrainMode::Vanilla, 20);
    vanilla.hidden = {64};
    auto coreset = vanilla;
    coreset.mode = TrainMode::CoresetOnly;
    const double acc_v = accuracy(train(tr, val, vanilla).best_model, test_set);
    const double acc_c = accuracy(train(tr, val, coreset).best_model, test_set);
    INFO("vanilla " << acc_v << ", coreset " << acc_c);
    CHECK(acc_c >= acc_v - 0.05);
  }

  TEST_CASE("filtering holds up after LID starts") {
    const auto data = small_poisoned(13, 120);
    auto cfg = small_config(TrainMode::Collider, 40);
    cfg.lid_start_epoch = 10;
    cfg.mixup_alpha = 1.0;
    const auto r = train(data.train, data.validation, cfg, &data.attack, 1);
    std::vector<double> first;
    std::vector<double> last;
    for (std::size_t e = 10; e < 20; ++e) first.push_back(r.history[e].filtered_poison_fraction);
    for (std::size_t e = 30; e < 40; ++e) last.push_back(r.history[e].filtered_poison_fraction);
    CHECK(fixture::median(last) >= fixture::median(first));
  }

  TEST_CASE("best model follows validation accuracy") {
    const auto data = small_poisoned(17);
    const auto r = train(data.train, data.validation, small_config(TrainMode::Vanilla, 5));
    double best = -1.0;
    std::size_t epoch = 0;
    for (const auto& h : r.history) {
      if (h.val_acc >= best) {
        best = h.val_acc;
        epoch = h.epoch;
      }
    }
    CHECK(r.best_epoch == epoch);
    CHECK(accuracy(r.best_model, data.validation) == doctest::Approx(best));
  }
}

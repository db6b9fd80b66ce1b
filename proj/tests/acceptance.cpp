// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "collider/experiment.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace collider;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++g_failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << v.detail << std::endl;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double final_window_filtered(const TrainResult& r, std::size_t window = 10) {
  const auto& h = r.history;
  std::vector<double> tail;
  for (std::size_t i = h.size() - std::min(window, h.size()); i < h.size(); ++i) {
    tail.push_back(h[i].filtered_poison_fraction);
  }
  return mean(tail);
}

// --- 1 -------------------------------------------------------------------

Verdict greedy_ratio() {
  const auto t0 = Clock::now();
  double worst = std::numeric_limits<double>::infinity();
  std::size_t instances = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 2 + seed % 9;
    const std::size_t k = 1 + (seed / 9) % std::min<std::size_t>(4, n);
    const auto p = oracle::random_problem(seed * 31 + 1, n, k, seed % 3 == 0 ? 0.0 : 0.4);
    const auto sol = facility_location_greedy(p);
    const double opt = oracle::brute_force_optimum(p, coverage_constant(p));
    worst = std::min(worst, sol.objective / opt);
    ++instances;
  }
  std::size_t same = 0;
  const std::size_t trials = 1000;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const std::size_t n = 2 + seed % 19;
    const std::size_t k = 1 + (seed / 7) % n;
    const auto p = oracle::random_problem(seed + 77777, n, k, (seed % 4) * 0.15);
    const auto lazy = facility_location_greedy(p).selected;
    const auto plain = oracle::plain_greedy(p, coverage_constant(p));
    same += std::set(lazy.begin(), lazy.end()) == std::set(plain.begin(), plain.end()) ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  const double bound = 1.0 - 1.0 / std::numbers::e;
  return {worst >= bound && same == trials && secs < 30.0,
          fmt("min F/F_opt %.4f over %zu instances (bound %.4f); lazy == plain on %zu/%zu; %.1f s", worst, instances,
              bound, same, trials, secs)};
}

// --- 2 -------------------------------------------------------------------

Verdict lid_statistics() {
  const auto t0 = Clock::now();
  LidOptions opts;
  opts.neighbors = 60;
  bool ok = true;
  std::string medians;
  for (std::size_t d : {1u, 2u, 4u}) {
    Rng rng(1000 + d);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix x(2000, d);
    for (auto& v : x.data()) v = u(rng);
    const double med = fixture::median(estimate_lid(x, opts));
    ok = ok && std::abs(med - static_cast<double>(d)) <= 0.4 * static_cast<double>(d);
    medians += fmt("d=%zu median %.3f; ", d, med);
  }

  // Isometry and scale invariance on a 4-d cloud.
  Rng rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(500, 4);
  for (auto& v : x.data()) v = g(rng);
  const auto base = estimate_lid(x, opts);
  // Rotation by a product of two plane rotations, then a translation.
  const double a = 0.9;
  const double b = -0.4;
  Matrix moved(500, 4);
  Matrix scaled(500, 4);
  for (std::size_t i = 0; i < 500; ++i) {
    moved(i, 0) = std::cos(a) * x(i, 0) - std::sin(a) * x(i, 1) + 3.0;
    moved(i, 1) = std::sin(a) * x(i, 0) + std::cos(a) * x(i, 1) - 7.0;
    moved(i, 2) = std::cos(b) * x(i, 2) - std::sin(b) * x(i, 3) + 0.5;
    moved(i, 3) = std::sin(b) * x(i, 2) + std::cos(b) * x(i, 3);
    for (std::size_t c = 0; c < 4; ++c) scaled(i, c) = 0.01 * x(i, c);
  }
  const auto m = estimate_lid(moved, opts);
  const auto s = estimate_lid(scaled, opts);
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    worst = std::max({worst, std::abs(m[i] - base[i]), std::abs(s[i] - base[i])});
  }
  const double secs = seconds_since(t0);
  ok = ok && worst <= 1e-9 && secs < 60.0;
  return {ok, medians + fmt("max invariance deviation %.2e; %.1f s", worst, secs)};
}

// --- 3 -------------------------------------------------------------------

Verdict lid_separation() {
  LidOptions opts;
  opts.neighbors = 20;
  std::size_t wins = 0;
  const std::size_t trials = 50;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto fx = fixture::manifold_with_cluster(500 + t);
    const auto est = estimate_lid(fx.features, opts);
    std::vector<double> clean;
    std::vector<double> dirty;
    for (std::size_t i = 0; i < est.size(); ++i) (fx.poisoned[i] ? dirty : clean).push_back(est[i]);
    wins += fixture::median(dirty) > fixture::median(clean) ? 1 : 0;
  }
  const double rate = static_cast<double>(wins) / static_cast<double>(trials);
  return {rate >= 0.95, fmt("poisoned median above clean median in %zu/%zu trials", wins, trials)};
}

// --- 4 -------------------------------------------------------------------

Verdict gradient_correctness() {
  double worst_fd = 0.0;
  double worst_identity = 0.0;
  std::size_t params = 0;
  std::size_t kinks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 40);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::size_t> hidden;
    for (std::size_t l = 0; l < 1 + seed % 3; ++l) hidden.push_back(3 + (seed + l) % 5);
    const std::size_t in = 3 + seed % 4;
    const std::size_t classes = 2 + seed % 4;
    const auto model = ModelState::create(in, hidden, classes, seed);
    Matrix x(5, in);
    for (auto& v : x.data()) v = u(rng);
    std::vector<std::size_t> y(5);
    for (auto& l : y) l = static_cast<std::size_t>(std::abs(u(rng)) * static_cast<double>(classes)) % classes;

    const auto analytic = loss_and_grad(model, x, y).grads;
    ModelState probe = model;
    const double eps = 1e-4;
    const auto pattern = oracle::relu_pattern(model, x);
    auto check = [&](double& p, double grad) {
      const double keep = p;
      p = keep + eps;
      const double up = oracle::naive_mean_xent(probe, x, y);
      const bool up_same = oracle::relu_pattern(probe, x) == pattern;
      p = keep - eps;
      const double down = oracle::naive_mean_xent(probe, x, y);
      const bool down_same = oracle::relu_pattern(probe, x) == pattern;
      p = keep;
      ++params;
      // The perturbation crosses a ReLU kink; the loss is not differentiable there.
      if (!up_same || !down_same) {
        ++kinks;
        return;
      }
      const double fd = (up - down) / (2.0 * eps);
      worst_fd = std::max(worst_fd, std::abs(fd - grad) / std::max(1e-3, std::abs(fd) + std::abs(grad)));
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
      for (std::size_t i = 0; i < probe.layers[l].weights.size(); ++i) check(probe.layers[l].weights[i], analytic[l].weights[i]);
      for (std::size_t i = 0; i < probe.layers[l].biases.size(); ++i) check(probe.layers[l].biases[i], analytic[l].biases[i]);
    }

    // Final-layer weight-gradient distance between samples 0 and 1 against the
    // outer products of their proxies and penultimate activations.
    const auto f = forward(model, x);
    const auto g = gradient_proxy_from_logits(f.logits, y);
    std::vector<std::vector<double>> full(2);
    std::vector<std::vector<double>> outer(2);
    for (std::size_t i = 0; i < 2; ++i) {
      Matrix xi(1, in);
      std::copy(x.row(i).begin(), x.row(i).end(), xi.row(0).begin());
      const std::vector<std::size_t> yi{y[i]};
      full[i] = loss_and_grad(model, xi, yi).grads.back().weights;
      for (std::size_t o = 0; o < classes; ++o) {
        for (std::size_t h = 0; h < f.penultimate.cols(); ++h) outer[i].push_back(g(i, o) * f.penultimate(i, h));
      }
    }
    auto dist = [](const std::vector<double>& p, const std::vector<double>& q) {
      double s = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
      return std::sqrt(s);
    };
    worst_identity = std::max(worst_identity, std::abs(dist(full[0], full[1]) - dist(outer[0], outer[1])));
  }
  // Kink crossings must stay rare or the check would say little.
  return {worst_fd <= 1e-4 && worst_identity <= 1e-6 && kinks * 100 <= params,
          fmt("max FD relative error %.2e over %zu parameters (%zu skipped at ReLU kinks); proxy identity deviation %.2e",
              worst_fd, params - kinks, kinks, worst_identity)};
}

// --- 5, 6, 7 -----------------------------------------------------------------

struct RunSet {
  // mode -> per-seed results in seed order
  std::map<TrainMode, std::vector<SeedResult>> runs;
};

RunSet run_modes(const ExperimentConfig& cfg, const std::vector<TrainMode>& modes, std::size_t workers) {
  RunSet out;
  for (auto seed : cfg.output.seeds) {
    const auto data = prepare_data(cfg, seed);
    for (auto mode : modes) {
      ExperimentConfig c = cfg;
      c.train.workers = workers;
      out.runs[mode].push_back(run_seed(c, data, mode, seed));
    }
  }
  return out;
}

std::vector<double> field(const std::vector<SeedResult>& rs, double SeedResult::*member) {
  std::vector<double> out;
  for (const auto& r : rs) out.push_back(r.*member);
  return out;
}

}  // namespace

int main() {
  std::cout << "collider acceptance suite" << std::endl;
  const std::size_t workers = std::max<std::size_t>(1, worker_count_from_env());
  const auto scratch = std::filesystem::temp_directory_path() / "collider_acceptance";
  std::filesystem::remove_all(scratch);

  report(1, "greedy optimality ratio", greedy_ratio);
  report(2, "LID estimator statistics", lid_statistics);
  report(3, "LID separation fixture", lid_separation);
  report(4, "gradient correctness", gradient_correctness);

  const auto config_path = std::filesystem::path(COLLIDER_CONFIG_DIR) / "desk_badnets.ini";
  ExperimentConfig cfg = parse_config(config_path);
  cfg.output.dir = scratch / "desk";

  RunSet main_runs;
  double main_secs = 0.0;
  report(5, "end-to-end desk-scale backdoor experiment", [&]() -> Verdict {
    const auto t0 = Clock::now();
    main_runs = run_modes(cfg, {TrainMode::Vanilla, TrainMode::CoresetOnly, TrainMode::Collider}, workers);
    main_secs = seconds_since(t0);
    const auto& van = main_runs.runs.at(TrainMode::Vanilla);
    const auto& col = main_runs.runs.at(TrainMode::Collider);
    const double van_asr = mean(field(van, &SeedResult::asr));
    const double col_asr = mean(field(col, &SeedResult::asr));
    const double van_acc = mean(field(van, &SeedResult::test_acc));
    const double col_acc = mean(field(col, &SeedResult::test_acc));
    std::vector<double> filtered;
    for (const auto& r : col) filtered.push_back(final_window_filtered(r.training));
    const double filt = mean(filtered);
    const bool ok = van_asr >= 0.80 && col_asr <= 0.20 && col_acc >= van_acc - 0.15 && filt >= 0.8 &&
                    main_secs < 15.0 * 60.0;
    std::string per_seed;
    for (const auto& r : col) per_seed += fmt("%.3f ", r.asr);
    return {ok, fmt("%zu seeds; vanilla ASR %.3f ACC %.3f; collider ASR %.3f ACC %.3f (per seed: %s); "
                    "collider last-10 filtered %.3f; %.0f s",
                    col.size(), van_asr, van_acc, col_asr, col_acc, per_seed.c_str(), filt, main_secs)};
  });

  report(6, "ablation ordering against coreset-only", [&]() -> Verdict {
    const auto& cor = main_runs.runs.at(TrainMode::CoresetOnly);
    const auto& col = main_runs.runs.at(TrainMode::Collider);
    std::size_t wins = 0;
    std::string detail;
    for (std::size_t i = 0; i < col.size(); ++i) {
      const double fc = final_window_filtered(col[i].training);
      const double fo = final_window_filtered(cor[i].training);
      const bool win = fc >= fo && col[i].asr <= cor[i].asr;
      wins += win ? 1 : 0;
      detail += fmt("seed %llu: filtered %.2f vs %.2f, ASR %.3f vs %.3f; ", static_cast<unsigned long long>(col[i].seed),
                    fc, fo, col[i].asr, cor[i].asr);
    }
    return {col.size() == 5 && wins >= 4, fmt("%zu/%zu seeds ordered; ", wins, col.size()) + detail};
  });

  report(7, "coreset-size trade-off trend", [&]() -> Verdict {
    const std::vector<double> ks{0.2, 0.3, 0.4, 0.5};
    std::vector<double> col_asr;
    std::vector<double> cor_asr;
    for (double k : ks) {
      if (k == cfg.train.coreset_ratio) {
        col_asr.push_back(mean(field(main_runs.runs.at(TrainMode::Collider), &SeedResult::asr)));
        cor_asr.push_back(mean(field(main_runs.runs.at(TrainMode::CoresetOnly), &SeedResult::asr)));
        continue;
      }
      ExperimentConfig c = cfg;
      c.train.coreset_ratio = k;
      const auto rs = run_modes(c, {TrainMode::CoresetOnly, TrainMode::Collider}, workers);
      col_asr.push_back(mean(field(rs.runs.at(TrainMode::Collider), &SeedResult::asr)));
      cor_asr.push_back(mean(field(rs.runs.at(TrainMode::CoresetOnly), &SeedResult::asr)));
    }
    std::size_t inversions = 0;
    bool below = true;
    std::string detail;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (i > 0 && col_asr[i] < col_asr[i - 1]) ++inversions;
      below = below && col_asr[i] <= cor_asr[i];
      detail += fmt("k=%.1f collider %.3f coreset %.3f; ", ks[i], col_asr[i], cor_asr[i]);
    }
    return {inversions <= 1 && below, detail + fmt("inversions %zu", inversions)};
  });

  report(8, "determinism across reruns and worker counts", [&]() -> Verdict {
    ExperimentConfig c = cfg;
    c.output.seeds = {cfg.output.seeds.front()};
    c.output.lid_dump = true;
    c.output.coreset_dump = true;
    std::ostringstream quiet;
    const auto d1 = scratch / "det_w1";
    const auto d4 = scratch / "det_w4";
    c.output.dir = d1;
    run_experiment(c, 1, quiet);
    c.output.dir = d4;
    run_experiment(c, 4, quiet);
    std::size_t files = 0;
    std::size_t equal = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(d1)) {
      if (!e.is_regular_file()) continue;
      ++files;
      std::ifstream a(e.path(), std::ios::binary);
      std::ifstream b(d4 / std::filesystem::relative(e.path(), d1), std::ios::binary);
      std::stringstream sa;
      std::stringstream sb;
      sa << a.rdbuf();
      sb << b.rdbuf();
      equal += b && sa.str() == sb.str() ? 1 : 0;
    }
    return {files > 0 && equal == files, fmt("%zu/%zu output files byte-identical (workers 1 vs 4)", equal, files)};
  });

  report(9, "elimination bookkeeping", [&]() -> Verdict {
    // One class of 5000 plus a small second class so the model has two outputs.
    const auto raw = generate_synthetic(2, 5000, 8, 2024);
    std::vector<Sample> samples;
    std::size_t second = 0;
    for (const auto& s : raw.samples()) {
      if (s.label == 0 || second++ < 100) samples.push_back(s);
    }
    const Dataset ds(raw.shape(), 2, std::move(samples));
    TrainConfig t;
    t.mode = TrainMode::Collider;
    t.epochs = 120;
    t.lid_start_epoch = 30;
    t.coreset_ratio = 0.3;
    t.lid_neighbors = 60;
    t.hidden = {8};
    t.seed = 7;
    t.workers = workers;
    Trainer trainer(ds, t);
    const std::size_t n = 5000;
    const auto budget = static_cast<std::size_t>(std::llround(t.coreset_ratio * static_cast<double>(n)));
    const std::size_t expected_m = elimination_per_epoch(n, t.coreset_ratio, t.epochs, t.lid_start_epoch);
    bool per_epoch_ok = true;
    bool floor_ok = true;
    std::size_t min_live = n;
    std::size_t prev = 0;
    while (!trainer.finished()) {
      const auto rep = trainer.run_epoch();
      const std::size_t removed = n - trainer.live_class_counts()[0] - prev;
      prev += removed;
      const std::size_t want = rep.epoch >= t.lid_start_epoch ? expected_m : 0;
      per_epoch_ok = per_epoch_ok && removed == want;
      min_live = std::min(min_live, trainer.live_class_counts()[0]);
      floor_ok = floor_ok && trainer.live_class_counts()[0] >= budget;
    }
    const double target = (1.0 - t.coreset_ratio) * static_cast<double>(n);
    const double rel = std::abs(static_cast<double>(prev) - target) / target;
    const bool cumulative_ok = rel <= 0.01;
    return {expected_m == 38 && per_epoch_ok && floor_ok && cumulative_ok,
            fmt("m=%zu per epoch (%s); cumulative %zu vs (1-k)n=%.0f, off by %.2f%% (%s); min live %zu vs budget %zu (%s)",
                expected_m, per_epoch_ok ? "every LID epoch" : "MISMATCH", prev, target, 100.0 * rel,
                cumulative_ok ? "within 1%" : "outside 1%", min_live, budget, floor_ok ? "ok" : "BELOW")};
  });

  std::cout << (g_failures == 0 ? "all criteria passed" : fmt("%d criteria failed", g_failures)) << std::endl;
  return g_failures;
}

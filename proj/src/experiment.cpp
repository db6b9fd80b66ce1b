#include "collider/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace collider {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + value + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ",";
    out += fmt(xs[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const auto table = [] {
    std::map<std::string, std::map<std::string, Setter>> t;
    auto sz = [](auto member_ptr) {
      return Setter([member_ptr](ExperimentConfig& c, const std::string& k, const std::string& v) {
        std::invoke(member_ptr, c) = parse_number<std::size_t>(k, v);
      });
    };
    auto real = [](auto member_ptr) {
      return Setter([member_ptr](ExperimentConfig& c, const std::string& k, const std::string& v) {
        std::invoke(member_ptr, c) = parse_number<double>(k, v);
      });
    };
    auto flag = [](auto member_ptr) {
      return Setter([member_ptr](ExperimentConfig& c, const std::string& k, const std::string& v) {
        std::invoke(member_ptr, c) = parse_bool(k, v);
      });
    };
    auto path = [](auto member_ptr) {
      return Setter([member_ptr](ExperimentConfig& c, const std::string&, const std::string& v) {
        std::invoke(member_ptr, c) = std::filesystem::path(v);
      });
    };

    auto& data = t["data"];
    data["source"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (v != "synthetic" && v != "idx") throw ConfigError("key '" + k + "': expected synthetic|idx");
      c.data.source = v;
    };
    data["classes"] = sz([](ExperimentConfig& c) -> auto& { return c.data.classes; });
    data["per_class"] = sz([](ExperimentConfig& c) -> auto& { return c.data.per_class; });
    data["test_per_class"] = sz([](ExperimentConfig& c) -> auto& { return c.data.test_per_class; });
    data["image_side"] = sz([](ExperimentConfig& c) -> auto& { return c.data.image_side; });
    data["train_images"] = path([](ExperimentConfig& c) -> auto& { return c.data.train_images; });
    data["train_labels"] = path([](ExperimentConfig& c) -> auto& { return c.data.train_labels; });
    data["test_images"] = path([](ExperimentConfig& c) -> auto& { return c.data.test_images; });
    data["test_labels"] = path([](ExperimentConfig& c) -> auto& { return c.data.test_labels; });
    data["val_fraction"] = real([](ExperimentConfig& c) -> auto& { return c.data.val_fraction; });

    auto& poison = t["poison"];
    poison["trigger"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.poison.trigger = parse_trigger_kind(v);
      } catch (const ParameterError& e) {
        throw ConfigError("key '" + k + "': " + e.what());
      }
    };
    poison["target_class"] = sz([](ExperimentConfig& c) -> auto& { return c.poison.target_class; });
    poison["injection_rate"] = real([](ExperimentConfig& c) -> auto& { return c.poison.injection_rate; });
    poison["label_mode"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.poison.label_mode = parse_label_mode(v);
      } catch (const ParameterError& e) {
        throw ConfigError("key '" + k + "': " + e.what());
      }
    };
    poison["patch_size"] = sz([](ExperimentConfig& c) -> auto& { return c.poison.patch_size; });
    poison["patch_intensity"] = real([](ExperimentConfig& c) -> auto& { return c.poison.patch_intensity; });
    poison["patch_corner"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.poison.patch_corner = parse_corner(v);
      } catch (const ParameterError& e) {
        throw ConfigError("key '" + k + "': " + e.what());
      }
    };
    poison["sin_amplitude"] = real([](ExperimentConfig& c) -> auto& { return c.poison.sin_amplitude; });
    poison["sin_frequency"] = real([](ExperimentConfig& c) -> auto& { return c.poison.sin_frequency; });

    auto& train = t["train"];
    train["mode"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.modes.clear();
      for (const auto& m : split_list(v)) {
        try {
          c.modes.push_back(parse_train_mode(m));
        } catch (const ParameterError& e) {
          throw ConfigError("key '" + k + "': " + e.what());
        }
      }
      if (c.modes.empty()) throw ConfigError("key '" + k + "': no mode given");
    };
    train["epochs"] = sz([](ExperimentConfig& c) -> auto& { return c.train.epochs; });
    train["coreset_ratio"] = real([](ExperimentConfig& c) -> auto& { return c.train.coreset_ratio; });
    train["lid_start_epoch"] = sz([](ExperimentConfig& c) -> auto& { return c.train.lid_start_epoch; });
    train["lid_neighbors"] = sz([](ExperimentConfig& c) -> auto& { return c.train.lid_neighbors; });
    train["lid_window"] = sz([](ExperimentConfig& c) -> auto& { return c.train.lid_window; });
    train["lambda"] = real([](ExperimentConfig& c) -> auto& { return c.train.lambda; });
    train["lid_batch"] = sz([](ExperimentConfig& c) -> auto& { return c.train.lid_batch; });
    train["lid_zero_distance"] = real([](ExperimentConfig& c) -> auto& { return c.train.lid_zero_distance; });
    train["lid_max"] = real([](ExperimentConfig& c) -> auto& { return c.train.lid_max; });
    train["batch_size"] = sz([](ExperimentConfig& c) -> auto& { return c.train.batch_size; });
    train["lr"] = real([](ExperimentConfig& c) -> auto& { return c.train.lr; });
    train["momentum"] = real([](ExperimentConfig& c) -> auto& { return c.train.momentum; });
    train["weight_decay"] = real([](ExperimentConfig& c) -> auto& { return c.train.weight_decay; });
    train["mixup_alpha"] = real([](ExperimentConfig& c) -> auto& { return c.train.mixup_alpha; });
    train["hidden"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.train.hidden.clear();
      for (const auto& h : split_list(v)) c.train.hidden.push_back(parse_number<std::size_t>(k, h));
    };

    auto& output = t["output"];
    output["dir"] = path([](ExperimentConfig& c) -> auto& { return c.output.dir; });
    output["seeds"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.output.seeds.clear();
      for (const auto& s : split_list(v)) c.output.seeds.push_back(parse_number<std::uint64_t>(k, s));
    };
    output["timing"] = flag([](ExperimentConfig& c) -> auto& { return c.output.timing; });
    output["lid_dump"] = flag([](ExperimentConfig& c) -> auto& { return c.output.lid_dump; });
    output["coreset_dump"] = flag([](ExperimentConfig& c) -> auto& { return c.output.coreset_dump; });
    output["checkpoints"] = flag([](ExperimentConfig& c) -> auto& { return c.output.checkpoints; });
    return t;
  }();
  return table;
}

const std::set<std::string> kRequired{"data.source", "poison.target_class", "train.mode"};

}  // namespace

void ExperimentConfig::validate() const {
  if (data.source == "synthetic") {
    if (data.classes < 2 || data.per_class < 1 || data.test_per_class < 1 || data.image_side < 8) {
      throw ConfigError("synthetic data needs classes >= 2, per_class >= 1, test_per_class >= 1, image_side >= 8");
    }
  } else {
    for (const auto* p : {&data.train_images, &data.train_labels, &data.test_images, &data.test_labels}) {
      if (p->empty()) throw ConfigError("idx source needs train_images, train_labels, test_images, test_labels");
      if (!std::filesystem::exists(*p)) throw ConfigError("file not found: " + p->string());
    }
  }
  if (!(data.val_fraction >= 0.0 && data.val_fraction < 1.0)) throw ConfigError("val_fraction must be in [0, 1)");
  if (output.seeds.empty()) throw ConfigError("seeds list must not be empty");
  if (modes.empty()) throw ConfigError("at least one mode is required");
  try {
    train.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("[train] ") + e.what());
  }
  if (data.source == "synthetic") {
    try {
      poison.validate(ImageShape{data.image_side, data.image_side, 1}, data.classes);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("[poison] ") + e.what());
    }
  }
}

ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!setters().contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) throw ConfigError(where + "key '" + key + "' outside of a section");
    const auto& keys = setters().at(section);
    auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) throw ConfigError(where + "duplicate key '" + key + "'");
    it->second(cfg, key, value);
  }
  for (const auto& req : kRequired) {
    if (!seen.contains(req)) throw ConfigError("missing required key '" + req + "'");
  }
  if (!seen.contains("train.lid_start_epoch")) cfg.train.lid_start_epoch = cfg.train.epochs / 4;
  if (!seen.contains("poison.label_mode")) {
    cfg.poison.label_mode =
        cfg.poison.trigger == TriggerKind::PatchChecker ? LabelMode::DirtyLabel : LabelMode::CleanLabel;
  }
  if (!base_dir.empty()) {
    for (auto* p : {&cfg.data.train_images, &cfg.data.train_labels, &cfg.data.test_images, &cfg.data.test_labels,
                    &cfg.output.dir}) {
      if (!p->empty() && p->is_relative()) *p = base_dir / *p;
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto sz = [](std::size_t v) { return std::to_string(v); };
  o << "[data]\n";
  o << "source = " << c.data.source << "\n";
  o << "classes = " << c.data.classes << "\n";
  o << "per_class = " << c.data.per_class << "\n";
  o << "test_per_class = " << c.data.test_per_class << "\n";
  o << "image_side = " << c.data.image_side << "\n";
  if (!c.data.train_images.empty()) o << "train_images = " << c.data.train_images.string() << "\n";
  if (!c.data.train_labels.empty()) o << "train_labels = " << c.data.train_labels.string() << "\n";
  if (!c.data.test_images.empty()) o << "test_images = " << c.data.test_images.string() << "\n";
  if (!c.data.test_labels.empty()) o << "test_labels = " << c.data.test_labels.string() << "\n";
  o << "val_fraction = " << format_double(c.data.val_fraction) << "\n";

  o << "\n[poison]\n";
  o << "trigger = " << to_string(c.poison.trigger) << "\n";
  o << "target_class = " << c.poison.target_class << "\n";
  o << "injection_rate = " << format_double(c.poison.injection_rate) << "\n";
  o << "label_mode = " << to_string(c.poison.label_mode) << "\n";
  o << "patch_size = " << c.poison.patch_size << "\n";
  o << "patch_intensity = " << format_double(c.poison.patch_intensity) << "\n";
  o << "patch_corner = " << to_string(c.poison.patch_corner) << "\n";
  o << "sin_amplitude = " << format_double(c.poison.sin_amplitude) << "\n";
  o << "sin_frequency = " << format_double(c.poison.sin_frequency) << "\n";

  o << "\n[train]\n";
  o << "mode = " << join<TrainMode>(c.modes, [](const TrainMode& m) { return to_string(m); }) << "\n";
  o << "epochs = " << c.train.epochs << "\n";
  o << "coreset_ratio = " << format_double(c.train.coreset_ratio) << "\n";
  o << "lid_start_epoch = " << c.train.lid_start_epoch << "\n";
  o << "lid_neighbors = " << c.train.lid_neighbors << "\n";
  o << "lid_window = " << c.train.lid_window << "\n";
  o << "lambda = " << format_double(c.train.lambda) << "\n";
  o << "lid_batch = " << c.train.lid_batch << "\n";
  o << "lid_zero_distance = " << format_double(c.train.lid_zero_distance) << "\n";
  o << "lid_max = " << format_double(c.train.lid_max) << "\n";
  o << "batch_size = " << c.train.batch_size << "\n";
  o << "lr = " << format_double(c.train.lr) << "\n";
  o << "momentum = " << format_double(c.train.momentum) << "\n";
  o << "weight_decay = " << format_double(c.train.weight_decay) << "\n";
  o << "mixup_alpha = " << format_double(c.train.mixup_alpha) << "\n";
  o << "hidden = " << join<std::size_t>(c.train.hidden, sz) << "\n";

  o << "\n[output]\n";
  o << "dir = " << c.output.dir.string() << "\n";
  o << "seeds = "
    << join<std::uint64_t>(c.output.seeds, [](const std::uint64_t& s) { return std::to_string(s); }) << "\n";
  o << "timing = " << (c.output.timing ? "true" : "false") << "\n";
  o << "lid_dump = " << (c.output.lid_dump ? "true" : "false") << "\n";
  o << "coreset_dump = " << (c.output.coreset_dump ? "true" : "false") << "\n";
  o << "checkpoints = " << (c.output.checkpoints ? "true" : "false") << "\n";
  return o.str();
}

namespace {

// Stream tags for derive_seed.
enum Stream : std::uint64_t { kTrainData = 1, kTestData = 2, kPoison = 3, kSplit = 4, kTraining = 5 };

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  Dataset train_raw;
  Dataset test;
  if (cfg.data.source == "synthetic") {
    train_raw = generate_synthetic(cfg.data.classes, cfg.data.per_class, cfg.data.image_side,
                                   derive_seed(seed, kTrainData));
    test = generate_synthetic(cfg.data.classes, cfg.data.test_per_class, cfg.data.image_side,
                              derive_seed(seed, kTestData));
  } else {
    train_raw = load_idx(cfg.data.train_images, cfg.data.train_labels);
    test = load_idx(cfg.data.test_images, cfg.data.test_labels);
  }
  const Dataset poisoned = poison_dataset(train_raw, cfg.poison, derive_seed(seed, kPoison));
  auto [train, val] = split(poisoned, cfg.data.val_fraction, derive_seed(seed, kSplit));
  Dataset attack = poison_all_nontarget(test, cfg.poison);
  return PreparedData{std::move(train), std::move(val), std::move(test), std::move(attack)};
}

TrainConfig train_config_for(const ExperimentConfig& cfg, TrainMode mode, std::uint64_t seed) {
  TrainConfig t = cfg.train;
  t.mode = mode;
  t.seed = derive_seed(seed, kTraining);
  return t;
}

SeedResult run_seed(const ExperimentConfig& cfg, const PreparedData& data, TrainMode mode, std::uint64_t seed,
                    TrainHooks hooks) {
  SeedResult r;
  r.seed = seed;
  r.mode = mode;
  r.training = train(data.train, data.validation, train_config_for(cfg, mode, seed), &data.attack,
                     cfg.poison.target_class, std::move(hooks));
  r.test_acc = accuracy(r.training.best_model, data.test);
  r.asr = data.attack.empty() ? 0.0 : fraction_predicted_as(r.training.best_model, data.attack, cfg.poison.target_class);
  return r;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::size_t workers, std::ostream& log) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output.dir);
  std::map<TrainMode, std::vector<SeedResult>> results;

  for (auto seed : cfg.output.seeds) {
    // One data preparation per seed, shared by every mode.
    const PreparedData data = prepare_data(cfg, seed);
    std::unordered_map<std::uint64_t, bool> poisoned;
    for (const auto& s : data.train.samples()) poisoned[s.id] = s.is_poisoned;

    for (auto mode : cfg.modes) {
      const auto dir = cfg.output.dir / to_string(mode);
      std::filesystem::create_directories(dir);
      const std::string stem = "seed_" + std::to_string(seed);

      std::ofstream lid_out;
      std::ofstream coreset_out;
      TrainHooks hooks;
      if (cfg.output.lid_dump && mode == TrainMode::Collider) {
        lid_out = open_output(dir / ("lid_" + stem + ".csv"));
        lid_out << "epoch,sample_id,is_poisoned,smoothed_lid\n";
        hooks.on_lid = [&](std::size_t epoch, std::size_t, std::span<const LidRecord> records) {
          for (const auto& r : records) {
            lid_out << epoch << ',' << r.id << ',' << (poisoned.at(r.id) ? 1 : 0) << ',' << format_double(r.smoothed)
                    << '\n';
          }
        };
      }
      if (cfg.output.coreset_dump && mode != TrainMode::Vanilla) {
        coreset_out = open_output(dir / ("coreset_" + stem + ".csv"));
        coreset_out << "epoch,class,sample_id,selected,is_poisoned\n";
        hooks.on_selection = [&](std::size_t epoch, std::size_t cls, const CoresetProblem& p,
                                 const CoresetSolution& s) {
          const std::set<std::uint64_t> chosen(s.selected.begin(), s.selected.end());
          for (auto id : p.ids) {
            coreset_out << epoch << ',' << cls << ',' << id << ',' << (chosen.contains(id) ? 1 : 0) << ','
                        << (poisoned.at(id) ? 1 : 0) << '\n';
          }
        };
      }

      ExperimentConfig run_cfg = cfg;
      run_cfg.train.workers = workers;
      SeedResult r = run_seed(run_cfg, data, mode, seed, std::move(hooks));
      if (!cfg.output.timing) {
        for (auto& row : r.training.history) row.wall_time_ms = 0.0;
      }
      auto csv = open_output(dir / (stem + ".csv"));
      write_metrics_csv(csv, r.training.history);
      if (cfg.output.checkpoints) save_checkpoint(r.training.best_model, dir / (stem + ".ckpt"));
      log << to_string(mode) << " seed " << seed << ": test_acc=" << r.test_acc << " asr=" << r.asr
                << " best_epoch=" << r.training.best_epoch << "\n";
      results[mode].push_back(std::move(r));
    }
  }

  for (const auto& [mode, runs] : results) {
    std::vector<double> accs;
    std::vector<double> asrs;
    nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
    for (const auto& r : runs) {
      accs.push_back(r.test_acc);
      asrs.push_back(r.asr);
      const auto& best = r.training.history.at(r.training.best_epoch);
      per_seed.push_back({{"seed", r.seed},
                          {"best_epoch", r.training.best_epoch},
                          {"val_acc", best.val_acc},
                          {"test_acc", r.test_acc},
                          {"asr", r.asr},
                          {"filtered_poison_fraction", best.filtered_poison_fraction}});
    }
    const Summary acc = summarize(accs);
    const Summary asr = summarize(asrs);
    nlohmann::ordered_json j;
    j["mode"] = to_string(mode);
    j["seeds"] = runs.size();
    j["test_acc"] = {{"mean", acc.mean}, {"std", acc.stddev}};
    j["asr"] = {{"mean", asr.mean}, {"std", asr.stddev}};
    j["runs"] = per_seed;
    auto out = open_output(cfg.output.dir / to_string(mode) / "summary.json");
    out << j.dump(2) << "\n";
    log << to_string(mode) << ": ACC " << acc.mean << " ± " << acc.stddev << ", ASR " << asr.mean << " ± "
              << asr.stddev << " over " << runs.size() << " seeds\n";
  }
  return 0;
}

int inspect_lid(const ExperimentConfig& cfg, std::size_t workers) {
  ExperimentConfig run_cfg = cfg;
  run_cfg.modes = {TrainMode::Collider};
  run_cfg.output.seeds = {cfg.output.seeds.front()};
  run_cfg.output.lid_dump = true;
  run_cfg.output.coreset_dump = false;
  run_cfg.output.checkpoints = false;
  const int status = run_experiment(run_cfg, workers);
  if (status != 0) return status;

  const auto path = run_cfg.output.dir / "collider" / ("lid_seed_" + std::to_string(run_cfg.output.seeds.front()) + ".csv");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::size_t last_epoch = 0;
  std::vector<std::pair<std::size_t, std::pair<bool, double>>> rows;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::size_t epoch = 0;
    std::uint64_t id = 0;
    int pois = 0;
    double lid = 0.0;
    ls >> epoch >> id >> pois >> lid;
    last_epoch = std::max(last_epoch, epoch);
    rows.push_back({epoch, {pois != 0, lid}});
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  // First LID epoch is the informative one: poisoned samples are gone later.
  std::size_t first_epoch = last_epoch;
  for (const auto& r : rows) first_epoch = std::min(first_epoch, r.first);
  std::vector<double> clean;
  std::vector<double> dirty;
  for (const auto& r : rows) {
    if (r.first != first_epoch) continue;
    (r.second.first ? dirty : clean).push_back(r.second.second);
  }
  std::cout << "LID dump: " << path.string() << "\n"
            << "epoch " << first_epoch << ": median LID clean=" << median(clean) << " (" << clean.size()
            << "), poisoned=" << median(dirty) << " (" << dirty.size() << ")\n";
  return 0;
}

}  // namespace collider

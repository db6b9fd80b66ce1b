#include "collider/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace collider {

std::size_t predicted_class(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best;
}

std::vector<std::size_t> predict(const ModelState& model, const Dataset& ds) {
  std::vector<std::size_t> out(ds.size());
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    const std::size_t end = std::min(ds.size(), start + kChunk);
    std::vector<std::size_t> pos(end - start);
    for (std::size_t i = start; i < end; ++i) pos[i - start] = i;
    const auto logits = forward(model, ds.pixels(pos)).logits;
    for (std::size_t i = start; i < end; ++i) out[i] = predicted_class(logits.row(i - start));
  }
  return out;
}

double accuracy(const ModelState& model, const Dataset& ds) {
  if (ds.empty()) throw ParameterError("accuracy: empty dataset");
  const auto pred = predict(model, ds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) hits += pred[i] == ds[i].label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

double fraction_predicted_as(const ModelState& model, const Dataset& ds, std::size_t cls) {
  if (ds.empty()) throw ParameterError("fraction_predicted_as: empty dataset");
  const auto pred = predict(model, ds);
  const auto hits = std::count(pred.begin(), pred.end(), cls);
  return static_cast<double>(hits) / static_cast<double>(ds.size());
}

double attack_success_rate(const ModelState& model, const Dataset& test, const PoisonSpec& spec) {
  const Dataset attacked = poison_all_nontarget(test, spec);
  if (attacked.empty()) throw ParameterError("attack_success_rate: every test sample is in the target class");
  return fraction_predicted_as(model, attacked, spec.target_class);
}

double filtered_poison_fraction(std::span<const std::uint64_t> coreset_ids,
                                std::span<const std::uint64_t> poisoned_ids) {
  if (poisoned_ids.empty()) return 1.0;
  const std::set<std::uint64_t> poisoned(poisoned_ids.begin(), poisoned_ids.end());
  const std::set<std::uint64_t> coreset(coreset_ids.begin(), coreset_ids.end());
  std::size_t inside = 0;
  for (auto id : coreset) inside += poisoned.contains(id) ? 1 : 0;
  return 1.0 - static_cast<double>(inside) / static_cast<double>(poisoned.size());
}

std::string to_csv_row(const EpochReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%zu,%zu,%.3f", r.epoch, r.val_acc, r.asr,
                r.filtered_poison_fraction, r.coreset_size, r.eliminated_total, r.wall_time_ms);
  return buf;
}

void write_metrics_csv(std::ostream& out, std::span<const EpochReport> history) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& r : history) out << to_csv_row(r) << '\n';
}

std::vector<EpochReport> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) throw FormatError("metrics CSV header mismatch");
  std::vector<EpochReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    EpochReport r;
    if (!(ls >> r.epoch >> r.val_acc >> r.asr >> r.filtered_poison_fraction >> r.coreset_size >> r.eliminated_total >>
          r.wall_time_ms)) {
      throw FormatError("malformed metrics CSV row");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace collider

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "collider/data.hpp"
#include "collider/model.hpp"
#include "collider/poison.hpp"

namespace collider {

struct EpochReport {
  std::size_t epoch = 0;
  double val_acc = 0.0;
  std::optional<double> test_acc;
  double asr = 0.0;
  double filtered_poison_fraction = 1.0;
  std::size_t coreset_size = 0;
  std::size_t eliminated_total = 0;
  double wall_time_ms = 0.0;

  bool operator==(const EpochReport&) const = default;
};

/// argmax over one logit row; ties resolve to the smallest class index.
std::size_t predicted_class(std::span<const double> logits);

std::vector<std::size_t> predict(const ModelState& model, const Dataset& ds);

/// Fraction of samples whose predicted class equals their label.
double accuracy(const ModelState& model, const Dataset& ds);

/// Fraction of samples predicted as `cls`.
double fraction_predicted_as(const ModelState& model, const Dataset& ds, std::size_t cls);

/// Triggers every originally non-target test sample and returns the fraction
/// classified as the target class.
double attack_success_rate(const ModelState& model, const Dataset& test, const PoisonSpec& spec);

/// 1 - |coreset ∩ poisoned| / |poisoned|; 1.0 when nothing is poisoned.
double filtered_poison_fraction(std::span<const std::uint64_t> coreset_ids,
                                std::span<const std::uint64_t> poisoned_ids);

inline constexpr const char* kMetricsCsvHeader =
    "epoch,val_acc,asr,filtered_poison_fraction,coreset_size,eliminated_total,wall_time_ms";

/// One CSV row matching kMetricsCsvHeader. Reals are printed with 6 decimals.
std::string to_csv_row(const EpochReport& r);
void write_metrics_csv(std::ostream& out, std::span<const EpochReport> history);
std::vector<EpochReport> read_metrics_csv(std::istream& in);

}  // namespace collider

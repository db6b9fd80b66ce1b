#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "collider/data.hpp"

namespace collider {

enum class TriggerKind { PatchChecker, SinusoidalStrips };
enum class LabelMode { DirtyLabel, CleanLabel };
enum class Corner { TopLeft, TopRight, BottomLeft, BottomRight };

/// Backdoor injection policy: which trigger, which target class, how many
/// samples and whether their labels are rewritten.
struct PoisonSpec {
  TriggerKind trigger = TriggerKind::PatchChecker;
  std::size_t target_class = 0;
  // Poisoned count is round(injection_rate * |target class|).
  double injection_rate = 0.1;
  LabelMode label_mode = LabelMode::DirtyLabel;

  std::size_t patch_size = 3;
  double patch_intensity = 1.0;
  Corner patch_corner = Corner::BottomRight;

  double sin_amplitude = 0.08;
  double sin_frequency = 6.0;

  void validate(const ImageShape& shape, std::size_t num_classes) const;
  bool operator==(const PoisonSpec&) const = default;
};

std::string to_string(TriggerKind k);
std::string to_string(LabelMode m);
std::string to_string(Corner c);
TriggerKind parse_trigger_kind(const std::string& s);
LabelMode parse_label_mode(const std::string& s);
Corner parse_corner(const std::string& s);

/// Returns a triggered copy of one image.
///
/// PatchChecker overwrites an s-by-s corner square with a checkerboard whose
/// cells at even (row + col) offsets hold the intensity and the others 0.
/// SinusoidalStrips adds amplitude * sin(2*pi*col*frequency / width) to every
/// channel and clips to [0,1].
std::vector<double> apply_trigger(std::span<const double> pixels, const ImageShape& shape,
                                  const PoisonSpec& spec);

/// Flat pixel indices touched by a patch trigger (empty for additive triggers).
std::vector<std::size_t> trigger_support(const ImageShape& shape, const PoisonSpec& spec);

/// Replaces round(rate * |target class|) samples by triggered copies.
/// DirtyLabel draws them from the non-target classes and relabels them to the
/// target; CleanLabel draws them from the target class itself.
Dataset poison_dataset(const Dataset& ds, const PoisonSpec& spec, std::uint64_t seed);

/// Test-time attack set: drops target-class samples and triggers the rest.
/// Labels keep their original values.
Dataset poison_all_nontarget(const Dataset& ds, const PoisonSpec& spec);

}  // namespace collider

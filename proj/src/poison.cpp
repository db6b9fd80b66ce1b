#include "collider/poison.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace collider {

void PoisonSpec::validate(const ImageShape& shape, std::size_t num_classes) const {
  if (!(injection_rate >= 0.0 && injection_rate <= 1.0)) {
    throw ParameterError("injection_rate must be in [0, 1]");
  }
  if (target_class >= num_classes) throw ParameterError("target_class out of range");
  if (trigger == TriggerKind::PatchChecker) {
    if (patch_size == 0 || patch_size >= shape.height || patch_size >= shape.width) {
      throw ParameterError("patch_size must be positive and smaller than the image side");
    }
    if (!(patch_intensity >= 0.0 && patch_intensity <= 1.0)) {
      throw ParameterError("patch_intensity must be in [0, 1]");
    }
  } else {
    if (!(sin_amplitude >= 0.0 && sin_amplitude <= 1.0) || !std::isfinite(sin_frequency)) {
      throw ParameterError("sinusoid amplitude must be in [0, 1] and frequency finite");
    }
  }
}

std::string to_string(TriggerKind k) {
  return k == TriggerKind::PatchChecker ? "patch" : "sinusoid";
}

std::string to_string(LabelMode m) { return m == LabelMode::DirtyLabel ? "dirty" : "clean"; }

std::string to_string(Corner c) {
  switch (c) {
    case Corner::TopLeft:
      return "top-left";
    case Corner::TopRight:
      return "top-right";
    case Corner::BottomLeft:
      return "bottom-left";
    case Corner::BottomRight:
      return "bottom-right";
  }
  return "bottom-right";
}

TriggerKind parse_trigger_kind(const std::string& s) {
  if (s == "patch") return TriggerKind::PatchChecker;
  if (s == "sinusoid") return TriggerKind::SinusoidalStrips;
  throw ParameterError("unknown trigger kind '" + s + "' (expected patch|sinusoid)");
}

LabelMode parse_label_mode(const std::string& s) {
  if (s == "dirty") return LabelMode::DirtyLabel;
  if (s == "clean") return LabelMode::CleanLabel;
  throw ParameterError("unknown label mode '" + s + "' (expected dirty|clean)");
}

Corner parse_corner(const std::string& s) {
  for (auto c : {Corner::TopLeft, Corner::TopRight, Corner::BottomLeft, Corner::BottomRight}) {
    if (to_string(c) == s) return c;
  }
  throw ParameterError("unknown corner '" + s + "'");
}

namespace {

std::pair<std::size_t, std::size_t> patch_origin(const ImageShape& shape, const PoisonSpec& spec) {
  const std::size_t s = spec.patch_size;
  switch (spec.patch_corner) {
    case Corner::TopLeft:
      return {0, 0};
    case Corner::TopRight:
      return {0, shape.width - s};
    case Corner::BottomLeft:
      return {shape.height - s, 0};
    case Corner::BottomRight:
      break;
  }
  return {shape.height - s, shape.width - s};
}

}  // namespace

std::vector<std::size_t> trigger_support(const ImageShape& shape, const PoisonSpec& spec) {
  std::vector<std::size_t> out;
  if (spec.trigger != TriggerKind::PatchChecker) return out;
  const auto [r0, c0] = patch_origin(shape, spec);
  for (std::size_t r = 0; r < spec.patch_size; ++r) {
    for (std::size_t c = 0; c < spec.patch_size; ++c) {
      for (std::size_t ch = 0; ch < shape.channels; ++ch) out.push_back(shape.index(r0 + r, c0 + c, ch));
    }
  }
  return out;
}

std::vector<double> apply_trigger(std::span<const double> pixels, const ImageShape& shape,
                                  const PoisonSpec& spec) {
  if (pixels.size() != shape.size()) throw ParameterError("apply_trigger: pixel count does not match shape");
  std::vector<double> out(pixels.begin(), pixels.end());
  if (spec.trigger == TriggerKind::PatchChecker) {
    if (spec.patch_size == 0 || spec.patch_size > shape.height || spec.patch_size > shape.width) {
      throw ParameterError("apply_trigger: patch does not fit in the image");
    }
    const auto [r0, c0] = patch_origin(shape, spec);
    for (std::size_t r = 0; r < spec.patch_size; ++r) {
      for (std::size_t c = 0; c < spec.patch_size; ++c) {
        const double v = (r + c) % 2 == 0 ? spec.patch_intensity : 0.0;
        for (std::size_t ch = 0; ch < shape.channels; ++ch) out[shape.index(r0 + r, c0 + c, ch)] = v;
      }
    }
    return out;
  }
  const double w = static_cast<double>(shape.width);
  for (std::size_t r = 0; r < shape.height; ++r) {
    for (std::size_t c = 0; c < shape.width; ++c) {
      const double v = spec.sin_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(c) *
                                                      spec.sin_frequency / w);
      for (std::size_t ch = 0; ch < shape.channels; ++ch) {
        auto& px = out[shape.index(r, c, ch)];
        px = std::clamp(px + v, 0.0, 1.0);
      }
    }
  }
  return out;
}

Dataset poison_dataset(const Dataset& ds, const PoisonSpec& spec, std::uint64_t seed) {
  spec.validate(ds.shape(), ds.num_classes());
  const std::size_t target_count = ds.class_counts()[spec.target_class];
  const auto count =
      static_cast<std::size_t>(std::llround(spec.injection_rate * static_cast<double>(target_count)));

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const bool in_target = ds[i].label == spec.target_class;
    const bool eligible = spec.label_mode == LabelMode::DirtyLabel ? !in_target : in_target;
    if (eligible && !ds[i].is_poisoned) pool.push_back(i);
  }
  if (count > pool.size()) {
    throw CapacityError("poison_dataset: need " + std::to_string(count) + " samples but only " +
                        std::to_string(pool.size()) + " are eligible");
  }

  // Partial Fisher-Yates: the first `count` entries are a uniform draw.
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }

  std::vector<Sample> samples = ds.samples();
  for (std::size_t i = 0; i < count; ++i) {
    auto& s = samples[pool[i]];
    s.pixels = apply_trigger(s.pixels, ds.shape(), spec);
    s.label = spec.target_class;
    s.is_poisoned = true;
  }
  return Dataset(ds.shape(), ds.num_classes(), std::move(samples));
}

Dataset poison_all_nontarget(const Dataset& ds, const PoisonSpec& spec) {
  if (spec.target_class >= ds.num_classes()) throw ParameterError("target_class out of range");
  std::vector<Sample> out;
  for (const auto& s : ds.samples()) {
    if (s.label == spec.target_class) continue;
    Sample t = s;
    t.pixels = apply_trigger(s.pixels, ds.shape(), spec);
    out.push_back(std::move(t));
  }
  return Dataset(ds.shape(), ds.num_classes(), std::move(out));
}

}  // namespace collider

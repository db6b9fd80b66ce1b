#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "collider/common.hpp"

namespace collider {

/// Image geometry. Pixels are stored flat, channel-last, row-major:
/// index = (row * width + col) * channels + channel.
struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t size() const { return height * width * channels; }
  std::size_t index(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return (row * width + col) * channels + ch;
  }
  bool operator==(const ImageShape&) const = default;
};

struct Sample {
  std::vector<double> pixels;  // values in [0, 1]
  std::size_t label = 0;
  std::uint64_t id = 0;
  // Ground-truth provenance. Only metrics and diagnostics may read this.
  bool is_poisoned = false;

  bool operator==(const Sample&) const = default;
};

/// Labeled image collection. Construction validates pixel lengths, pixel
/// range, label range and id uniqueness.
class Dataset {
 public:
  Dataset() = default;
  Dataset(ImageShape shape, std::size_t num_classes, std::vector<Sample> samples);

  const ImageShape& shape() const { return shape_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  /// Positions (not ids) of samples carrying label c.
  std::vector<std::size_t> indices_of_class(std::size_t c) const;
  std::vector<std::size_t> class_counts() const;
  std::vector<std::uint64_t> poisoned_ids() const;

  /// Gathers the pixel rows at the given positions into a matrix.
  Matrix pixels(std::span<const std::size_t> positions) const;
  Matrix pixels() const;
  std::vector<std::size_t> labels(std::span<const std::size_t> positions) const;

  bool operator==(const Dataset&) const = default;

 private:
  ImageShape shape_;
  std::size_t num_classes_ = 0;
  std::vector<Sample> samples_;
};

/// Procedural dataset: each class is a Gaussian blob with a class-specific
/// position and width; samples jitter the blob and add pixel noise.
Dataset generate_synthetic(std::size_t classes, std::size_t per_class, std::size_t image_side,
                           std::uint64_t seed);

/// Reads an IDX image/label file pair (MNIST layout). Pixels are scaled to [0,1].
/// Image files may be rank 3 (n, rows, cols) or rank 4 (n, rows, cols, channels).
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes the dataset as an IDX pair. Pixels are quantized to round(255 * p).
void write_idx(const Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// Stratified split into (train, validation). Poisoned samples are never
/// placed in the validation part; each class contributes
/// round(val_fraction * class size) clean samples (fewer if it lacks them).
std::pair<Dataset, Dataset> split(const Dataset& ds, double val_fraction, std::uint64_t seed);

}  // namespace collider

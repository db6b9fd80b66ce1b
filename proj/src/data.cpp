#include "collider/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <unordered_set>

namespace collider {

Dataset::Dataset(ImageShape shape, std::size_t num_classes, std::vector<Sample> samples)
    : shape_(shape), num_classes_(num_classes), samples_(std::move(samples)) {
  if (num_classes_ == 0) throw ParameterError("dataset needs at least one class");
  std::unordered_set<std::uint64_t> ids;
  ids.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (s.pixels.size() != shape_.size()) {
      throw ParameterError("sample " + std::to_string(s.id) + " has " + std::to_string(s.pixels.size()) +
                           " pixels, expected " + std::to_string(shape_.size()));
    }
    if (s.label >= num_classes_) {
      throw ParameterError("sample " + std::to_string(s.id) + " label out of range");
    }
    for (double p : s.pixels) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ParameterError("sample " + std::to_string(s.id) + " has a pixel outside [0,1]");
      }
    }
    if (!ids.insert(s.id).second) throw ParameterError("duplicate sample id " + std::to_string(s.id));
  }
}

std::vector<std::size_t> Dataset::indices_of_class(std::size_t c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].label == c) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (const auto& s : samples_) ++counts[s.label];
  return counts;
}

std::vector<std::uint64_t> Dataset::poisoned_ids() const {
  std::vector<std::uint64_t> out;
  for (const auto& s : samples_) {
    if (s.is_poisoned) out.push_back(s.id);
  }
  return out;
}

Matrix Dataset::pixels(std::span<const std::size_t> positions) const {
  Matrix m(positions.size(), shape_.size());
  for (std::size_t r = 0; r < positions.size(); ++r) {
    const auto& px = samples_.at(positions[r]).pixels;
    std::copy(px.begin(), px.end(), m.row(r).begin());
  }
  return m;
}

Matrix Dataset::pixels() const {
  Matrix m(samples_.size(), shape_.size());
  for (std::size_t r = 0; r < samples_.size(); ++r) {
    std::copy(samples_[r].pixels.begin(), samples_[r].pixels.end(), m.row(r).begin());
  }
  return m;
}

std::vector<std::size_t> Dataset::labels(std::span<const std::size_t> positions) const {
  std::vector<std::size_t> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) out[i] = samples_.at(positions[i]).label;
  return out;
}

Dataset generate_synthetic(std::size_t classes, std::size_t per_class, std::size_t image_side,
                           std::uint64_t seed) {
  if (classes < 2) throw ParameterError("generate_synthetic: classes must be >= 2");
  if (per_class < 1) throw ParameterError("generate_synthetic: per_class must be >= 1");
  if (image_side < 8) throw ParameterError("generate_synthetic: image_side must be >= 8");

  const double side = static_cast<double>(image_side);
  const double mid = (side - 1.0) / 2.0;
  const double radius = 0.25 * side;

  struct Blob {
    double row, col, sigma;
  };
  std::vector<Blob> blobs(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    blobs[c] = {mid + radius * std::sin(angle), mid + radius * std::cos(angle),
                side * (0.07 + 0.025 * static_cast<double>(c % 3))};
  }

  Rng rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05 * side, 0.05 * side);
  std::uniform_real_distribution<double> width_scale(0.85, 1.15);
  std::uniform_real_distribution<double> amplitude(0.6, 1.0);
  std::normal_distribution<double> noise(0.0, 0.02);

  const ImageShape shape{image_side, image_side, 1};
  std::vector<Sample> samples;
  samples.reserve(classes * per_class);
  std::uint64_t next_id = 0;
  // Interleave classes so positional order carries no class structure.
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double r0 = blobs[c].row + jitter(rng);
      const double c0 = blobs[c].col + jitter(rng);
      const double sigma = blobs[c].sigma * width_scale(rng);
      const double amp = amplitude(rng);
      const double inv = 1.0 / (2.0 * sigma * sigma);
      Sample s;
      s.pixels.resize(shape.size());
      s.label = c;
      s.id = next_id++;
      for (std::size_t r = 0; r < image_side; ++r) {
        for (std::size_t col = 0; col < image_side; ++col) {
          const double dr = static_cast<double>(r) - r0;
          const double dc = static_cast<double>(col) - c0;
          const double v = amp * std::exp(-(dr * dr + dc * dc) * inv) + noise(rng);
          s.pixels[shape.index(r, col)] = std::clamp(v, 0.0, 1.0);
        }
      }
      samples.push_back(std::move(s));
    }
  }
  return Dataset(shape, classes, std::move(samples));
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (in.gcount() != 4) throw IoError("truncated IDX header in " + path.string());
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
  out.write(b.data(), 4);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  auto img = open_input(images_path);
  auto lab = open_input(labels_path);

  const std::uint32_t img_magic = read_be32(img, images_path);
  if (img_magic != kImageMagic && img_magic != 0x00000804) {
    throw FormatError("bad image magic in " + images_path.string());
  }
  const std::uint32_t lab_magic = read_be32(lab, labels_path);
  if (lab_magic != kLabelMagic) throw FormatError("bad label magic in " + labels_path.string());

  const std::uint32_t n_images = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);
  const std::uint32_t channels = img_magic == 0x00000804 ? read_be32(img, images_path) : 1;
  const std::uint32_t n_labels = read_be32(lab, labels_path);
  if (n_images != n_labels) {
    throw ConsistencyError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                           std::to_string(n_labels) + " labels");
  }

  const ImageShape shape{rows, cols, channels};
  std::vector<unsigned char> pixel_bytes(static_cast<std::size_t>(n_images) * shape.size());
  img.read(reinterpret_cast<char*>(pixel_bytes.data()), static_cast<std::streamsize>(pixel_bytes.size()));
  if (static_cast<std::size_t>(img.gcount()) != pixel_bytes.size()) {
    throw IoError("truncated IDX image payload in " + images_path.string());
  }
  std::vector<unsigned char> label_bytes(n_labels);
  lab.read(reinterpret_cast<char*>(label_bytes.data()), static_cast<std::streamsize>(label_bytes.size()));
  if (static_cast<std::size_t>(lab.gcount()) != label_bytes.size()) {
    throw IoError("truncated IDX label payload in " + labels_path.string());
  }

  std::size_t num_classes = 0;
  std::vector<Sample> samples(n_images);
  for (std::size_t i = 0; i < n_images; ++i) {
    auto& s = samples[i];
    s.id = i;
    s.label = label_bytes[i];
    num_classes = std::max(num_classes, s.label + 1);
    s.pixels.resize(shape.size());
    for (std::size_t p = 0; p < shape.size(); ++p) {
      s.pixels[p] = static_cast<double>(pixel_bytes[i * shape.size() + p]) / 255.0;
    }
  }
  return Dataset(shape, std::max<std::size_t>(num_classes, 1), std::move(samples));
}

void write_idx(const Dataset& ds, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img) throw IoError("cannot write " + images_path.string());
  if (!lab) throw IoError("cannot write " + labels_path.string());
  const auto& shape = ds.shape();
  const bool rank4 = shape.channels != 1;
  write_be32(img, rank4 ? 0x00000804 : kImageMagic);
  write_be32(img, static_cast<std::uint32_t>(ds.size()));
  write_be32(img, static_cast<std::uint32_t>(shape.height));
  write_be32(img, static_cast<std::uint32_t>(shape.width));
  if (rank4) write_be32(img, static_cast<std::uint32_t>(shape.channels));
  write_be32(lab, kLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (const auto& s : ds.samples()) {
    for (double p : s.pixels) {
      img.put(static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0))));
    }
    if (s.label > 255) throw FormatError("IDX labels must fit in one byte");
    lab.put(static_cast<char>(static_cast<unsigned char>(s.label)));
  }
  if (!img || !lab) throw IoError("write failed for IDX pair");
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ParameterError("split: val_fraction must be in [0, 1)");
  }
  Rng rng(seed);
  std::vector<bool> to_val(ds.size(), false);
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    const auto members = ds.indices_of_class(c);
    std::vector<std::size_t> clean;
    for (auto i : members) {
      if (!ds[i].is_poisoned) clean.push_back(i);
    }
    std::shuffle(clean.begin(), clean.end(), rng);
    const auto want = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(members.size())));
    const std::size_t take = std::min(want, clean.size());
    for (std::size_t j = 0; j < take; ++j) to_val[clean[j]] = true;
  }
  std::vector<Sample> train;
  std::vector<Sample> val;
  for (std::size_t i = 0; i < ds.size(); ++i) (to_val[i] ? val : train).push_back(ds[i]);
  return {Dataset(ds.shape(), ds.num_classes(), std::move(train)),
          Dataset(ds.shape(), ds.num_classes(), std::move(val))};
}

}  // namespace collider

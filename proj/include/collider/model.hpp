#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "collider/common.hpp"

namespace collider {

/// One dense layer: weights are outputs x inputs, row-major.
struct DenseParams {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t out, std::size_t in) { return weights[out * inputs + in]; }
  double w(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }
  bool operator==(const DenseParams&) const = default;
};

/// Per-parameter gradients, same layout as the model layers.
using Gradients = std::vector<DenseParams>;

/// Multilayer perceptron with ReLU hidden layers and a linear C-way output.
/// `velocity` holds the momentum buffers used by sgd_step.
struct ModelState {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., classes
  std::vector<DenseParams> layers;
  std::vector<DenseParams> velocity;
  std::uint64_t step = 0;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for weights and biases.
  static ModelState create(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t classes,
                           std::uint64_t seed);
  static ModelState zeros(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t classes);

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t penultimate_size() const { return layer_sizes[layer_sizes.size() - 2]; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  bool operator==(const ModelState&) const = default;
};

struct ForwardResult {
  Matrix logits;       // n x C
  Matrix penultimate;  // n x width of the last hidden layer (the input when there is none)
};

ForwardResult forward(const ModelState& model, const Matrix& inputs);

struct LossAndGrad {
  double loss = 0.0;  // mean cross-entropy over the batch
  Gradients grads;
};

/// Mean cross-entropy against soft targets (rows sum to 1) and its gradient.
LossAndGrad loss_and_grad(const ModelState& model, const Matrix& inputs, const Matrix& targets);
LossAndGrad loss_and_grad(const ModelState& model, const Matrix& inputs, std::span<const std::size_t> labels);

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes);
Matrix softmax_rows(const Matrix& logits);

/// Last-layer gradient proxy per sample: softmax(logits) - onehot(label).
Matrix gradient_proxy(const ModelState& model, const Matrix& inputs, std::span<const std::size_t> labels);
Matrix gradient_proxy_from_logits(const Matrix& logits, std::span<const std::size_t> labels);

struct SgdParams {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

/// Momentum SGD with L2 weight decay folded into the gradient:
///   v <- momentum * v + (g + weight_decay * w);  w <- w - lr * v
void sgd_step(ModelState& model, const Gradients& grads, const SgdParams& params);

struct MixedBatch {
  Matrix inputs;
  Matrix targets;
};

/// Mixes row i with row partner[i] using weight lambdas[i] on row i.
MixedBatch mix_pairs(const Matrix& inputs, const Matrix& targets, std::span<const std::size_t> partner,
                     std::span<const double> lambdas);

/// Mixup with a random partner permutation and one Beta(alpha, alpha) weight per pair.
MixedBatch mixup_batch(const Matrix& inputs, const Matrix& targets, double alpha, Rng& rng);
MixedBatch mixup_batch(const Matrix& inputs, const Matrix& targets, double alpha, std::uint64_t seed);

/// Checkpoint layout: ASCII header lines
///   collider-mlp 1
///   layers <s0> <s1> ... <sL>
///   step <n>
///   end
/// followed by little-endian float64 values: for each layer, weights
/// (outputs x inputs, row-major) then biases.
void save_checkpoint(const ModelState& model, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace collider

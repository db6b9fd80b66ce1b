#include "collider/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace collider {

namespace {

std::vector<std::size_t> make_sizes(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t classes) {
  if (inputs == 0 || classes == 0) throw ParameterError("model needs positive input and output sizes");
  std::vector<std::size_t> sizes{inputs};
  for (auto h : hidden) {
    if (h == 0) throw ParameterError("hidden layer width must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(classes);
  return sizes;
}

DenseParams empty_layer(std::size_t in, std::size_t out) {
  return DenseParams{in, out, std::vector<double>(in * out, 0.0), std::vector<double>(out, 0.0)};
}

Gradients zero_like(const std::vector<DenseParams>& layers) {
  Gradients g;
  g.reserve(layers.size());
  for (const auto& l : layers) g.push_back(empty_layer(l.inputs, l.outputs));
  return g;
}

// Activations kept for the backward pass: acts[0] is the input, acts[l] the
// post-ReLU output of hidden layer l; logits are separate.
struct Trace {
  std::vector<Matrix> acts;
  Matrix logits;
};

Trace run_forward(const ModelState& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_size()) {
    throw ParameterError("forward: input width " + std::to_string(inputs.cols()) + " does not match model input " +
                         std::to_string(model.input_size()));
  }
  Trace t;
  t.acts.push_back(inputs);
  const std::size_t n = inputs.rows();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    const Matrix& x = t.acts.back();
    Matrix z(n, layer.outputs);
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = x.row(i);
      auto zi = z.row(i);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double* wr = layer.weights.data() + o * layer.inputs;
        double s = layer.biases[o];
        for (std::size_t k = 0; k < layer.inputs; ++k) s += wr[k] * xi[k];
        zi[o] = s;
      }
    }
    if (l + 1 == model.layers.size()) {
      t.logits = std::move(z);
    } else {
      for (auto& v : z.data()) v = v > 0.0 ? v : 0.0;
      t.acts.push_back(std::move(z));
    }
  }
  return t;
}

}  // namespace

ModelState ModelState::create(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t classes,
                              std::uint64_t seed) {
  ModelState m = zeros(inputs, hidden, classes);
  Rng rng(seed);
  for (auto& layer : m.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto& w : layer.weights) w = u(rng);
    for (auto& b : layer.biases) b = u(rng);
  }
  return m;
}

ModelState ModelState::zeros(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t classes) {
  ModelState m;
  m.layer_sizes = make_sizes(inputs, hidden, classes);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    m.layers.push_back(empty_layer(m.layer_sizes[l], m.layer_sizes[l + 1]));
  }
  m.velocity = zero_like(m.layers);
  return m;
}

std::size_t ModelState::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.biases.size();
  return n;
}

bool ModelState::all_finite() const {
  for (const auto& l : layers) {
    for (double v : l.weights) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : l.biases) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ForwardResult forward(const ModelState& model, const Matrix& inputs) {
  Trace t = run_forward(model, inputs);
  return ForwardResult{std::move(t.logits), std::move(t.acts.back())};
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  Matrix m(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw ParameterError("label out of range");
    m(i, labels[i]) = 1.0;
  }
  return m;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    auto pi = p.row(i);
    for (std::size_t c = 0; c < z.size(); ++c) {
      pi[c] = std::exp(z[c] - mx);
      sum += pi[c];
    }
    for (auto& v : pi) v /= sum;
  }
  return p;
}

LossAndGrad loss_and_grad(const ModelState& model, const Matrix& inputs, const Matrix& targets) {
  const std::size_t n = inputs.rows();
  if (n == 0) throw ParameterError("loss_and_grad: empty batch");
  if (targets.rows() != n || targets.cols() != model.num_classes()) {
    throw ParameterError("loss_and_grad: target shape mismatch");
  }
  Trace t = run_forward(model, inputs);
  const Matrix probs = softmax_rows(t.logits);
  const double inv_n = 1.0 / static_cast<double>(n);

  LossAndGrad out;
  Matrix delta(n, model.num_classes());
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = t.logits.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    for (std::size_t c = 0; c < z.size(); ++c) {
      out.loss -= targets(i, c) * (z[c] - lse);
      delta(i, c) = (probs(i, c) - targets(i, c)) * inv_n;
    }
  }
  out.loss *= inv_n;

  out.grads = zero_like(model.layers);
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    auto& g = out.grads[l];
    const Matrix& a = t.acts[l];
    for (std::size_t i = 0; i < n; ++i) {
      const auto di = delta.row(i);
      const auto ai = a.row(i);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = di[o];
        if (d == 0.0) continue;
        double* gr = g.weights.data() + o * layer.inputs;
        for (std::size_t k = 0; k < layer.inputs; ++k) gr[k] += d * ai[k];
        g.biases[o] += d;
      }
    }
    if (l == 0) break;
    Matrix prev(n, layer.inputs);
    for (std::size_t i = 0; i < n; ++i) {
      const auto di = delta.row(i);
      const auto ai = a.row(i);
      auto pi = prev.row(i);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double d = di[o];
        if (d == 0.0) continue;
        const double* wr = layer.weights.data() + o * layer.inputs;
        for (std::size_t k = 0; k < layer.inputs; ++k) pi[k] += d * wr[k];
      }
      // ReLU derivative, taken as 0 at the kink.
      for (std::size_t k = 0; k < layer.inputs; ++k) {
        if (ai[k] <= 0.0) pi[k] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return out;
}

LossAndGrad loss_and_grad(const ModelState& model, const Matrix& inputs, std::span<const std::size_t> labels) {
  return loss_and_grad(model, inputs, one_hot(labels, model.num_classes()));
}

Matrix gradient_proxy_from_logits(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) throw ParameterError("gradient_proxy: label count mismatch");
  Matrix g = softmax_rows(logits);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= logits.cols()) throw ParameterError("gradient_proxy: label out of range");
    g(i, labels[i]) -= 1.0;
  }
  return g;
}

Matrix gradient_proxy(const ModelState& model, const Matrix& inputs, std::span<const std::size_t> labels) {
  return gradient_proxy_from_logits(forward(model, inputs).logits, labels);
}

void sgd_step(ModelState& model, const Gradients& grads, const SgdParams& params) {
  if (!(params.lr > 0.0)) throw ParameterError("sgd_step: lr must be positive");
  if (grads.size() != model.layers.size()) throw ParameterError("sgd_step: gradient layout mismatch");
  for (const auto& g : grads) {
    for (double v : g.weights) {
      if (!std::isfinite(v)) throw NumericError("sgd_step: non-finite gradient");
    }
    for (double v : g.biases) {
      if (!std::isfinite(v)) throw NumericError("sgd_step: non-finite gradient");
    }
  }
  auto update = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = params.momentum * v[i] + g[i] + params.weight_decay * w[i];
      w[i] -= params.lr * v[i];
    }
  };
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    update(model.layers[l].weights, model.velocity[l].weights, grads[l].weights);
    update(model.layers[l].biases, model.velocity[l].biases, grads[l].biases);
  }
  ++model.step;
  if (!model.all_finite()) throw NumericError("sgd_step: parameters became non-finite");
}

MixedBatch mix_pairs(const Matrix& inputs, const Matrix& targets, std::span<const std::size_t> partner,
                     std::span<const double> lambdas) {
  const std::size_t n = inputs.rows();
  if (targets.rows() != n || partner.size() != n || lambdas.size() != n) {
    throw ParameterError("mix_pairs: size mismatch");
  }
  MixedBatch out{Matrix(n, inputs.cols()), Matrix(n, targets.cols())};
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = lambdas[i];
    const std::size_t j = partner[i];
    for (std::size_t k = 0; k < inputs.cols(); ++k) out.inputs(i, k) = lam * inputs(i, k) + (1.0 - lam) * inputs(j, k);
    for (std::size_t k = 0; k < targets.cols(); ++k) {
      out.targets(i, k) = lam * targets(i, k) + (1.0 - lam) * targets(j, k);
    }
  }
  return out;
}

MixedBatch mixup_batch(const Matrix& inputs, const Matrix& targets, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw ParameterError("mixup_batch: alpha must be positive");
  const std::size_t n = inputs.rows();
  std::vector<std::size_t> partner(n);
  std::iota(partner.begin(), partner.end(), std::size_t{0});
  std::shuffle(partner.begin(), partner.end(), rng);
  std::vector<double> lambdas(n);
  for (auto& l : lambdas) l = sample_beta(rng, alpha, alpha);
  return mix_pairs(inputs, targets, partner, lambdas);
}

MixedBatch mixup_batch(const Matrix& inputs, const Matrix& targets, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  return mixup_batch(inputs, targets, alpha, rng);
}

void save_checkpoint(const ModelState& model, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes little-endian doubles");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << "collider-mlp 1\nlayers";
  for (auto s : model.layer_sizes) out << ' ' << s;
  out << "\nstep " << model.step << "\nend\n";
  for (const auto& l : model.layers) {
    out.write(reinterpret_cast<const char*>(l.weights.data()),
              static_cast<std::streamsize>(l.weights.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(l.biases.data()),
              static_cast<std::streamsize>(l.biases.size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "collider-mlp 1") throw FormatError("not a collider checkpoint: " + path.string());

  std::vector<std::size_t> sizes;
  std::uint64_t step = 0;
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "layers") {
      std::size_t s = 0;
      while (ls >> s) sizes.push_back(s);
    } else if (key == "step") {
      ls >> step;
    } else {
      throw FormatError("unexpected checkpoint header line: " + line);
    }
  }
  if (line != "end" || sizes.size() < 2) throw FormatError("incomplete checkpoint header: " + path.string());

  std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
  ModelState m = ModelState::zeros(sizes.front(), hidden, sizes.back());
  m.step = step;
  for (auto& l : m.layers) {
    for (auto* buf : {&l.weights, &l.biases}) {
      const auto bytes = static_cast<std::streamsize>(buf->size() * sizeof(double));
      in.read(reinterpret_cast<char*>(buf->data()), bytes);
      if (in.gcount() != bytes) throw IoError("truncated checkpoint payload: " + path.string());
    }
  }
  return m;
}

}  // namespace collider

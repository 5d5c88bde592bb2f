#include "dpne/network.hpp"

#include "dpne/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace dpne {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void sigmoid_in_place(Matrix& z) { z = (1.0 + (-z.array()).exp()).inverse().matrix(); }

// sigma'(z) expressed through the cached activation h = sigma(z).
void multiply_activation_slope(Matrix& delta, const Matrix& h, Activation activation) {
  if (activation == Activation::kSigmoid) {
    delta.array() *= h.array() * (1.0 - h.array());
  }
}

void require_hidden_sigmoid(const NetworkParams& params, std::size_t layer) {
  require(layer >= 1 && layer < params.depth(), ErrorKind::kInvalidArgument,
          "sparsity layer " + std::to_string(layer) + " is not a hidden layer");
  require(params.activations[layer - 1] == Activation::kSigmoid, ErrorKind::kInvalidArgument,
          "sparsity needs a sigmoid layer; layer " + std::to_string(layer) + " is linear");
}

}  // namespace

LayerSizes::LayerSizes(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  require(sizes_.size() >= 3 && (sizes_.size() - 1) % 2 == 0, ErrorKind::kInvalidArgument,
          "a mirrored network needs an even, positive number of layers");
  for (std::size_t l = 0; l < sizes_.size(); ++l) {
    require(sizes_[l] >= 1, ErrorKind::kInvalidArgument, "layer sizes must be positive");
    require(sizes_[l] == sizes_[sizes_.size() - 1 - l], ErrorKind::kInvalidArgument,
            "layer sizes must be mirrored around the bottleneck");
  }
}

LayerSizes LayerSizes::mirrored(const std::vector<std::size_t>& encoder) {
  require(encoder.size() >= 2, ErrorKind::kInvalidArgument,
          "encoder needs at least an input and a bottleneck size");
  std::vector<std::size_t> sizes = encoder;
  for (auto it = encoder.rbegin() + 1; it != encoder.rend(); ++it) sizes.push_back(*it);
  return LayerSizes(std::move(sizes));
}

NetworkParams NetworkParams::zeros(const LayerSizes& sizes) {
  NetworkParams params;
  const std::size_t depth = sizes.depth();
  for (std::size_t l = 1; l <= depth; ++l) {
    const auto rows = static_cast<Eigen::Index>(sizes[l]);
    const auto cols = static_cast<Eigen::Index>(sizes[l - 1]);
    params.weights.push_back(Matrix::Zero(rows, cols));
    params.biases.push_back(Vector::Zero(rows));
    params.activations.push_back(l == sizes.bottleneck_layer() ? Activation::kLinear
                                                               : Activation::kSigmoid);
  }
  return params;
}

NetworkParams NetworkParams::random(const LayerSizes& sizes, std::uint64_t seed) {
  NetworkParams params = zeros(sizes);
  std::mt19937_64 rng(seed);
  for (auto& w : params.weights) {
    const double r = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> uniform(-r, r);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng);
  }
  return params;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    count += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return count;
}

void NetworkParams::validate() const {
  require(!weights.empty() && weights.size() == biases.size() &&
              weights.size() == activations.size(),
          ErrorKind::kShapeMismatch, "weights, biases and activations disagree on depth");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(biases[l].size() == weights[l].rows(), ErrorKind::kShapeMismatch,
            "bias " + std::to_string(l + 1) + " does not match its weight matrix");
    if (l > 0) {
      require(weights[l].cols() == weights[l - 1].rows(), ErrorKind::kShapeMismatch,
              "layer " + std::to_string(l + 1) + " input width mismatch");
    }
    require(all_finite(weights[l]) && biases[l].allFinite(), ErrorKind::kNonFinite,
            "layer " + std::to_string(l + 1) + " holds non-finite parameters");
  }
}

Gradients Gradients::zeros_like(const NetworkParams& params) {
  Gradients g;
  for (std::size_t l = 0; l < params.depth(); ++l) {
    g.weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
    g.biases.push_back(Vector::Zero(params.biases[l].size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  require(other.weights.size() == weights.size(), ErrorKind::kShapeMismatch,
          "gradient depth mismatch");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

Gradients& Gradients::operator*=(double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= scale;
    biases[l] *= scale;
  }
  return *this;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].size() > 0) m = std::max(m, weights[l].cwiseAbs().maxCoeff());
    if (biases[l].size() > 0) m = std::max(m, biases[l].cwiseAbs().maxCoeff());
  }
  return m;
}

ForwardCache forward(const NetworkParams& params, const Matrix& x) {
  require(static_cast<std::size_t>(x.cols()) == params.input_dim(), ErrorKind::kShapeMismatch,
          "input has " + std::to_string(x.cols()) + " columns, network expects " +
              std::to_string(params.input_dim()));
  ForwardCache cache;
  cache.pre_activations.reserve(params.depth() + 1);
  cache.activations.reserve(params.depth() + 1);
  cache.pre_activations.emplace_back();
  cache.activations.push_back(x);
  for (std::size_t l = 0; l < params.depth(); ++l) {
    Matrix z = cache.activations.back() * params.weights[l].transpose();
    z.rowwise() += params.biases[l].transpose();
    Matrix h = z;
    if (params.activations[l] == Activation::kSigmoid) sigmoid_in_place(h);
    cache.pre_activations.push_back(std::move(z));
    cache.activations.push_back(std::move(h));
  }
  return cache;
}

Matrix forward_to(const NetworkParams& params, const Matrix& x, std::size_t last) {
  require(static_cast<std::size_t>(x.cols()) == params.input_dim(), ErrorKind::kShapeMismatch,
          "input has " + std::to_string(x.cols()) + " columns, network expects " +
              std::to_string(params.input_dim()));
  require(last <= params.depth(), ErrorKind::kInvalidArgument, "layer index past the output");
  Matrix h = x;
  for (std::size_t l = 0; l < last; ++l) {
    Matrix z = h * params.weights[l].transpose();
    z.rowwise() += params.biases[l].transpose();
    if (params.activations[l] == Activation::kSigmoid) sigmoid_in_place(z);
    h = std::move(z);
  }
  return h;
}

double reconstruction_loss(const ForwardCache& cache, const Matrix& x) {
  const Matrix& out = cache.output();
  require(out.rows() == x.rows() && out.cols() == x.cols(), ErrorKind::kShapeMismatch,
          "reconstruction and input shapes differ");
  return (out - x).squaredNorm() / static_cast<double>(x.rows());
}

namespace {

Eigen::ArrayXd mean_activation(const Matrix& h) {
  Eigen::ArrayXd mean = h.colwise().mean().transpose().array();
  return mean.cwiseMax(1e-8).cwiseMin(1.0 - 1e-8);
}

}  // namespace

double sparsity_penalty(const ForwardCache& cache, std::size_t layer, double target) {
  require(layer >= 1 && layer + 1 < cache.activations.size(), ErrorKind::kInvalidArgument,
          "sparsity layer must be a hidden layer");
  require(target > 0.0 && target < 1.0, ErrorKind::kInvalidArgument,
          "sparsity target must lie in (0, 1)");
  const Eigen::ArrayXd rho = mean_activation(cache.activations[layer]);
  const double p = target;
  return (p * (p / rho).log() + (1.0 - p) * ((1.0 - p) / (1.0 - rho)).log()).sum();
}

PenaltyResult nonneg_penalty(const NetworkParams& params) {
  PenaltyResult result{0.0, Gradients::zeros_like(params)};
  for (std::size_t l = 0; l < params.depth(); ++l) {
    const Matrix& w = params.weights[l];
    Matrix& g = result.gradient.weights[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double v = w.data()[i];
      if (v < 0.0) {
        result.value += v * v;
        g.data()[i] = 2.0 * v;
      }
    }
  }
  return result;
}

PenaltyResult weight_decay_penalty(const NetworkParams& params) {
  PenaltyResult result{0.0, Gradients::zeros_like(params)};
  for (std::size_t l = 0; l < params.depth(); ++l) {
    result.value += params.weights[l].squaredNorm();
    result.gradient.weights[l] = 2.0 * params.weights[l];
  }
  return result;
}

PenaltyResult weight_penalty(const NetworkParams& params, WeightPenalty kind) {
  return kind == WeightPenalty::kNonNegative ? nonneg_penalty(params)
                                             : weight_decay_penalty(params);
}

Gradients backprop(const NetworkParams& params, const ForwardCache& cache, const Matrix& x,
                   const BackpropTerms& terms) {
  const std::size_t depth = params.depth();
  require(cache.activations.size() == depth + 1, ErrorKind::kShapeMismatch,
          "forward cache depth does not match the network");
  require(x.rows() == cache.output().rows() && x.cols() == cache.output().cols(),
          ErrorKind::kShapeMismatch, "input does not match the cached reconstruction");
  const std::size_t bottleneck = params.bottleneck_layer();
  if (terms.bottleneck_gradient != nullptr) {
    const Matrix& g = *terms.bottleneck_gradient;
    require(g.rows() == x.rows() && g.cols() == cache.activations[bottleneck].cols(),
            ErrorKind::kShapeMismatch, "bottleneck gradient has the wrong shape");
  }
  if (terms.sparsity) require_hidden_sigmoid(params, terms.sparsity->layer);

  Gradients grads = Gradients::zeros_like(params);

  // delta = dLoss/dz^(l), one row per sample.
  Matrix delta = 2.0 * (cache.output() - x);
  multiply_activation_slope(delta, cache.output(), params.activations[depth - 1]);

  for (std::size_t l = depth; l >= 1; --l) {
    const Matrix& input = cache.activations[l - 1];
    grads.weights[l - 1].noalias() = delta.transpose() * input;
    grads.biases[l - 1] = delta.colwise().sum().transpose();
    if (l == 1) break;

    Matrix upstream = delta * params.weights[l - 1];  // dLoss/dh^(l-1)
    const std::size_t below = l - 1;
    if (terms.sparsity && terms.sparsity->layer == below) {
      const double p = terms.sparsity->target;
      const Eigen::ArrayXd rho = mean_activation(cache.activations[below]);
      const Eigen::RowVectorXd slope =
          (terms.sparsity->weight * (-p / rho + (1.0 - p) / (1.0 - rho))).matrix().transpose();
      upstream.rowwise() += slope;
    }
    if (terms.bottleneck_gradient != nullptr && below == bottleneck) {
      upstream += *terms.bottleneck_gradient;
    }
    multiply_activation_slope(upstream, cache.activations[below], params.activations[below - 1]);
    delta = std::move(upstream);
  }
  return grads;
}

PretrainedPair pretrain_pair(const Matrix& input, std::size_t hidden, Activation hidden_activation,
                             const TrainConfig& config, WeightPenalty penalty,
                             std::uint64_t seed) {
  require(input.rows() >= 1 && input.cols() >= 1, ErrorKind::kInvalidArgument,
          "pretraining input must have at least one row and one column");
  require(hidden >= 1, ErrorKind::kInvalidArgument, "hidden layer must have at least one unit");
  require(config.pretrain_iterations >= 0, ErrorKind::kInvalidArgument,
          "pretrain_iterations must be nonnegative");

  const auto width = static_cast<std::size_t>(input.cols());
  NetworkParams params = NetworkParams::random(LayerSizes({width, hidden, width}), seed);
  params.activations = {hidden_activation, Activation::kSigmoid};

  BackpropTerms terms;
  const bool sparse = hidden_activation == Activation::kSigmoid && config.alpha > 0.0;
  if (sparse) terms.sparsity = SparsityTerm{1, config.sparsity_target, config.alpha};

  const double inv_n = 1.0 / static_cast<double>(input.rows());
  PretrainedPair result;
  result.objective.reserve(static_cast<std::size_t>(config.pretrain_iterations) + 1);

  auto objective = [&](const ForwardCache& cache, const PenaltyResult& reg) {
    double value = reconstruction_loss(cache, input) + 0.5 * config.beta * reg.value;
    if (sparse) value += config.alpha * sparsity_penalty(cache, 1, config.sparsity_target);
    return value;
  };

  for (int it = 0; it < config.pretrain_iterations; ++it) {
    const ForwardCache cache = forward(params, input);
    const PenaltyResult reg = weight_penalty(params, penalty);
    const double value = objective(cache, reg);
    if (!std::isfinite(value)) {
      fail(ErrorKind::kNonFinite, "pretraining objective diverged at iteration " +
                                      std::to_string(it) + "; lower eta");
    }
    result.objective.push_back(value);

    Gradients grads = backprop(params, cache, input, terms);
    for (std::size_t l = 0; l < 2; ++l) {
      params.weights[l] -= config.eta * (inv_n * grads.weights[l] +
                                         0.5 * config.beta * reg.gradient.weights[l]);
      params.biases[l] -= config.eta * inv_n * grads.biases[l];
    }
  }
  const ForwardCache cache = forward(params, input);
  const double final_value = objective(cache, weight_penalty(params, penalty));
  if (!std::isfinite(final_value)) {
    fail(ErrorKind::kNonFinite, "pretraining objective diverged; lower eta");
  }
  result.objective.push_back(final_value);
  result.hidden = cache.activations[1];
  result.pair = std::move(params);
  return result;
}

}  // namespace dpne

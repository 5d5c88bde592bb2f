#include "dpne/trainer.hpp"

#include "dpne/density.hpp"
#include "dpne/error.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <string>

namespace dpne {

void TrainConfig::validate(std::size_t input_dim) const {
  auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorKind::kInvalidArgument, what);
  };
  check(beta >= 0.0 && gamma >= 0.0 && alpha >= 0.0, "beta, gamma and alpha must be >= 0");
  check(eta > 0.0 && std::isfinite(eta), "eta must be positive");
  check(maxiter >= 0 && pretrain_iterations >= 0, "iteration counts must be >= 0");
  check(embedding_dim >= 1, "embedding dimension must be >= 1");
  check(embedding_dim < input_dim, "embedding dimension " + std::to_string(embedding_dim) +
                                       " must be below the input dimension " +
                                       std::to_string(input_dim));
  check(neighbors >= 1, "neighbors must be >= 1");
  check(perplexity > 0.0, "perplexity must be positive");
  check(sparsity_target > 0.0 && sparsity_target < 1.0, "sparsity target must lie in (0, 1)");
  for (const std::size_t h : hidden) check(h >= 1, "hidden layer sizes must be >= 1");
  check(bandwidth.kind == BandwidthPolicy::Kind::kCalibrated || bandwidth.value > 0.0,
        "fixed bandwidth must be positive");
  check(early_stop_patience >= 1 && early_stop_tolerance >= 0.0,
        "early-stop settings out of range");
}

WeightPenalty penalty_for(Method method) noexcept {
  return method == Method::kSae ? WeightPenalty::kWeightDecay : WeightPenalty::kNonNegative;
}

namespace {

void require_unit_range(const Matrix& x) {
  require(x.rows() >= 1 && x.cols() >= 1, ErrorKind::kInvalidArgument, "empty training data");
  require(x.allFinite() && x.minCoeff() >= 0.0 && x.maxCoeff() <= 1.0,
          ErrorKind::kInvalidArgument, "training data must be normalised to [0, 1]");
}

std::vector<std::size_t> encoder_sizes(std::size_t input_dim, const TrainConfig& config) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(config.embedding_dim);
  return sizes;
}

}  // namespace

Pretrained pretrain(const Matrix& x, const TrainConfig& config, WeightPenalty penalty) {
  const auto input_dim = static_cast<std::size_t>(x.cols());
  config.validate(input_dim);
  require_unit_range(x);

  const LayerSizes sizes = LayerSizes::mirrored(encoder_sizes(input_dim, config));
  const std::size_t depth = sizes.depth();
  const std::size_t bottleneck = sizes.bottleneck_layer();
  NetworkParams params = NetworkParams::zeros(sizes);

  Matrix code = x;
  for (std::size_t l = 1; l <= bottleneck; ++l) {
    const Activation activation = l == bottleneck ? Activation::kLinear : Activation::kSigmoid;
    PretrainedPair pair =
        pretrain_pair(code, sizes[l], activation, config, penalty, derive_seed(config.seed, l));
    params.weights[l - 1] = std::move(pair.pair.weights[0]);
    params.biases[l - 1] = std::move(pair.pair.biases[0]);
    params.weights[depth - l] = std::move(pair.pair.weights[1]);
    params.biases[depth - l] = std::move(pair.pair.biases[1]);
    code = std::move(pair.hidden);
  }
  Matrix embedding = embed(params, x);
  return {std::move(params), std::move(embedding)};
}

TrainResult fine_tune(const Matrix& x, Pretrained initial, const TrainConfig& config,
                      Method method) {
  const auto n = static_cast<std::size_t>(x.rows());
  config.validate(static_cast<std::size_t>(x.cols()));
  require_unit_range(x);
  initial.params.validate();
  require(initial.params.input_dim() == static_cast<std::size_t>(x.cols()),
          ErrorKind::kShapeMismatch, "pretrained network does not match the data width");

  const bool preserve = method == Method::kDpne;
  const WeightPenalty penalty = penalty_for(method);
  NetworkParams params = std::move(initial.params);
  const std::size_t bottleneck = params.bottleneck_layer();

  TrainResult result;
  result.pretrained_embedding = std::move(initial.embedding);

  std::optional<Affinity> p;
  if (preserve) {
    require(n >= config.neighbors + 2, ErrorKind::kInvalidArgument,
            "DPNE needs at least k + 2 samples");
    p = high_conditionals(x, config.neighbors, config.degenerate);
    ++result.stats.high_affinity_evaluations;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const double dp_weight = config.gamma * inv_n * inv_n;
  const auto start = std::chrono::steady_clock::now();
  double previous_total = 0.0;
  int quiet_iterations = 0;
  result.log.reserve(static_cast<std::size_t>(config.maxiter));

  for (int it = 0; it < config.maxiter; ++it) {
    const ForwardCache cache = forward(params, x);
    const Matrix& h = cache.activations[bottleneck];
    const PenaltyResult reg = weight_penalty(params, penalty);

    IterationRecord record;
    record.iteration = it + 1;
    record.reconstruction = reconstruction_loss(cache, x);
    record.regularizer = reg.value;

    Matrix dp_grad;
    BackpropTerms terms;
    if (preserve) {
      const BandwidthVector b = config.bandwidth.kind == BandwidthPolicy::Kind::kCalibrated
                                    ? calibrate_bandwidths(h, config.perplexity)
                                    : BandwidthVector::constant(n, config.bandwidth.value);
      const Affinity q = low_conditionals(h, b);
      ++result.stats.low_affinity_evaluations;
      record.preservation = dp_objective(*p, q);
      if (config.gamma != 0.0) {
        dp_grad = config.gamma * dp_gradient(*p, q, h, b, config.gradient_form);
        terms.bottleneck_gradient = &dp_grad;
      }
    }
    record.total = record.reconstruction + 0.5 * config.beta * record.regularizer +
                   dp_weight * record.preservation;
    if (!std::isfinite(record.total)) {
      fail(ErrorKind::kNonFinite,
           "objective is not finite at iteration " + std::to_string(it + 1) + "; lower eta");
    }

    const Gradients grads = backprop(params, cache, x, terms);
    for (std::size_t l = 0; l < params.depth(); ++l) {
      params.weights[l] -= config.eta * (inv_n * grads.weights[l] +
                                         0.5 * config.beta * reg.gradient.weights[l]);
      params.biases[l] -= config.eta * inv_n * grads.biases[l];
      if (!params.weights[l].allFinite() || !params.biases[l].allFinite()) {
        fail(ErrorKind::kNonFinite, "parameters of layer " + std::to_string(l + 1) +
                                        " diverged at iteration " + std::to_string(it + 1));
      }
    }

    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(record);
    ++result.stats.iterations;

    if (config.early_stop && it > 0) {
      const double scale = std::max(std::abs(previous_total), 1e-300);
      quiet_iterations = std::abs(record.total - previous_total) / scale <
                                 config.early_stop_tolerance
                             ? quiet_iterations + 1
                             : 0;
      if (quiet_iterations >= config.early_stop_patience) {
        result.stats.stopped_early = true;
        break;
      }
    }
    previous_total = record.total;
  }

  result.embedding = embed(params, x);
  result.params = std::move(params);
  return result;
}

TrainResult train_dpne(const Matrix& x, const TrainConfig& config) {
  return fine_tune(x, pretrain(x, config, WeightPenalty::kNonNegative), config, Method::kDpne);
}

TrainResult train_baseline(const Matrix& x, const TrainConfig& config, Method mode) {
  require(mode != Method::kDpne, ErrorKind::kInvalidArgument,
          "train_baseline expects SAE or NCAE");
  return fine_tune(x, pretrain(x, config, penalty_for(mode)), config, mode);
}

Matrix embed(const NetworkParams& params, const Matrix& x) {
  return forward_to(params, x, params.bottleneck_layer());
}

}  // namespace dpne

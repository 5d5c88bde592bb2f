#pragma once

#include "dpne/config.hpp"
#include "dpne/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace dpne {

enum class Activation { kSigmoid, kLinear };

/// Layer widths s_0..s_L of a mirrored autoencoder (s_l == s_{L-l}).
class LayerSizes {
 public:
  explicit LayerSizes(std::vector<std::size_t> sizes);

  /// Builds s_0..s_{L/2} followed by its mirror image.
  static LayerSizes mirrored(const std::vector<std::size_t>& encoder);

  std::size_t depth() const noexcept { return sizes_.size() - 1; }
  std::size_t bottleneck_layer() const noexcept { return depth() / 2; }
  std::size_t input_dim() const noexcept { return sizes_.front(); }
  std::size_t bottleneck_dim() const noexcept { return sizes_[bottleneck_layer()]; }
  std::size_t operator[](std::size_t l) const { return sizes_.at(l); }
  const std::vector<std::size_t>& values() const noexcept { return sizes_; }

 private:
  std::vector<std::size_t> sizes_;
};

/// Weights and biases of an L-layer network. Layer l (1-based, as in
/// omega^(l)) is stored at index l-1: weights[l-1] is s_l x s_{l-1}.
struct NetworkParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<Activation> activations;

  /// All-zero parameters; sigmoid everywhere except a linear layer L/2.
  static NetworkParams zeros(const LayerSizes& sizes);
  /// Uniform [-r, r] weights with r = sqrt(6 / (s_in + s_out)), zero biases.
  static NetworkParams random(const LayerSizes& sizes, std::uint64_t seed);

  std::size_t depth() const noexcept { return weights.size(); }
  std::size_t bottleneck_layer() const noexcept { return depth() / 2; }
  std::size_t input_dim() const { return static_cast<std::size_t>(weights.front().cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weights.back().rows()); }
  std::size_t parameter_count() const;

  /// Throws ShapeMismatch / NonFinite when the record is inconsistent.
  void validate() const;
};

/// Activations of every layer for a batch; activations[0] is the input.
struct ForwardCache {
  std::vector<Matrix> pre_activations;  // index l holds z^(l); index 0 is empty
  std::vector<Matrix> activations;      // index l holds h^(l)

  const Matrix& output() const { return activations.back(); }
  const Matrix& layer(std::size_t l) const { return activations.at(l); }
};

/// Gradient accumulators with the same shapes as NetworkParams.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const NetworkParams& params);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double scale);
  double max_abs() const;
};

ForwardCache forward(const NetworkParams& params, const Matrix& x);

/// Runs layers 1..last only and returns h^(last).
Matrix forward_to(const NetworkParams& params, const Matrix& x, std::size_t last);

/// (1/N) sum_i ||x_i - xhat_i||^2.
double reconstruction_loss(const ForwardCache& cache, const Matrix& x);

/// KL sparsity penalty of hidden layer `layer` (1-based) towards target p.
double sparsity_penalty(const ForwardCache& cache, std::size_t layer, double target);

enum class WeightPenalty {
  /// J(w) = w^2 for w < 0, else 0.
  kNonNegative,
  /// w^2 for every weight.
  kWeightDecay,
};

struct PenaltyResult {
  double value = 0.0;
  Gradients gradient;
};

PenaltyResult nonneg_penalty(const NetworkParams& params);
PenaltyResult weight_decay_penalty(const NetworkParams& params);
PenaltyResult weight_penalty(const NetworkParams& params, WeightPenalty kind);

struct SparsityTerm {
  std::size_t layer = 1;  // 1-based hidden layer index
  double target = 0.05;
  double weight = 3.0;
};

/// Extra gradient sources beyond reconstruction.
struct BackpropTerms {
  /// N x D matrix added to dLoss/dh^(L/2); flows into encoder layers only.
  const Matrix* bottleneck_gradient = nullptr;
  std::optional<SparsityTerm> sparsity;
};

/// Backpropagates through `cache` and returns gradients summed over samples,
/// i.e. the gradient of
///   sum_i ||x_i - xhat_i||^2 + N * weight * KL(p || p_hat) + <G, h^(L/2)>
/// where G is `terms.bottleneck_gradient` held constant. Dividing by N gives
/// the gradient of the averaged objective.
Gradients backprop(const NetworkParams& params, const ForwardCache& cache, const Matrix& x,
                   const BackpropTerms& terms = {});

/// Result of training one encoder/decoder pair as a shallow autoencoder.
struct PretrainedPair {
  NetworkParams pair;            // depth 2: encoder layer then decoder layer
  Matrix hidden;                 // encoder output for the training input
  std::vector<double> objective; // objective before each update
};

/// Trains a two-layer autoencoder input -> hidden -> input by full-batch
/// gradient descent on reconstruction + alpha * KL sparsity (sigmoid hidden
/// units only) + beta/2 * weight penalty, for config.pretrain_iterations steps.
PretrainedPair pretrain_pair(const Matrix& input, std::size_t hidden, Activation hidden_activation,
                             const TrainConfig& config, WeightPenalty penalty,
                             std::uint64_t seed);

}  // namespace dpne

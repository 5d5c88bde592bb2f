#pragma once

#include "dpne/density.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dpne {

/// How the embedding-space bandwidths b_h are chosen during fine-tuning.
struct BandwidthPolicy {
  enum class Kind { kCalibrated, kFixed };

  Kind kind = Kind::kCalibrated;
  /// Used when kind == kFixed.
  double value = 1.0;

  static BandwidthPolicy calibrated() { return {Kind::kCalibrated, 1.0}; }
  static BandwidthPolicy fixed(double value) { return {Kind::kFixed, value}; }
};

/// Hyperparameters of pretraining and fine-tuning.
struct TrainConfig {
  /// Weight of the non-negativity (or weight-decay) regulariser.
  double beta = 0.003;
  /// Weight of the distribution-preserving penalty.
  double gamma = 100.0;
  /// Gradient-descent learning rate.
  double eta = 0.1;
  /// Encoder hidden sizes between the input and the bottleneck. The full
  /// network is M-hidden...-D-...hidden-M, so L = 2 * (hidden.size() + 1).
  std::vector<std::size_t> hidden = {500, 500, 2000};
  int maxiter = 400;
  /// Iterations per greedy pretraining pair.
  int pretrain_iterations = 400;
  /// Bottleneck (embedding) dimension D.
  std::size_t embedding_dim = 10;
  /// Neighbour count k of the input-space density estimate.
  std::size_t neighbors = 10;
  /// Perplexity t the embedding bandwidths are calibrated to.
  double perplexity = 20.0;
  /// Sparsity weight alpha (pretraining only).
  double alpha = 3.0;
  /// Sparsity target p (pretraining only).
  double sparsity_target = 0.05;
  std::uint64_t seed = 0;
  BandwidthPolicy bandwidth = BandwidthPolicy::calibrated();
  DpGradientForm gradient_form = DpGradientForm::kExact;
  DegeneratePolicy degenerate = DegeneratePolicy::kFail;
  /// Stop once the relative objective change stays below early_stop_tolerance
  /// for early_stop_patience consecutive iterations.
  bool early_stop = false;
  double early_stop_tolerance = 1e-7;
  int early_stop_patience = 10;

  /// Number of weight layers L.
  std::size_t depth() const noexcept { return 2 * (hidden.size() + 1); }

  /// Throws InvalidArgument when a field is out of range for `input_dim`.
  void validate(std::size_t input_dim) const;
};

}  // namespace dpne

#pragma once

#include "dpne/config.hpp"
#include "dpne/network.hpp"
#include "dpne/types.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dpne {

enum class Method { kDpne, kSae, kNcae };

/// Regulariser paired with each method: weight decay for SAE, the
/// non-negativity penalty for NCAE and DPNE.
WeightPenalty penalty_for(Method method) noexcept;

struct IterationRecord {
  int iteration = 0;
  double reconstruction = 0.0;  // O_rec
  double regularizer = 0.0;     // O_reg (unweighted)
  double preservation = 0.0;    // O_dp, sum of row KL divergences; 0 for baselines
  /// Objective whose gradient the update follows:
  /// O_rec + beta/2 O_reg + gamma/N^2 O_dp.
  double total = 0.0;
  double seconds = 0.0;  // wall time since fine-tuning started
};

/// One record per completed fine-tuning iteration, measured on the
/// parameters the iteration started from.
using TrainLog = std::vector<IterationRecord>;

struct TrainStats {
  int high_affinity_evaluations = 0;
  int low_affinity_evaluations = 0;
  int iterations = 0;
  bool stopped_early = false;
};

/// Greedy layer-wise initialisation of the full mirrored network.
struct Pretrained {
  NetworkParams params;
  Matrix embedding;
};

struct TrainResult {
  NetworkParams params;
  Matrix embedding;
  Matrix pretrained_embedding;
  TrainLog log;
  TrainStats stats;
};

/// Trains each encoder/decoder pair in turn as a shallow autoencoder on the
/// previous pair's hidden code and stacks them. The bottleneck pair uses a
/// linear hidden unit.
Pretrained pretrain(const Matrix& x, const TrainConfig& config, WeightPenalty penalty);

/// Full-batch fine-tuning of a pretrained network. For Method::kDpne the
/// input-space conditionals P are computed once and the embedding
/// conditionals Q are rebuilt every iteration; the baselines skip both.
TrainResult fine_tune(const Matrix& x, Pretrained initial, const TrainConfig& config,
                      Method method);

/// Pretraining with the non-negativity penalty followed by DPNE fine-tuning.
TrainResult train_dpne(const Matrix& x, const TrainConfig& config);

/// SAE or NCAE: same schedule as train_dpne without the preservation term.
TrainResult train_baseline(const Matrix& x, const TrainConfig& config, Method mode);

/// Encoder-only forward pass to the bottleneck.
Matrix embed(const NetworkParams& params, const Matrix& x);

}  // namespace dpne

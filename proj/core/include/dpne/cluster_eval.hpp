#pragma once

#include "dpne/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dpne {

/// Cluster ids 0..clusters-1, one per sample.
struct Partition {
  std::vector<int> assignments;
  int clusters = 0;

  /// Compacts arbitrary integer labels onto 0..K-1 in order of first appearance.
  static Partition from_labels(std::span<const int> labels);

  std::size_t size() const noexcept { return assignments.size(); }
  void validate() const;
};

struct Metrics {
  double acc = 0.0;
  double ami = 0.0;
};

struct KMeansResult {
  Partition partition;
  Matrix centroids;
  double inertia = 0.0;
  /// Within-cluster sum of squares after every assignment step of the
  /// winning restart.
  std::vector<double> inertia_trace;
  int restart = 0;
};

/// k-means with D^2-weighted seeding and Lloyd iterations; keeps the restart
/// with the lowest inertia (lowest index on ties).
KMeansResult kmeans_pp(const Matrix& h, int k, int restarts, std::uint64_t seed);

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// method). Returns, for each row, its assigned column.
std::vector<int> solve_assignment(const Matrix& cost);

/// Fraction of samples correctly labelled under the best one-to-one mapping
/// of predicted clusters onto true classes.
double cluster_accuracy(const Partition& truth, const Partition& pred);

/// Adjusted mutual information with arithmetic-mean normalisation and the
/// exact expected MI under the permutation model.
double adjusted_mutual_info(const Partition& truth, const Partition& pred);

/// Both metrics at once.
Metrics evaluate(const Partition& truth, const Partition& pred);

}  // namespace dpne

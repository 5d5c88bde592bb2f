#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace dpne {

// Samples are rows; features are columns.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/// Caps the number of worker threads used by Eigen and the OpenMP row loops.
/// A value <= 0 restores the runtime default.
void set_thread_count(int threads);

/// Deterministic per-stream seed derivation (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace dpne

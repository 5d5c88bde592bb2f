#pragma once

#include "dpne/types.hpp"

#include <cstddef>
#include <span>

namespace dpne {

/// Radially symmetric kernel profile kappa(u), evaluated on squared scaled
/// distances u = ||a - b||^2 / bandwidth^2.
class KernelProfile {
 public:
  enum class Kind { kGaussian, kCauchy };

  constexpr explicit KernelProfile(Kind kind) noexcept : kind_(kind) {}

  static constexpr KernelProfile gaussian() noexcept { return KernelProfile(Kind::kGaussian); }
  static constexpr KernelProfile cauchy() noexcept { return KernelProfile(Kind::kCauchy); }

  constexpr Kind kind() const noexcept { return kind_; }

  /// exp(-u/2) or 1/(1+u).
  double value(double u) const noexcept;
  /// d kappa / du.
  double derivative(double u) const noexcept;
  /// -kappa'(u) / kappa(u), the weight that appears in d log kappa.
  double log_slope(double u) const noexcept;

 private:
  Kind kind_;
};

inline constexpr double kBandwidthFloor = 1e-12;
inline constexpr double kAffinityLogFloor = 1e-12;

/// Per-point kernel widths; every entry is strictly positive.
class BandwidthVector {
 public:
  explicit BandwidthVector(Vector values);

  static BandwidthVector constant(std::size_t n, double value);

  const Vector& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  Vector values_;
};

/// Row-stochastic conditional-probability matrix with a zero diagonal.
/// Row i holds the distribution of the other points conditioned on anchor i.
class Affinity {
 public:
  /// Normalises each row of nonnegative kernel weights over the off-diagonal
  /// entries. The diagonal of the input is ignored.
  static Affinity from_kernel_weights(Matrix weights);

  const Matrix& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  /// Largest |row sum - 1| over all rows.
  double max_row_error() const;

 private:
  explicit Affinity(Matrix values) : values_(std::move(values)) {}
  Matrix values_;
};

/// What to do when a k-NN distance falls below kBandwidthFloor.
enum class DegeneratePolicy { kFail, kFloor };

/// Pairwise squared Euclidean distances between rows.
Matrix squared_distances(const Matrix& x);

/// Distance from each row to its k-th nearest other row.
BandwidthVector knn_bandwidths(const Matrix& x, std::size_t k,
                               DegeneratePolicy policy = DegeneratePolicy::kFail);

/// k-NN kernel density conditionals of the input space (Gaussian profile,
/// row i scaled by its own k-NN distance).
Affinity high_conditionals(const Matrix& x, std::size_t k,
                           DegeneratePolicy policy = DegeneratePolicy::kFail);

struct BandwidthCalibration {
  double bandwidth = 1.0;
  double entropy_bits = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Finds the Gaussian bandwidth whose normalised kernel weights over
/// `squared_distances` have Shannon entropy log2(perplexity) bits.
///
/// Bisection runs on log(bandwidth) over [1e-12, 1e12] for at most 200 steps
/// and stops once the entropy is within 1e-4 bits of the target. When the
/// target is not reachable the nearest boundary is returned with
/// `converged == false`.
BandwidthCalibration calibrate_bandwidth(std::span<const double> squared_distances,
                                         double perplexity);

/// Calibrates one bandwidth per row of `h` against the other rows. Rows whose
/// neighbours all coincide with them get bandwidth 1 (the kernel is flat for
/// any width).
BandwidthVector calibrate_bandwidths(const Matrix& h, double perplexity);

/// Standard KDE conditionals of the embedding (Cauchy profile, row i scaled
/// by b[i]).
Affinity low_conditionals(const Matrix& h, const BandwidthVector& b);

/// sum_ij P_ij log(P_ij / Q_ij), with 0 log 0 = 0. Both entries are floored
/// inside the log, so identical arguments give exactly 0.
double dp_objective(const Affinity& p, const Affinity& q);

enum class DpGradientForm {
  /// (1/N) times the exact gradient of dp_objective with respect to the
  /// embedding, bandwidths held fixed.
  kExact,
  /// The closed form with the kernel derivative taken at face value:
  /// 1/(N b_i^D) sum_j (P_ij - Q_ij)(h_i - h_j) kappa'(u_ij). Kept for
  /// comparison; it points uphill because kappa' < 0.
  kPrinted,
};

/// Gradient of the distribution-preserving penalty with respect to the
/// embedding rows.
Matrix dp_gradient(const Affinity& p, const Affinity& q, const Matrix& h,
                   const BandwidthVector& b, DpGradientForm form = DpGradientForm::kExact);

/// Central finite differences of dp_objective(P, low_conditionals(H, b)).
Matrix fd_dp_gradient(const Affinity& p, const Matrix& h, const BandwidthVector& b,
                      double step);

}  // namespace dpne

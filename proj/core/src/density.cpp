#include "dpne/density.hpp"

#include "dpne/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dpne {

double KernelProfile::value(double u) const noexcept {
  switch (kind_) {
    case Kind::kGaussian: return std::exp(-0.5 * u);
    case Kind::kCauchy: return 1.0 / (1.0 + u);
  }
  return 0.0;
}

double KernelProfile::derivative(double u) const noexcept {
  switch (kind_) {
    case Kind::kGaussian: return -0.5 * std::exp(-0.5 * u);
    case Kind::kCauchy: {
      const double s = 1.0 + u;
      return -1.0 / (s * s);
    }
  }
  return 0.0;
}

double KernelProfile::log_slope(double u) const noexcept {
  switch (kind_) {
    case Kind::kGaussian: return 0.5;
    case Kind::kCauchy: return 1.0 / (1.0 + u);
  }
  return 0.0;
}

BandwidthVector::BandwidthVector(Vector values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    require(std::isfinite(values_[i]) && values_[i] > 0.0, ErrorKind::kInvalidArgument,
            "bandwidth " + std::to_string(i) + " must be finite and positive");
  }
}

BandwidthVector BandwidthVector::constant(std::size_t n, double value) {
  return BandwidthVector(Vector::Constant(static_cast<Eigen::Index>(n), value));
}

Affinity Affinity::from_kernel_weights(Matrix weights) {
  require(weights.rows() == weights.cols(), ErrorKind::kShapeMismatch,
          "affinity weights must be square");
  const Eigen::Index n = weights.rows();
  require(n >= 2, ErrorKind::kInvalidArgument, "affinity needs at least two points");
  for (Eigen::Index i = 0; i < n; ++i) {
    weights(i, i) = 0.0;
    const double total = weights.row(i).sum();
    if (!(total > 0.0) || !std::isfinite(total)) {
      fail(ErrorKind::kNonFinite, "kernel weights of row " + std::to_string(i) +
                                      " sum to " + std::to_string(total));
    }
    weights.row(i) /= total;
  }
  return Affinity(std::move(weights));
}

double Affinity::max_row_error() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    worst = std::max(worst, std::abs(values_.row(i).sum() - 1.0));
  }
  return worst;
}

Matrix squared_distances(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Matrix d(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = (x.row(i) - x.row(j)).squaredNorm();
      d(i, j) = s;
      d(j, i) = s;
    }
  }
  return d;
}

namespace {

BandwidthVector knn_from_distances(const Matrix& d2, std::size_t k, DegeneratePolicy policy) {
  const auto n = static_cast<std::size_t>(d2.rows());
  require(n >= 2, ErrorKind::kInvalidArgument, "k-NN bandwidths need at least two rows");
  require(k >= 1 && k <= n - 1, ErrorKind::kInvalidArgument,
          "k must lie in [1, N-1]; got k=" + std::to_string(k) + " with N=" + std::to_string(n));

  Vector bandwidth(static_cast<Eigen::Index>(n));
  std::vector<double> others(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others[m++] = d2(row, static_cast<Eigen::Index>(j));
    }
    std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     others.end());
    bandwidth[row] = std::sqrt(others[k - 1]);
  }

  std::vector<std::size_t> degenerate;
  for (std::size_t i = 0; i < n; ++i) {
    auto& b = bandwidth[static_cast<Eigen::Index>(i)];
    if (b < kBandwidthFloor) {
      degenerate.push_back(i);
      b = kBandwidthFloor;
    }
  }
  if (!degenerate.empty() && policy == DegeneratePolicy::kFail) {
    throw DegenerateBandwidth(std::move(degenerate));
  }
  return BandwidthVector(std::move(bandwidth));
}

}  // namespace

BandwidthVector knn_bandwidths(const Matrix& x, std::size_t k, DegeneratePolicy policy) {
  return knn_from_distances(squared_distances(x), k, policy);
}

Affinity high_conditionals(const Matrix& x, std::size_t k, DegeneratePolicy policy) {
  Matrix d2 = squared_distances(x);
  const BandwidthVector b = knn_from_distances(d2, k, policy);
  const KernelProfile kernel = KernelProfile::gaussian();
  const Eigen::Index n = d2.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv = 1.0 / (b.values()[i] * b.values()[i]);
    for (Eigen::Index j = 0; j < n; ++j) d2(i, j) = kernel.value(d2(i, j) * inv);
  }
  return Affinity::from_kernel_weights(std::move(d2));
}

namespace {

// Entropy in bits of weights proportional to exp(-(d - d_min) / (2 b^2)).
double gaussian_entropy_bits(std::span<const double> d2, double d_min, double bandwidth) {
  const double beta = 0.5 / (bandwidth * bandwidth);
  double z = 0.0;
  double moment = 0.0;
  for (const double d : d2) {
    const double shifted = d - d_min;
    const double w = std::exp(-beta * shifted);
    z += w;
    moment += w * shifted;
  }
  return (std::log(z) + beta * moment / z) / std::log(2.0);
}

}  // namespace

BandwidthCalibration calibrate_bandwidth(std::span<const double> squared_distances,
                                         double perplexity) {
  require(perplexity > 0.0, ErrorKind::kInvalidArgument, "perplexity must be positive");
  require(!squared_distances.empty(), ErrorKind::kInvalidArgument, "no distances to calibrate on");
  double d_min = std::numeric_limits<double>::infinity();
  double d_max = 0.0;
  for (const double d : squared_distances) {
    require(d >= 0.0 && std::isfinite(d), ErrorKind::kInvalidArgument,
            "squared distances must be finite and nonnegative");
    d_min = std::min(d_min, d);
    d_max = std::max(d_max, d);
  }
  require(d_max > 0.0, ErrorKind::kInvalidArgument,
          "bandwidth calibration needs at least one positive distance");

  constexpr int kMaxIterations = 200;
  constexpr double kTolerance = 1e-4;
  const double target = std::log2(perplexity);
  double lo = std::log(1e-12);
  double hi = std::log(1e12);
  bool moved_lo = false;
  bool moved_hi = false;

  BandwidthCalibration result;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double b = std::exp(mid);
    const double entropy = gaussian_entropy_bits(squared_distances, d_min, b);
    result = {b, entropy, it, false};
    if (std::abs(entropy - target) < kTolerance) {
      result.converged = true;
      return result;
    }
    // Entropy grows with the bandwidth.
    if (entropy > target) {
      hi = mid;
      moved_hi = true;
    } else {
      lo = mid;
      moved_lo = true;
    }
  }
  if (!moved_hi) result.bandwidth = 1e12;
  if (!moved_lo) result.bandwidth = 1e-12;
  result.entropy_bits = gaussian_entropy_bits(squared_distances, d_min, result.bandwidth);
  return result;
}

BandwidthVector calibrate_bandwidths(const Matrix& h, double perplexity) {
  const Matrix d2 = squared_distances(h);
  const Eigen::Index n = d2.rows();
  require(n >= 2, ErrorKind::kInvalidArgument, "calibration needs at least two rows");
  Vector b(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> others;
    others.reserve(static_cast<std::size_t>(n - 1));
    double largest = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      others.push_back(d2(i, j));
      largest = std::max(largest, d2(i, j));
    }
    b[i] = largest > 0.0 ? calibrate_bandwidth(others, perplexity).bandwidth : 1.0;
  }
  return BandwidthVector(std::move(b));
}

Affinity low_conditionals(const Matrix& h, const BandwidthVector& b) {
  require(b.size() == static_cast<std::size_t>(h.rows()), ErrorKind::kShapeMismatch,
          "one bandwidth per embedded point is required");
  Matrix w = squared_distances(h);
  const KernelProfile kernel = KernelProfile::cauchy();
  const Eigen::Index n = w.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv = 1.0 / (b.values()[i] * b.values()[i]);
    for (Eigen::Index j = 0; j < n; ++j) w(i, j) = kernel.value(w(i, j) * inv);
  }
  return Affinity::from_kernel_weights(std::move(w));
}

double dp_objective(const Affinity& p, const Affinity& q) {
  require(p.size() == q.size(), ErrorKind::kShapeMismatch, "P and Q differ in size");
  const Matrix& pv = p.values();
  const Matrix& qv = q.values();
  double total = 0.0;
  for (Eigen::Index i = 0; i < pv.rows(); ++i) {
    for (Eigen::Index j = 0; j < pv.cols(); ++j) {
      const double pij = pv(i, j);
      if (pij > 0.0) {
        total += pij * std::log(std::max(pij, kAffinityLogFloor) / std::max(qv(i, j), kAffinityLogFloor));
      }
    }
  }
  return total;
}

Matrix dp_gradient(const Affinity& p, const Affinity& q, const Matrix& h, const BandwidthVector& b,
                   DpGradientForm form) {
  const Eigen::Index n = h.rows();
  require(p.size() == static_cast<std::size_t>(n) && q.size() == static_cast<std::size_t>(n) &&
              b.size() == static_cast<std::size_t>(n),
          ErrorKind::kShapeMismatch, "P, Q, H and b must agree on the number of points");

  const KernelProfile kernel = KernelProfile::cauchy();
  const Matrix d2 = squared_distances(h);
  const Matrix diff = p.values() - q.values();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Both forms reduce to g_i = sum_j C_ij (h_i - h_j) for a coefficient matrix C.
  Matrix c(n, n);
  if (form == DpGradientForm::kExact) {
    Matrix a(n, n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double inv_b2 = 1.0 / (b.values()[i] * b.values()[i]);
      for (Eigen::Index j = 0; j < n; ++j) {
        a(i, j) = diff(i, j) * kernel.log_slope(d2(i, j) * inv_b2) * inv_b2;
      }
    }
    c = (2.0 * inv_n) * (a + a.transpose());
  } else {
    const double dim = static_cast<double>(h.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double bi = b.values()[i];
      const double inv_b2 = 1.0 / (bi * bi);
      const double scale = inv_n / std::pow(bi, dim);
      for (Eigen::Index j = 0; j < n; ++j) {
        c(i, j) = scale * diff(i, j) * kernel.derivative(d2(i, j) * inv_b2);
      }
    }
  }
  c.diagonal().setZero();
  Matrix g = (c.rowwise().sum()).asDiagonal() * h;
  g.noalias() -= c * h;
  return g;
}

Matrix fd_dp_gradient(const Affinity& p, const Matrix& h, const BandwidthVector& b, double step) {
  require(step >= 1e-7 && step <= 1e-3, ErrorKind::kInvalidArgument,
          "finite-difference step must lie in [1e-7, 1e-3]");
  Matrix g(h.rows(), h.cols());
  Matrix probe = h;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
      const double original = probe(i, k);
      probe(i, k) = original + step;
      const double up = dp_objective(p, low_conditionals(probe, b));
      probe(i, k) = original - step;
      const double down = dp_objective(p, low_conditionals(probe, b));
      probe(i, k) = original;
      g(i, k) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

}  // namespace dpne

#pragma once

// Independent reference implementations used to check the library. Nothing
// here calls into the code it is meant to verify.

#include "dpne/network.hpp"
#include "dpne/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using dpne::Matrix;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Fourth-order central difference: error ~ h^4 f^(5) + eps / h.
inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-4) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

// Relative error with a floor so that near-zero components compare absolutely.
inline double rel_error(double a, double b, double floor = 1e-5) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Per-sample, per-unit loops; no matrix products.
inline std::vector<Matrix> naive_forward(const dpne::NetworkParams& p, const Matrix& x) {
  std::vector<Matrix> acts{x};
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Matrix& w = p.weights[l];
    const Matrix& in = acts.back();
    Matrix out(in.rows(), w.rows());
    for (Eigen::Index n = 0; n < in.rows(); ++n) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double z = p.biases[l][i];
        for (Eigen::Index j = 0; j < w.cols(); ++j) z += w(i, j) * in(n, j);
        out(n, i) = p.activations[l] == dpne::Activation::kLinear ? z : sigmoid(z);
      }
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

inline double naive_reconstruction(const dpne::NetworkParams& p, const Matrix& x) {
  const auto acts = naive_forward(p, x);
  double s = 0.0;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double r = acts.back()(n, j) - x(n, j);
      s += r * r;
    }
  }
  return s / static_cast<double>(x.rows());
}

inline double naive_sparsity(const Matrix& hidden, double p) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < hidden.cols(); ++j) {
    double mean = 0.0;
    for (Eigen::Index n = 0; n < hidden.rows(); ++n) mean += hidden(n, j);
    mean /= static_cast<double>(hidden.rows());
    s += p * std::log(p / mean) + (1 - p) * std::log((1 - p) / (1 - mean));
  }
  return s;
}

inline double naive_nonneg(const dpne::NetworkParams& p) {
  double s = 0.0;
  for (const auto& w : p.weights) {
    for (Eigen::Index i = 0; i < w.size(); ++i) s += w.data()[i] < 0 ? w.data()[i] * w.data()[i] : 0.0;
  }
  return s;
}

inline double naive_decay(const dpne::NetworkParams& p) {
  double s = 0.0;
  for (const auto& w : p.weights) {
    for (Eigen::Index i = 0; i < w.size(); ++i) s += w.data()[i] * w.data()[i];
  }
  return s;
}

// Visits every scalar parameter in a fixed order (weights then biases per layer).
inline void for_each_parameter(dpne::NetworkParams& p,
                               const std::function<void(double&, std::size_t, bool)>& fn) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < p.weights[l].size(); ++i) fn(p.weights[l].data()[i], l, true);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) fn(p.biases[l].data()[i], l, false);
  }
}

inline std::vector<double> flatten(const dpne::Gradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.insert(out.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
    out.insert(out.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
  }
  return out;
}

// Finite-difference gradient of objective(params) over every parameter.
inline std::vector<double> fd_gradient(
    dpne::NetworkParams p, const std::function<double(const dpne::NetworkParams&)>& objective) {
  std::vector<double> out;
  for_each_parameter(p, [&](double& v, std::size_t, bool) {
    const double original = v;
    out.push_back(derivative(
        [&](double t) {
          v = t;
          return objective(p);
        },
        original));
    v = original;
  });
  return out;
}

inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_error(a[i], b[i]));
  return worst;
}

// Direct double-loop KL( P || Q ) summed over rows, 0 log 0 = 0.
inline double naive_kl(const Matrix& p, const Matrix& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (p(i, j) > 0) s += p(i, j) * std::log(p(i, j) / q(i, j));
    }
  }
  return s;
}

// Row-normalised Cauchy conditionals of H with per-row widths, written out
// directly from the definition.
inline Matrix naive_cauchy_conditionals(const Matrix& h, const std::vector<double>& b) {
  const Eigen::Index n = h.rows();
  Matrix q = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = 0.0;
      for (Eigen::Index k = 0; k < h.cols(); ++k) d += (h(i, k) - h(j, k)) * (h(i, k) - h(j, k));
      q(i, j) = 1.0 / (1.0 + d / (b[i] * b[i]));
      z += q(i, j);
    }
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) /= z;
  }
  return q;
}

// ---- clustering metrics ------------------------------------------------------

// Best accuracy over every injective relabelling of predicted clusters.
inline double brute_force_accuracy(const std::vector<int>& truth, const std::vector<int>& pred,
                                   int k_truth, int k_pred) {
  const int k = std::max(k_truth, k_pred);
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += perm[pred[i]] == truth[i];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

inline long double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0L;
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// AMI with the expected MI summed term by term from exact hypergeometric
// probabilities C(a, n) C(N - a, b - n) / C(N, b).
inline double exact_ami(const std::vector<int>& u, const std::vector<int>& v) {
  const int n = static_cast<int>(u.size());
  std::map<int, int> a, b;
  std::map<std::pair<int, int>, int> table;
  for (int i = 0; i < n; ++i) {
    ++a[u[i]];
    ++b[v[i]];
    ++table[{u[i], v[i]}];
  }
  const long double N = n;
  long double mi = 0, hu = 0, hv = 0, emi = 0;
  for (const auto& [key, nij] : table) {
    mi += nij / N * std::log(N * nij / (static_cast<long double>(a[key.first]) * b[key.second]));
  }
  for (const auto& [k, c] : a) hu -= c / N * std::log(c / N);
  for (const auto& [k, c] : b) hv -= c / N * std::log(c / N);
  for (const auto& [ki, ai] : a) {
    for (const auto& [kj, bj] : b) {
      for (int nij = std::max(1, ai + bj - n); nij <= std::min(ai, bj); ++nij) {
        const long double prob =
            binomial(ai, nij) * binomial(n - ai, bj - nij) / binomial(n, bj);
        emi += nij / N * std::log(N * nij / (static_cast<long double>(ai) * bj)) * prob;
      }
    }
  }
  const long double denom = 0.5L * (hu + hv) - emi;
  if (a.size() == 1 && b.size() == 1) return 1.0;
  return static_cast<double>((mi - emi) / denom);
}

// All set partitions of {0..n-1} into at most k blocks, as restricted growth strings.
inline std::vector<std::vector<int>> set_partitions(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> s(n, 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      out.push_back(s);
      return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      s[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  if (n > 0) rec(0, 0);
  return out;
}

}  // namespace oracle

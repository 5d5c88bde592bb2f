#include "dpne/cluster_eval.hpp"

#include "dpne/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>

namespace dpne {

Partition Partition::from_labels(std::span<const int> labels) {
  Partition p;
  p.assignments.reserve(labels.size());
  std::unordered_map<int, int> ids;
  for (const int label : labels) {
    auto [it, inserted] = ids.try_emplace(label, static_cast<int>(ids.size()));
    p.assignments.push_back(it->second);
  }
  p.clusters = static_cast<int>(ids.size());
  return p;
}

void Partition::validate() const {
  require(clusters >= 1 && assignments.size() >= static_cast<std::size_t>(clusters),
          ErrorKind::kInvalidArgument, "partition needs N >= K >= 1");
  for (const int id : assignments) {
    require(id >= 0 && id < clusters, ErrorKind::kInvalidArgument,
            "cluster id " + std::to_string(id) + " out of range");
  }
}

namespace {

struct LloydRun {
  std::vector<int> labels;
  Matrix centroids;
  std::vector<double> trace;
};

std::vector<std::size_t> seed_centroids(const Matrix& h, int k, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(h.rows());
  std::vector<std::size_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  chosen.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < static_cast<std::size_t>(k)) {
    const auto last = static_cast<Eigen::Index>(chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (h.row(static_cast<Eigen::Index>(i)) - h.row(last)).squaredNorm());
      total += nearest[i];
    }
    std::size_t next = 0;
    if (total > 0.0) {
      next = std::discrete_distribution<std::size_t>(nearest.begin(), nearest.end())(rng);
    } else {
      // Every point coincides with a chosen centroid; take the first unused index.
      while (std::find(chosen.begin(), chosen.end(), next) != chosen.end()) ++next;
    }
    chosen.push_back(next);
  }
  return chosen;
}

double assign(const Matrix& h, const Matrix& centroids, std::vector<int>& labels,
              std::vector<double>& cost) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (h.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    cost[static_cast<std::size_t>(i)] = best;
    inertia += best;
  }
  return inertia;
}

LloydRun lloyd(const Matrix& h, int k, std::mt19937_64& rng) {
  constexpr int kMaxIterations = 300;
  constexpr double kShiftTolerance = 1e-9;
  const auto n = static_cast<std::size_t>(h.rows());

  LloydRun run;
  run.centroids.resize(k, h.cols());
  const auto seeds = seed_centroids(h, k, rng);
  for (int c = 0; c < k; ++c) run.centroids.row(c) = h.row(static_cast<Eigen::Index>(seeds[c]));

  run.labels.assign(n, 0);
  std::vector<double> cost(n, 0.0);
  for (int it = 0; it < kMaxIterations; ++it) {
    run.trace.push_back(assign(h, run.centroids, run.labels, cost));

    Matrix sums = Matrix::Zero(k, h.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(run.labels[i]) += h.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(run.labels[i])];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd updated;
      if (counts[static_cast<std::size_t>(c)] > 0) {
        updated = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: move it onto the point that is currently worst served.
        const auto far = static_cast<std::size_t>(
            std::max_element(cost.begin(), cost.end()) - cost.begin());
        updated = h.row(static_cast<Eigen::Index>(far));
        cost[far] = 0.0;
      }
      shift = std::max(shift, (updated - run.centroids.row(c)).norm());
      run.centroids.row(c) = updated;
    }
    if (shift < kShiftTolerance) break;
  }
  run.trace.push_back(assign(h, run.centroids, run.labels, cost));
  return run;
}

}  // namespace

KMeansResult kmeans_pp(const Matrix& h, int k, int restarts, std::uint64_t seed) {
  require(h.rows() >= 1 && h.allFinite(), ErrorKind::kInvalidArgument,
          "k-means needs finite, non-empty data");
  require(k >= 1 && k <= h.rows(), ErrorKind::kInvalidArgument,
          "cluster count must lie in [1, N]");
  require(restarts >= 1, ErrorKind::kInvalidArgument, "restarts must be >= 1");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    LloydRun run = lloyd(h, k, rng);
    const double inertia = run.trace.back();
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.partition = Partition{std::move(run.labels), k};
      best.centroids = std::move(run.centroids);
      best.inertia_trace = std::move(run.trace);
      best.restart = r;
    }
  }
  return best;
}

namespace {

Matrix contingency(const Partition& truth, const Partition& pred) {
  truth.validate();
  pred.validate();
  require(truth.size() == pred.size(), ErrorKind::kShapeMismatch,
          "partitions cover different numbers of samples");
  Matrix table = Matrix::Zero(truth.clusters, pred.clusters);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    table(truth.assignments[i], pred.assignments[i]) += 1.0;
  }
  return table;
}

bool same_grouping(const Partition& a, const Partition& b) {
  std::unordered_map<int, int> forward, backward;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto [f, f_new] = forward.try_emplace(a.assignments[i], b.assignments[i]);
    const auto [g, g_new] = backward.try_emplace(b.assignments[i], a.assignments[i]);
    if (f->second != b.assignments[i] || g->second != a.assignments[i]) return false;
  }
  return true;
}

double entropy(const Eigen::VectorXd& counts, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0.0) h -= counts[i] / n * std::log(counts[i] / n);
  }
  return h;
}

double expected_mutual_info(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double n) {
  const double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double ai = a[i];
      const double bj = b[j];
      if (ai == 0.0 || bj == 0.0) continue;
      const double fixed = std::lgamma(ai + 1.0) + std::lgamma(bj + 1.0) +
                           std::lgamma(n - ai + 1.0) + std::lgamma(n - bj + 1.0) - lg_n;
      const double lo = std::max(1.0, ai + bj - n);
      const double hi = std::min(ai, bj);
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_prob = fixed - std::lgamma(nij + 1.0) - std::lgamma(ai - nij + 1.0) -
                                std::lgamma(bj - nij + 1.0) - std::lgamma(n - ai - bj + nij + 1.0);
        emi += nij / n * std::log(n * nij / (ai * bj)) * std::exp(log_prob);
      }
    }
  }
  return emi;
}

}  // namespace

double cluster_accuracy(const Partition& truth, const Partition& pred) {
  const Matrix table = contingency(truth, pred);
  const Eigen::Index k = std::max(table.rows(), table.cols());
  Matrix counts = Matrix::Zero(k, k);
  counts.topLeftCorner(table.cols(), table.rows()) = table.transpose();  // pred x truth
  const double top = counts.maxCoeff();
  const std::vector<int> mapping = solve_assignment((top - counts.array()).matrix());
  double correct = 0.0;
  for (Eigen::Index p = 0; p < k; ++p) correct += counts(p, mapping[static_cast<std::size_t>(p)]);
  return correct / static_cast<double>(truth.size());
}

double adjusted_mutual_info(const Partition& truth, const Partition& pred) {
  const Matrix table = contingency(truth, pred);
  if (same_grouping(truth, pred)) return 1.0;

  const double n = static_cast<double>(truth.size());
  const Eigen::VectorXd a = table.rowwise().sum();
  const Eigen::VectorXd b = table.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double nij = table(i, j);
      if (nij > 0.0) mi += nij / n * std::log(n * nij / (a[i] * b[j]));
    }
  }
  const double emi = expected_mutual_info(a, b, n);
  const double normalizer = 0.5 * (entropy(a, n) + entropy(b, n));
  double denominator = normalizer - emi;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  if (std::abs(denominator) < kEps) denominator = denominator < 0.0 ? -kEps : kEps;
  return (mi - emi) / denominator;
}

Metrics evaluate(const Partition& truth, const Partition& pred) {
  return {cluster_accuracy(truth, pred), adjusted_mutual_info(truth, pred)};
}

}  // namespace dpne

#pragma once

#include "dpne/network.hpp"
#include "dpne/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dpne {

/// Per-column affine map applied during loading: normalised = (raw - min) / (max - min).
struct FeatureRange {
  double min = 0.0;
  double max = 1.0;
};

struct DataMatrix {
  Matrix values;
  std::optional<Labels> labels;
  std::vector<FeatureRange> ranges;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }

  /// Throws on empty data, label count mismatch or values outside [0, 1].
  void validate() const;
};

struct SyntheticSpec {
  int clusters = 4;
  int points_per_cluster = 250;
  double cluster_std = 1.0;
  double radius = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  DataMatrix data;  // N x 100, labels = cluster ids
  Matrix latent;    // N x 2 coordinates before lifting
};

/// Gaussian blobs centred on a circle, lifted to 100-D through
/// x = sigmoid(W2 sigmoid(W1 h)) with standard normal W1 (10x2) and W2 (100x10).
SyntheticData gen_synthetic(const SyntheticSpec& spec);

/// Reads an IDX image file (magic 2051) and label file (magic 2049); pixels
/// are flattened row-major and divided by 255.
DataMatrix load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Writes unsigned-byte IDX files. Pixels are expected in 0..255.
void write_idx_images(const std::filesystem::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// Parses a rectangular numeric table and min-max normalises every feature
/// column (constant columns become 0). `label_column` is 0-based. With
/// `normalize` off the values are kept as read and must already lie in [0, 1].
DataMatrix load_delimited(const std::filesystem::path& path, char delimiter,
                          std::optional<std::size_t> label_column = std::nullopt,
                          bool normalize = true);

/// Draws n rows without replacement, keeping the original row order.
/// Stratified sampling allocates per class by largest remainder.
DataMatrix subsample(const DataMatrix& x, std::size_t n, std::uint64_t seed, bool stratified);

/// Writes `count` P5 images of the incoming weights of layer `layer`
/// (1-based), reshaped to side x side. Returns the written paths.
std::vector<std::filesystem::path> save_receptive_fields(const NetworkParams& params,
                                                         std::size_t layer, std::size_t count,
                                                         std::size_t side,
                                                         const std::filesystem::path& dir);

/// Gray level for weight w when the largest magnitude in the row is m.
std::uint8_t weight_to_gray(double w, double m) noexcept;

void write_embedding(const std::filesystem::path& path, const Matrix& embedding,
                     const std::optional<Labels>& labels = std::nullopt, char delimiter = ',');

struct EmbeddingFile {
  Matrix embedding;
  std::optional<Labels> labels;
};

/// Reads a headerless table; with `has_labels` the last column holds labels.
EmbeddingFile read_embedding(const std::filesystem::path& path, bool has_labels,
                             char delimiter = ',');

/// Versioned text serialisation of a network.
void save_params(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_params(const std::filesystem::path& path);

}  // namespace dpne

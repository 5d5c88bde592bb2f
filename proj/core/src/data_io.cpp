#include "dpne/data_io.hpp"

#include "dpne/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace dpne {

namespace fs = std::filesystem;

void DataMatrix::validate() const {
  require(values.rows() >= 1 && values.cols() >= 1, ErrorKind::kInvalidArgument,
          "data matrix is empty");
  require(!labels || labels->size() == rows(), ErrorKind::kCountMismatch,
          "label count does not match the number of rows");
  require(values.allFinite() && values.minCoeff() >= 0.0 && values.maxCoeff() <= 1.0,
          ErrorKind::kInvalidArgument, "data values must lie in [0, 1]");
}

void SyntheticSpec::validate() const {
  require(clusters >= 2, ErrorKind::kInvalidArgument, "synthetic data needs at least 2 clusters");
  require(points_per_cluster >= 1, ErrorKind::kInvalidArgument,
          "points per cluster must be >= 1");
  require(cluster_std > 0.0 && std::isfinite(cluster_std), ErrorKind::kInvalidArgument,
          "cluster std must be positive");
  require(radius >= 0.0 && std::isfinite(radius), ErrorKind::kInvalidArgument,
          "radius must be >= 0");
}

namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix w1(10, 2);
  Matrix w2(100, 10);
  for (Eigen::Index i = 0; i < w1.size(); ++i) w1.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < w2.size(); ++i) w2.data()[i] = normal(rng);

  const auto n = static_cast<Eigen::Index>(spec.clusters) * spec.points_per_cluster;
  SyntheticData out;
  out.latent.resize(n, 2);
  Labels labels(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int c = 0; c < spec.clusters; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / spec.clusters;
    const double cx = spec.radius * std::cos(angle);
    const double cy = spec.radius * std::sin(angle);
    for (int p = 0; p < spec.points_per_cluster; ++p, ++row) {
      out.latent(row, 0) = cx + spec.cluster_std * normal(rng);
      out.latent(row, 1) = cy + spec.cluster_std * normal(rng);
      labels[static_cast<std::size_t>(row)] = c;
    }
  }

  out.data.values = sigmoid(sigmoid(out.latent * w1.transpose()) * w2.transpose());
  out.data.labels = std::move(labels);
  out.data.ranges.assign(100, FeatureRange{});
  return out;
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const fs::path& path) {
  require(bytes.size() >= offset + 4, ErrorKind::kTruncatedFile,
          path.string() + ": header is truncated");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

constexpr std::uint32_t kIdxImages = 2051;
constexpr std::uint32_t kIdxLabels = 2049;

}  // namespace

DataMatrix load_idx(const fs::path& images, const fs::path& labels) {
  const auto img = read_bytes(images);
  const std::uint32_t img_magic = read_be32(img, 0, images);
  require(img_magic == kIdxImages, ErrorKind::kBadMagic,
          images.string() + ": expected magic 2051, found " + std::to_string(img_magic));
  const std::uint64_t count = read_be32(img, 4, images);
  const std::uint64_t rows = read_be32(img, 8, images);
  const std::uint64_t cols = read_be32(img, 12, images);
  const std::uint64_t pixels = rows * cols;
  require(img.size() >= 16 + count * pixels, ErrorKind::kTruncatedFile,
          images.string() + ": payload shorter than " + std::to_string(count) + " images");

  const auto lab = read_bytes(labels);
  const std::uint32_t lab_magic = read_be32(lab, 0, labels);
  require(lab_magic == kIdxLabels, ErrorKind::kBadMagic,
          labels.string() + ": expected magic 2049, found " + std::to_string(lab_magic));
  const std::uint64_t label_count = read_be32(lab, 4, labels);
  require(lab.size() >= 8 + label_count, ErrorKind::kTruncatedFile,
          labels.string() + ": payload shorter than " + std::to_string(label_count) + " labels");
  require(label_count == count, ErrorKind::kCountMismatch,
          std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
  require(count >= 1 && pixels >= 1, ErrorKind::kInvalidArgument, "IDX file holds no data");

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(pixels));
  for (std::uint64_t i = 0; i < count * pixels; ++i) {
    out.values.data()[i] = img[16 + i] / 255.0;
  }
  out.labels = Labels(count);
  for (std::uint64_t i = 0; i < count; ++i) (*out.labels)[i] = lab[8 + i];
  out.ranges.assign(pixels, FeatureRange{0.0, 255.0});
  return out;
}

void write_idx_images(const fs::path& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
  require(pixels.size() == std::size_t{count} * rows * cols, ErrorKind::kShapeMismatch,
          "pixel buffer does not match the IDX dimensions");
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  put_be32(out, kIdxImages);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const fs::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  put_be32(out, kIdxLabels);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Splits a delimited file into rows of cells. Blank lines are skipped.
std::vector<std::vector<double>> parse_table(const fs::path& path, char delimiter) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto cut = delimiter == ' ' ? rest.find_first_of(" \t") : rest.find(delimiter);
      const std::string_view cell = trim(rest.substr(0, cut));
      if (!(delimiter == ' ' && cell.empty())) {
        double value = 0.0;
        const char* end = cell.data() + cell.size();
        const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
        require(ec == std::errc{} && ptr == end && std::isfinite(value),
                ErrorKind::kNonNumericCell,
                path.string() + ":" + std::to_string(line_no) + ": cell '" + std::string(cell) +
                    "' is not a finite number");
        row.push_back(value);
      }
      if (cut == std::string_view::npos) break;
      rest.remove_prefix(cut + 1);
    }
    require(rows.empty() || row.size() == rows.front().size(), ErrorKind::kRaggedRows,
            path.string() + ":" + std::to_string(line_no) + ": expected " +
                std::to_string(rows.empty() ? 0 : rows.front().size()) + " cells, found " +
                std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

DataMatrix load_delimited(const fs::path& path, char delimiter,
                          std::optional<std::size_t> label_column, bool normalize) {
  const auto table = parse_table(path, delimiter);
  require(!table.empty(), ErrorKind::kInvalidArgument, path.string() + ": no data rows");
  const std::size_t width = table.front().size();
  if (label_column) {
    require(*label_column < width, ErrorKind::kInvalidArgument,
            "label column " + std::to_string(*label_column) + " is out of range");
  }
  const std::size_t features = width - (label_column ? 1 : 0);
  require(features >= 1, ErrorKind::kInvalidArgument, path.string() + ": no feature columns");

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(features));
  if (label_column) out.labels = Labels(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::size_t f = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (label_column && j == *label_column) {
        const double v = table[i][j];
        require(v == std::floor(v) && std::abs(v) < 2e9, ErrorKind::kNonNumericCell,
                path.string() + ": label on row " + std::to_string(i + 1) +
                    " is not an integer");
        (*out.labels)[i] = static_cast<int>(v);
      } else {
        out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f++)) = table[i][j];
      }
    }
  }

  out.ranges.assign(features, FeatureRange{});
  if (!normalize) {
    out.validate();
    return out;
  }
  for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
    const double lo = out.values.col(j).minCoeff();
    const double hi = out.values.col(j).maxCoeff();
    out.ranges[static_cast<std::size_t>(j)] = {lo, hi};
    if (hi > lo) {
      out.values.col(j) = (out.values.col(j).array() - lo) / (hi - lo);
    } else {
      out.values.col(j).setZero();
    }
  }
  return out;
}

DataMatrix subsample(const DataMatrix& x, std::size_t n, std::uint64_t seed, bool stratified) {
  const std::size_t total = x.rows();
  require(n >= 1 && n <= total, ErrorKind::kTooFew,
          "cannot draw " + std::to_string(n) + " rows from " + std::to_string(total));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked;
  picked.reserve(n);

  if (!stratified) {
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    picked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    require(x.labels.has_value(), ErrorKind::kInvalidArgument,
            "stratified sampling requires labels");
    std::map<int, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < total; ++i) classes[(*x.labels)[i]].push_back(i);

    // Largest-remainder allocation; ties go to the smaller class label.
    std::vector<std::pair<double, int>> remainders;
    std::map<int, std::size_t> quota;
    std::size_t assigned = 0;
    for (const auto& [label, members] : classes) {
      const double exact = static_cast<double>(n) * members.size() / total;
      quota[label] = static_cast<std::size_t>(exact);
      assigned += quota[label];
      remainders.emplace_back(exact - std::floor(exact), label);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++quota[remainders[r].second];

    for (auto& [label, members] : classes) {
      std::shuffle(members.begin(), members.end(), rng);
      picked.insert(picked.end(), members.begin(),
                    members.begin() + static_cast<std::ptrdiff_t>(quota[label]));
    }
  }
  std::sort(picked.begin(), picked.end());

  DataMatrix out;
  out.values.resize(static_cast<Eigen::Index>(n), x.values.cols());
  if (x.labels) out.labels = Labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = x.values.row(static_cast<Eigen::Index>(picked[i]));
    if (x.labels) (*out.labels)[i] = (*x.labels)[picked[i]];
  }
  out.ranges = x.ranges;
  return out;
}

std::uint8_t weight_to_gray(double w, double m) noexcept {
  if (!(m > 0.0)) return 128;
  const double level = std::round(128.0 + 128.0 * w / m);
  return static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
}

std::vector<fs::path> save_receptive_fields(const NetworkParams& params, std::size_t layer,
                                            std::size_t count, std::size_t side,
                                            const fs::path& dir) {
  require(layer >= 1 && layer <= params.depth(), ErrorKind::kInvalidArgument,
          "layer " + std::to_string(layer) + " does not exist");
  const Matrix& w = params.weights[layer - 1];
  require(static_cast<std::size_t>(w.cols()) == side * side, ErrorKind::kShapeMismatch,
          "layer " + std::to_string(layer) + " has " + std::to_string(w.cols()) +
              " inputs, not " + std::to_string(side) + "x" + std::to_string(side));
  require(count <= static_cast<std::size_t>(w.rows()), ErrorKind::kShapeMismatch,
          "layer " + std::to_string(layer) + " has only " + std::to_string(w.rows()) + " units");

  fs::create_directories(dir);
  const std::string header = "P5 " + std::to_string(side) + " " + std::to_string(side) + " 255\n";
  std::vector<fs::path> written;
  std::vector<char> pixels(side * side);
  for (std::size_t unit = 0; unit < count; ++unit) {
    const auto row = w.row(static_cast<Eigen::Index>(unit));
    const double m = row.cwiseAbs().maxCoeff();
    for (std::size_t p = 0; p < side * side; ++p) {
      pixels[p] = static_cast<char>(weight_to_gray(row(static_cast<Eigen::Index>(p)), m));
    }
    char name[32];
    std::snprintf(name, sizeof name, "field_%04zu.pgm", unit);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
    out << header;
    out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
    written.push_back(path);
  }
  return written;
}

void write_embedding(const fs::path& path, const Matrix& embedding,
                     const std::optional<Labels>& labels, char delimiter) {
  require(!labels || labels->size() == static_cast<std::size_t>(embedding.rows()),
          ErrorKind::kCountMismatch, "label count does not match the embedding");
  std::FILE* f = std::fopen(path.c_str(), "w");
  require(f != nullptr, ErrorKind::kIo, "cannot write " + path.string());
  for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
    for (Eigen::Index j = 0; j < embedding.cols(); ++j) {
      if (j > 0) std::fputc(delimiter, f);
      std::fprintf(f, "%.17g", embedding(i, j));
    }
    if (labels) std::fprintf(f, "%c%d", delimiter, (*labels)[static_cast<std::size_t>(i)]);
    std::fputc('\n', f);
  }
  const bool ok = std::fclose(f) == 0;
  require(ok, ErrorKind::kIo, "failed to finish " + path.string());
}

EmbeddingFile read_embedding(const fs::path& path, bool has_labels, char delimiter) {
  const auto table = parse_table(path, delimiter);
  require(!table.empty(), ErrorKind::kInvalidArgument, path.string() + ": no rows");
  const std::size_t width = table.front().size();
  const std::size_t dims = width - (has_labels ? 1 : 0);
  require(dims >= 1, ErrorKind::kInvalidArgument, path.string() + ": no embedding columns");

  EmbeddingFile out;
  out.embedding.resize(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(dims));
  if (has_labels) out.labels = Labels(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < dims; ++j) {
      out.embedding(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table[i][j];
    }
    if (has_labels) {
      const double v = table[i][dims];
      require(v == std::floor(v), ErrorKind::kNonNumericCell,
              path.string() + ": label on row " + std::to_string(i + 1) + " is not an integer");
      (*out.labels)[i] = static_cast<int>(v);
    }
  }
  return out;
}

}  // namespace dpne

#include "dpne/data_io.hpp"

#include "dpne/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpne {

namespace {

constexpr const char* kMagic = "dpne-params";
constexpr int kVersion = 1;

const char* activation_name(Activation a) { return a == Activation::kLinear ? "linear" : "sigmoid"; }

}  // namespace

// Layout:
//   dpne-params 1
//   layers L
//   layer <l> <rows> <cols> <activation>
//   <rows lines of weights>
//   <one line of biases>
void save_params(const std::filesystem::path& path, const NetworkParams& params) {
  params.validate();
  std::FILE* f = std::fopen(path.c_str(), "w");
  require(f != nullptr, ErrorKind::kIo, "cannot write " + path.string());
  std::fprintf(f, "%s %d\nlayers %zu\n", kMagic, kVersion, params.depth());
  for (std::size_t l = 0; l < params.depth(); ++l) {
    const Matrix& w = params.weights[l];
    std::fprintf(f, "layer %zu %td %td %s\n", l + 1, w.rows(), w.cols(),
                 activation_name(params.activations[l]));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        std::fprintf(f, j == 0 ? "%.17g" : " %.17g", w(i, j));
      }
      std::fputc('\n', f);
    }
    const Vector& b = params.biases[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) std::fprintf(f, i == 0 ? "%.17g" : " %.17g", b[i]);
    std::fputc('\n', f);
  }
  const bool ok = std::fclose(f) == 0;
  require(ok, ErrorKind::kIo, "failed to finish " + path.string());
}

NetworkParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  const std::string where = path.string() + ": ";

  std::string magic;
  int version = 0;
  in >> magic >> version;
  require(static_cast<bool>(in) && magic == kMagic, ErrorKind::kBadMagic,
          where + "not a parameter file");
  require(version == kVersion, ErrorKind::kBadMagic,
          where + "unsupported version " + std::to_string(version));

  std::string tag;
  std::size_t depth = 0;
  in >> tag >> depth;
  require(static_cast<bool>(in) && tag == "layers" && depth >= 1, ErrorKind::kTruncatedFile,
          where + "missing layer count");

  NetworkParams params;
  for (std::size_t l = 0; l < depth; ++l) {
    std::size_t index = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::string activation;
    in >> tag >> index >> rows >> cols >> activation;
    require(static_cast<bool>(in) && tag == "layer" && index == l + 1 && rows >= 1 && cols >= 1,
            ErrorKind::kTruncatedFile, where + "bad header for layer " + std::to_string(l + 1));
    require(activation == "linear" || activation == "sigmoid", ErrorKind::kInvalidArgument,
            where + "unknown activation '" + activation + "'");
    Matrix w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) in >> w.data()[i];
    Vector b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) in >> b[i];
    require(static_cast<bool>(in), ErrorKind::kTruncatedFile,
            where + "layer " + std::to_string(l + 1) + " is truncated");
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
    params.activations.push_back(activation == "linear" ? Activation::kLinear
                                                        : Activation::kSigmoid);
  }
  params.validate();
  return params;
}

}  // namespace dpne

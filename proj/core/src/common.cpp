#include "dpne/error.hpp"
#include "dpne/types.hpp"

#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dpne {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kDegenerateBandwidth: return "DegenerateBandwidth";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kBadMagic: return "BadMagic";
    case ErrorKind::kTruncatedFile: return "TruncatedFile";
    case ErrorKind::kCountMismatch: return "CountMismatch";
    case ErrorKind::kRaggedRows: return "RaggedRows";
    case ErrorKind::kNonNumericCell: return "NonNumericCell";
    case ErrorKind::kTooFew: return "TooFew";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

bool Error::is_numeric() const noexcept {
  return kind_ == ErrorKind::kNonFinite || kind_ == ErrorKind::kDegenerateBandwidth;
}

namespace {

std::string describe_rows(const std::vector<std::size_t>& rows) {
  std::ostringstream out;
  out << "zero k-NN distance for " << rows.size() << " row(s):";
  const std::size_t shown = std::min<std::size_t>(rows.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) out << ' ' << rows[i];
  if (shown < rows.size()) out << " ...";
  return out.str();
}

}  // namespace

DegenerateBandwidth::DegenerateBandwidth(std::vector<std::size_t> rows)
    : Error(ErrorKind::kDegenerateBandwidth, describe_rows(rows)), rows_(std::move(rows)) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_num_procs();
  omp_set_num_threads(threads);
#endif
  Eigen::setNbThreads(threads > 0 ? threads : 0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace dpne

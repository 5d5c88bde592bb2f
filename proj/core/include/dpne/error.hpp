#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dpne {

enum class ErrorKind {
  kInvalidArgument,
  kShapeMismatch,
  kDegenerateBandwidth,
  kNonFinite,
  kBadMagic,
  kTruncatedFile,
  kCountMismatch,
  kRaggedRows,
  kNonNumericCell,
  kTooFew,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by the numbers themselves rather than by bad input.
  bool is_numeric() const noexcept;

 private:
  ErrorKind kind_;
};

/// Raised when k-NN bandwidths collapse below the floor (duplicate points).
class DegenerateBandwidth : public Error {
 public:
  explicit DegenerateBandwidth(std::vector<std::size_t> rows);

  const std::vector<std::size_t>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace dpne

#pragma once

#include <stdexcept>
#include <string>

namespace nndm {

// Bad argument values: out-of-range k, dimension mismatches, empty grids.
class invalid_parameter : public std::invalid_argument {
public:
  explicit invalid_parameter(const std::string& msg) : std::invalid_argument(msg) {}
};

// Data that violates contracts: non-finite entries, single-class labels.
class invalid_data : public std::invalid_argument {
public:
  explicit invalid_data(const std::string& msg) : std::invalid_argument(msg) {}
};

// Failures of numerical routines (e.g. a Cholesky factorization of a
// matrix that should have been positive definite).
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files. `offset` is the byte position where parsing stopped,
// or -1 when unknown.
class parse_error : public std::runtime_error {
public:
  parse_error(const std::string& msg, long long offset = -1)
      : std::runtime_error(offset >= 0 ? msg + " (byte offset " + std::to_string(offset) + ")"
                                       : msg),
        offset_(offset) {}
  long long offset() const { return offset_; }

private:
  long long offset_;
};

// Every cross-validation candidate was rejected.
class cv_failure : public std::runtime_error {
public:
  explicit cv_failure(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate sample moments (zero variance / singular covariance).
class degenerate_data : public std::runtime_error {
public:
  explicit degenerate_data(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation not defined for these inputs (e.g. a univariate-only formula).
class unsupported : public std::runtime_error {
public:
  explicit unsupported(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nndm

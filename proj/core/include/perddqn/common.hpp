#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace perddqn {

/// Every stochastic routine in the library draws from this engine so that a
/// (config, seed) pair fully determines a run.
using Rng = std::mt19937_64;

/// Derives an independent stream from a base seed and a stream tag.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class BorderError : public Error {
 public:
  using Error::Error;
};

class PoseInObstacleError : public Error {
 public:
  using Error::Error;
};

class DivisibilityError : public Error {
 public:
  using Error::Error;
};

class SamplingExhaustedError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class LengthError : public FormatError {
 public:
  using FormatError::FormatError;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class StaleIndexError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration key or value. The CLI maps this to a usage error.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace perddqn

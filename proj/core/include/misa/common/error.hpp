#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace misa {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not compose; carries the offending graph node.
class ShapeError : public Error {
 public:
  ShapeError(std::int64_t node, const std::string& what)
      : Error("node " + std::to_string(node) + ": " + what), node_(node) {}
  std::int64_t node() const noexcept { return node_; }

 private:
  std::int64_t node_;
};

// Malformed file contents. `offset` is the byte position where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(std::uint64_t offset, const std::string& what)
      : Error("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// NaN/Inf in a loss, a diverging estimator, a non-finite HMC start point.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace misa

#pragma once

#include <stdexcept>
#include <string>

namespace lltensor {

// Vector or matrix sizes do not agree with the tensor/matrix they are used with.
class DimensionError : public std::invalid_argument {
public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed input data (CSV, tensor text, model documents, stoplists).
class IngestError : public std::runtime_error {
public:
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

// Inputs that are well-formed but violate an operation's precondition.
class InvalidArgument : public std::invalid_argument {
public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace lltensor

#pragma once

#include <stdexcept>
#include <string>

namespace bevfuse {

// Mismatched dimensions, windows or parameters supplied by the caller.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on a single call was violated (out-of-bounds cell, shape mismatch).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed, truncated or version-mismatched input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bevfuse

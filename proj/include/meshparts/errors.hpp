#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace meshparts {

// Precondition or shape violation; maps to exit code 3 in the CLI.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Bad input data: unreadable files, mismatched meshes, unknown formats.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text input that failed to parse; carries the 1-based line number.
struct ParseError : DataError {
  ParseError(std::size_t line_number, const std::string& message)
      : DataError("line " + std::to_string(line_number) + ": " + message),
        line(line_number) {}
  std::size_t line;
};

// Non-finite values or diverging iterations; maps to exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace meshparts

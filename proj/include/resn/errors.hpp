#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace resn {

/// Argument outside the documented domain of an operation.
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mismatched vector/matrix lengths between collaborating values.
class shape_error : public std::invalid_argument {
 public:
  shape_error(const std::string& what, std::size_t expected, std::size_t actual)
      : std::invalid_argument(what + ": expected length " + std::to_string(expected) +
                              ", got " + std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unparsable input. `row` is 1-based and counts the header line as row 1
/// for CSV input; 0 when no row applies.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t row)
      : std::runtime_error(row > 0 ? what + " (row " + std::to_string(row) + ")" : what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Input that parsed but cannot be used (too few rows, etc).
class invalid_data : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (e.g. comparing unevaluated
/// individuals).
class contract_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace resn

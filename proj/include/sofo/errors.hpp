#pragma once

#include <stdexcept>
#include <string>

namespace sofo {

/// Precondition or contract breach by the caller.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dimension mismatch between tensors, series or horizons.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. The message names the file and, when known, the row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, long row, const std::string& what)
      : std::runtime_error(file + (row >= 0 ? ":" + std::to_string(row) : std::string()) +
                           ": " + what),
        file_(file),
        row_(row) {}

  const std::string& file() const noexcept { return file_; }
  long row() const noexcept { return row_; }

 private:
  std::string file_;
  long row_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : std::runtime_error("diverged at epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace sofo

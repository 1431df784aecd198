#ifndef MFL_ERROR_HPP
#define MFL_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfl {

enum class Errc {
  MissingColumn,
  NonNumericCell,
  NonPositiveValue,
  EmptyDataset,
  InvalidSize,
  NotAGrid,
  TooFewLevels,
  LengthMismatch,
  Empty,
  WeightMismatch,
  InvalidParams,
  DidNotConverge,
  TooFewSamples,
  EmptyGrid,
  AllTargetWeightZero,
  EnsembleEmpty,
  NonPositiveInput,
  InvalidRange,
  InvalidGrid,
  TooShort,
  InsufficientData,
  Io,
  Schema,
  InvalidConfig,
};

// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorCategory { Config, Data, Numerical };

const char* to_string(Errc code) noexcept;
ErrorCategory category(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Row numbers are 1-based data rows (the header is row 0).
class CsvError : public Error {
 public:
  CsvError(Errc code, std::size_t row, std::string column, const std::string& what)
      : Error(code, what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

}  // namespace mfl

#endif  // MFL_ERROR_HPP

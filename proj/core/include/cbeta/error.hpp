#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbeta {

enum class ErrorCode {
  // ingest
  MalformedRow,
  DuplicateDate,
  NonPositivePrice,
  NegativeLevel,
  EmptyUniverse,
  HttpError,
  RateLimited,
  // panel
  TooShort,
  InsufficientHistory,
  MissingBitcoin,
  CoverageGap,
  // factors
  EmptyDate,
  TooFewCoins,
  EmptyLeg,
  EmptyFactorSet,
  // econometrics
  RankDeficient,
  TooFewObservations,
  SeriesTooShort,
  TooFewDates,
  // condbeta
  MissingCharacteristic,
  InsufficientObservations,
  // pipeline
  NoEligibleDates,
  // synth / config
  InvalidConfig,
  SpecMismatch,
  Io,
};

// Broad failure class; the CLI maps these to exit codes 2/3/4.
enum class ErrorCategory { Validation, Io, Estimation };

const char* to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

  // Column indices involved in a detected dependency (RankDeficient only).
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }
  Error& with_columns(std::vector<std::size_t> cols) {
    columns_ = std::move(cols);
    return *this;
  }

  // Returns a copy whose message is prefixed with `context: `.
  Error with_context(const std::string& context) const;

 private:
  ErrorCode code_;
  std::vector<std::size_t> columns_;
};

}  // namespace cbeta

#include "cbeta/error.hpp"

namespace cbeta {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::NegativeLevel: return "NegativeLevel";
    case ErrorCode::EmptyUniverse: return "EmptyUniverse";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::MissingBitcoin: return "MissingBitcoin";
    case ErrorCode::CoverageGap: return "CoverageGap";
    case ErrorCode::EmptyDate: return "EmptyDate";
    case ErrorCode::TooFewCoins: return "TooFewCoins";
    case ErrorCode::EmptyLeg: return "EmptyLeg";
    case ErrorCode::EmptyFactorSet: return "EmptyFactorSet";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::TooFewDates: return "TooFewDates";
    case ErrorCode::MissingCharacteristic: return "MissingCharacteristic";
    case ErrorCode::InsufficientObservations: return "InsufficientObservations";
    case ErrorCode::NoEligibleDates: return "NoEligibleDates";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::HttpError:
    case ErrorCode::RateLimited:
    case ErrorCode::Io:
      return ErrorCategory::Io;
    case ErrorCode::EmptyDate:
    case ErrorCode::TooFewCoins:
    case ErrorCode::EmptyLeg:
    case ErrorCode::EmptyFactorSet:
    case ErrorCode::RankDeficient:
    case ErrorCode::TooFewObservations:
    case ErrorCode::SeriesTooShort:
    case ErrorCode::TooFewDates:
    case ErrorCode::MissingCharacteristic:
    case ErrorCode::InsufficientObservations:
    case ErrorCode::NoEligibleDates:
      return ErrorCategory::Estimation;
    default:
      return ErrorCategory::Validation;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error Error::with_context(const std::string& context) const {
  // Re-derive the bare message so the code prefix is not duplicated.
  std::string msg = what();
  const std::string prefix = std::string(to_string(code_)) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  Error out(code_, context + ": " + msg);
  out.columns_ = columns_;
  return out;
}

}  // namespace cbeta

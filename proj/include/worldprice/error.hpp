#ifndef WORLDPRICE_ERROR_HPP
#define WORLDPRICE_ERROR_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace worldprice {

enum class ErrorCode {
  // panel construction / ingestion
  EmptyPanel,
  DuplicateCell,
  NegativeValue,
  NonFiniteValue,
  ZeroTotalQuantity,
  UnpricedQuantity,
  ParseError,
  // operators
  DisconnectedPanel,
  DegenerateWeights,
  DegenerateExposure,
  InfeasibleCost,
  ToleranceUnreachable,
  IncompletePanel,
  // diagnostics
  ZeroSystemCost,
  UnknownProduct,
  NoMaskedCells,
  ProductMismatch,
  // scenarios
  BadParams,
  IdentifiabilityUnreachable,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyPanel: return "EmptyPanel";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ZeroTotalQuantity: return "ZeroTotalQuantity";
    case ErrorCode::UnpricedQuantity: return "UnpricedQuantity";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DisconnectedPanel: return "DisconnectedPanel";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::DegenerateExposure: return "DegenerateExposure";
    case ErrorCode::InfeasibleCost: return "InfeasibleCost";
    case ErrorCode::ToleranceUnreachable: return "ToleranceUnreachable";
    case ErrorCode::IncompletePanel: return "IncompletePanel";
    case ErrorCode::ZeroSystemCost: return "ZeroSystemCost";
    case ErrorCode::UnknownProduct: return "UnknownProduct";
    case ErrorCode::NoMaskedCells: return "NoMaskedCells";
    case ErrorCode::ProductMismatch: return "ProductMismatch";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::IdentifiabilityUnreachable: return "IdentifiabilityUnreachable";
  }
  return "Unknown";
}

/// Exception carrying a stable error code. Some codes attach a numeric
/// payload (e.g. the limiting slack for ToleranceUnreachable, the gap for
/// InfeasibleCost).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<double> value = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<double> value() const noexcept { return value_; }
  /// Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::optional<double> value_;
};

}  // namespace worldprice

#endif  // WORLDPRICE_ERROR_HPP

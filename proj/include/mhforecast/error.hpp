#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mhf {

enum class Errc {
  // data
  missing_column,
  timestamp_disorder,
  timestamp_gap,
  empty_file,
  parse_error,
  all_columns_dropped,
  leading_gap_unfillable,
  empty_split,
  constant_column,
  shape_mismatch,
  series_too_short,
  // metaheuristics
  dimension_mismatch,
  empty_population,
  invalid_config,
  // arima
  seed_mismatch,
  degenerate_fit,
  // neural
  non_finite_loss,
  // evaluation
  empty_input,
  all_excluded,
  // harness
  io_error,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::missing_column: return "MissingColumn";
    case Errc::timestamp_disorder: return "TimestampDisorder";
    case Errc::timestamp_gap: return "TimestampGap";
    case Errc::empty_file: return "EmptyFile";
    case Errc::parse_error: return "ParseError";
    case Errc::all_columns_dropped: return "AllColumnsDropped";
    case Errc::leading_gap_unfillable: return "LeadingGapUnfillable";
    case Errc::empty_split: return "EmptySplit";
    case Errc::constant_column: return "ConstantColumn";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::series_too_short: return "SeriesTooShort";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::empty_population: return "EmptyPopulation";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::seed_mismatch: return "SeedMismatch";
    case Errc::degenerate_fit: return "DegenerateFit";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::empty_input: return "Empty";
    case Errc::all_excluded: return "AllExcluded";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

  /// Data-stage failures map to CLI exit code 2.
  bool is_data_error() const noexcept {
    switch (code_) {
      case Errc::missing_column:
      case Errc::timestamp_disorder:
      case Errc::timestamp_gap:
      case Errc::empty_file:
      case Errc::parse_error:
      case Errc::all_columns_dropped:
      case Errc::leading_gap_unfillable:
      case Errc::empty_split:
      case Errc::constant_column:
      case Errc::series_too_short:
        return true;
      default:
        return false;
    }
  }

 private:
  Errc code_;
};

}  // namespace mhf

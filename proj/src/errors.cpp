#include "hdinfer/errors.hpp"

namespace hdinfer {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ok: return "Ok";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::constant_column: return "ConstantColumn";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::underdetermined: return "Underdetermined";
    case ErrorCode::degenerate_variance: return "DegenerateVariance";
    case ErrorCode::saturated_fit: return "SaturatedFit";
    case ErrorCode::degenerate_tau: return "DegenerateTau";
    case ErrorCode::no_fixed_point: return "NoFixedPoint";
    case ErrorCode::empty_group: return "EmptyGroup";
    case ErrorCode::group_mismatch: return "GroupMismatch";
    case ErrorCode::group_out_of_range: return "GroupOutOfRange";
    case ErrorCode::invalid_alpha: return "InvalidAlpha";
    case ErrorCode::degenerate_split: return "DegenerateSplit";
    case ErrorCode::empty_truth: return "EmptyTruth";
    case ErrorCode::non_positive_weight: return "NonPositiveWeight";
    case ErrorCode::not_positive_definite: return "NotPositiveDefinite";
    case ErrorCode::invalid_scenario: return "InvalidScenario";
    case ErrorCode::input_not_found: return "InputNotFound";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace hdinfer

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsm {

enum class Errc {
  kWindowTooSmall,
  kBaselineOutsideWindow,
  kNonContiguousBaseline,
  kInvalidAppliance,
  kInvalidHousehold,
  kDimensionMismatch,
  kDurationViolation,
  kInfeasibleSchedule,
  kNoFeasibleSchedule,
  kInvalidBudget,
  kNotRadial,
  kBadImpedance,
  kInvalidInjection,
  kVoltageCollapse,
  kUnconvergedInput,
  kTemplateUnknown,
  kInvalidSynthConfig,
  kInvalidScenario,
  kIncomparableInputs,
  kConfigInvalid,
  kOutputUnwritable,
};

std::string_view to_string(Errc code);

/// Every recoverable failure in the library is reported as an Error carrying
/// one of the codes above; the message adds context (appliance id, slot, key).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dsm

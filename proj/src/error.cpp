#include "dsm/error.hpp"

namespace dsm {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kWindowTooSmall: return "WindowTooSmall";
    case Errc::kBaselineOutsideWindow: return "BaselineOutsideWindow";
    case Errc::kNonContiguousBaseline: return "NonContiguousBaseline";
    case Errc::kInvalidAppliance: return "InvalidAppliance";
    case Errc::kInvalidHousehold: return "InvalidHousehold";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kDurationViolation: return "DurationViolation";
    case Errc::kInfeasibleSchedule: return "InfeasibleSchedule";
    case Errc::kNoFeasibleSchedule: return "NoFeasibleSchedule";
    case Errc::kInvalidBudget: return "InvalidBudget";
    case Errc::kNotRadial: return "NotRadial";
    case Errc::kBadImpedance: return "BadImpedance";
    case Errc::kInvalidInjection: return "InvalidInjection";
    case Errc::kVoltageCollapse: return "VoltageCollapse";
    case Errc::kUnconvergedInput: return "UnconvergedInput";
    case Errc::kTemplateUnknown: return "TemplateUnknown";
    case Errc::kInvalidSynthConfig: return "InvalidSynthConfig";
    case Errc::kInvalidScenario: return "InvalidScenario";
    case Errc::kIncomparableInputs: return "IncomparableInputs";
    case Errc::kConfigInvalid: return "ConfigInvalid";
    case Errc::kOutputUnwritable: return "OutputUnwritable";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace dsm

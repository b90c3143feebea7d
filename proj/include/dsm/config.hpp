#pragma once

#include <filesystem>
#include <string>

#include "dsm/feeder.hpp"
#include "dsm/scenario.hpp"
#include "dsm/synth.hpp"

namespace dsm {

/// Everything one batch run needs. Built from a JSON document of the form
///
///   { "synth": {...}, "catalog": "default" | "path.json",
///     "feeder": "default31" | {...}, "grid": {...}, "solver": {...},
///     "power_flow": {...}, "output_dir": "out" }
///
/// Every section and key is optional; unknown keys are rejected. Times are
/// "HH:MM" labels, feeder buses are 1-based with bus 1 the substation.
struct RunConfig {
  SynthConfig synth;
  std::string catalog_source = "default";
  ApplianceCatalog catalog = default_catalog();
  std::string feeder_source = "default31";
  FeederSpec feeder = default_feeder_spec();
  GridSpec grid;
  SolveBudget budget;
  PowerFlowOptions power_flow;
  std::string output_dir = "out";

  ScenarioInputs inputs() const;
};

/// Parses and validates a configuration document. Relative catalog paths are
/// resolved against `base_dir`. Throws ConfigInvalid naming the offending key.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});

/// Throws ConfigInvalid naming the path when it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

ApplianceCatalog parse_catalog(const std::string& json_text);
ApplianceCatalog load_catalog(const std::filesystem::path& path);
std::string catalog_to_json(const ApplianceCatalog& catalog);

}  // namespace dsm

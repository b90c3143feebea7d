#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dsm/scenario.hpp"

namespace dsm {

/// Fixed decimal places used in every CSV.
inline constexpr int kMoneyDecimals = 4;
inline constexpr int kPowerDecimals = 6;
inline constexpr int kVoltageDecimals = 6;

/// Fixed-point text of a value; negative zero prints as zero.
std::string format_fixed(double value, int decimals);
/// Shortest text that parses back to the same double.
std::string format_exact(double value);

/// Writes loads.csv, voltages.csv, flows.csv, losses.csv, costs.csv and
/// metrics.csv into `dir` (created if needed) and returns their paths. Slots
/// are labelled "HH:MM"; households, buses and branches use 1-based numbers.
/// Throws OutputUnwritable.
std::vector<std::filesystem::path> emit_reports(const ScenarioResult& result,
                                                const std::filesystem::path& dir);

/// One row per scenario with its headline metrics.
std::filesystem::path write_summary(std::span<const ScenarioResult> results,
                                    const std::filesystem::path& dir);

std::filesystem::path write_trends(std::span<const TrendCheck> checks,
                                   const std::filesystem::path& dir);

/// Minimal CSV reader for the files above: header row plus data rows, fields
/// split on commas (no quoting is ever emitted).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dsm

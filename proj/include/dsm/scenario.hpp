#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsm/feeder.hpp"
#include "dsm/model.hpp"
#include "dsm/scheduler.hpp"
#include "dsm/synth.hpp"

namespace dsm {

enum class SolverKind { kExact, kHeuristic };

std::string to_string(SolverKind kind);
/// Accepts "exact" or "heuristic"; throws ConfigInvalid otherwise.
SolverKind parse_solver(const std::string& text);

/// One experiment cell.
struct ScenarioSpec {
  int participation = 0;       // first N smart homes in layout order
  double penalty_price = 0.0;  // $/kWh
  bool pv_enabled = false;
  /// false keeps every home on its original schedule (PV still attached to
  /// the first `participation` homes when enabled).
  bool dsm = true;
  SolverKind solver = SolverKind::kExact;
  std::uint64_t seed = 0;

  /// Throws InvalidScenario.
  void validate(int smart_homes = 16) const;
  /// Directory-friendly label such as "p16_pp5_pvon" (penalty in cents).
  std::string name() const;
};

/// Everything shared by the cells of one grid.
struct ScenarioInputs {
  Community community;
  PriceProfile price;
  PVProfile pv;
  SolveBudget budget;
  PowerFlowOptions power_flow;

  static ScenarioInputs synthesize(const SynthConfig& config);
  /// FNV-1a over households, feeder, price and PV; equal inputs hash equal.
  std::uint64_t fingerprint() const;
};

struct HouseholdOutcome {
  int household = 0;
  int bus = 0;
  bool participating = false;
  bool pv = false;
  Schedule schedule;
  CostBreakdown cost;
  double baseline_objective = 0.0;  // cost of the original schedule
  SolveStatus status = SolveStatus::kHeuristic;
  long nodes = 0;
  Series gross_kw;
  Series billable_kw;
};

struct ScenarioMetrics {
  std::optional<double> pv_utilization;
  double end_voltage_variance = 0.0;
  double end_voltage_max_deviation_pu = 0.0;
  double min_voltage_pu = 1.0;
  double total_loss_kwh = 0.0;
  double peak_window_loss_kwh = 0.0;
  double peak_community_kw = 0.0;
  double max_head_reverse_kw = 0.0;
  std::vector<ReverseFlowEvent> reverse_flow;
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<HouseholdOutcome> households;
  Series community_gross_kw;
  Series community_net_kw;  // physical, PV netted without clipping
  std::vector<PowerFlowResult> flows;
  VoltageMetrics voltage;
  ScenarioMetrics metrics;
  std::uint64_t input_fingerprint = 0;
};

/// Loss accounting window, 17:00 to 20:00.
inline constexpr int kPeakWindowStart = 34;
inline constexpr int kPeakWindowEnd = 40;

/// Onsite-consumed PV over generated PV, sum_h sum_t min(gross_h, pv) /
/// (N * sum_t pv), for the given PV homes. Empty when nothing is generated.
std::optional<double> pv_utilization(std::span<const Series> pv_home_gross_kw, const PVProfile& pv);

ScenarioResult run_scenario(const ScenarioSpec& spec, const ScenarioInputs& inputs,
                            int threads = 1);

struct GridSpec {
  std::vector<int> participation{0, 4, 8, 16};
  std::vector<double> penalty_prices{0.0, 0.05, 0.10};
  std::vector<bool> pv{false, true};
  /// Adds the 16-home PV run without DSM that the reverse-flow trend needs.
  bool pv_reference = true;
  SolverKind solver = SolverKind::kExact;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<ScenarioSpec> cells() const;
};

/// Runs every cell. A household's schedule depends only on its own data, the
/// penalty price and its PV flag, so each distinct solve runs once and is
/// shared between cells; solves are spread over `threads` workers and the
/// output does not depend on the thread count.
std::vector<ScenarioResult> run_grid(const GridSpec& grid, const ScenarioInputs& inputs,
                                     int threads = 1);

/// Worker count from DSMSIM_THREADS, else the hardware concurrency.
int default_thread_count();

struct TrendCheck {
  std::string id;
  std::string description;
  bool passed = false;
  std::string detail;
};

/// T1 voltage variance non-increasing in participation (penalty 0, per PV
/// state); T2 peak-window loss of the 16-home run below the reference run;
/// T3 PV utilization non-increasing in the penalty price; T4 head-branch
/// reverse flow with DSM no larger than without. Checks whose cells are
/// missing are omitted. Throws IncomparableInputs.
std::vector<TrendCheck> compare_scenarios(std::span<const ScenarioResult> results);

}  // namespace dsm

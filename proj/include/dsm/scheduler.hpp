#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsm/model.hpp"

namespace dsm {

/// Daily cost of one household schedule. `shift_slots` holds the time-shift
/// distance of each appliance, in slots.
struct CostBreakdown {
  double electricity_cost = 0.0;
  double penalty_cost = 0.0;
  std::vector<int> shift_slots;

  double objective() const { return electricity_cost + penalty_cost; }
  int total_shift() const;
};

struct SolveBudget {
  long max_nodes = 60000;
  double time_limit_s = 30.0;
  int restarts = 4;

  void validate() const;
};

/// 0.5 h * sum_t load(t) * price(t), in dollars.
double electricity_cost(std::span<const double> billable_kw, const PriceProfile& price);

/// Shift distance of each appliance (sorted on-slot vectors paired index by
/// index) and the resulting penalty 0.5 * pi_p * sum_a dT_a * r_a. The
/// electricity component of the result is zero.
CostBreakdown shift_penalty(const Schedule& next, const Schedule& old, const Household& household,
                            double penalty_price);

struct Violation {
  enum class Kind { kMaxDemand, kDuration, kWindow, kContiguity };
  Kind kind;
  int appliance = -1;  // -1 for household-level violations
  int slot = -1;
  double value = 0.0;

  std::string describe() const;
};

struct FeasibilityReport {
  std::vector<Violation> violations;

  bool feasible() const { return violations.empty(); }
  explicit operator bool() const { return feasible(); }
};

/// Checks the maximum-demand cap (base load included), appliance durations,
/// allowed windows, and contiguity of uninterruptible appliances.
FeasibilityReport check_feasibility(const Schedule& schedule, const Household& household);

/// Objective of a feasible schedule against the household's own baseline.
/// Throws InfeasibleSchedule otherwise.
CostBreakdown total_cost(const Schedule& schedule, const Household& household,
                         const PriceProfile& price, const PVProfile& pv, double penalty_price);

enum class SolveStatus { kOptimal, kBudgetExhausted, kHeuristic };

struct SolveResult {
  Schedule schedule;
  CostBreakdown cost;
  SolveStatus status = SolveStatus::kHeuristic;
  long nodes = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

/// Branch-and-bound over appliance placements. Appliances are branched in
/// descending rated energy; interruptible appliances branch one on-slot at a
/// time in ascending slot order, uninterruptible ones on their start slot.
/// The bound adds, for every unplaced appliance, its cheapest isolated
/// placement against the current partial load; the slot cost is convex in
/// load, so these isolated increments never overestimate the joint one.
///
/// The incumbent starts from the heuristic. When the node or time budget runs
/// out, the best incumbent is returned with status kBudgetExhausted. Throws
/// NoFeasibleSchedule when no placement respects the household's cap.
SolveResult optimize_exact(const Household& household, const PriceProfile& price,
                           const PVProfile& pv, double penalty_price, const SolveBudget& budget);

/// Greedy construction (appliances in descending rated energy, each placed at
/// its cheapest slots against the load placed so far) followed by
/// first-improvement local search over single-appliance relocations and
/// pairwise re-placements. Runs from the baseline, from the default order, and
/// from `budget.restarts` seeded random orders; the best result wins, and it is
/// never worse than the baseline.
SolveResult optimize_heuristic(const Household& household, const PriceProfile& price,
                               const PVProfile& pv, double penalty_price,
                               const SolveBudget& budget, std::uint64_t seed);

}  // namespace dsm

#pragma once

// Internal placement engine shared by the heuristic and the exact solver.

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dsm/model.hpp"

namespace dsm::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kCostTol = 1e-12;
inline constexpr double kFlatTol = 1e-9;
inline constexpr double kPowerTol = 1e-9;

/// Lexicographic ranking of candidate schedules: cost first, then the
/// flatness of the household net load, then total slot shift.
struct Key {
  double cost = 0.0;
  double flat = 0.0;
  int shift = 0;

  Key& operator+=(const Key& o) {
    cost += o.cost;
    flat += o.flat;
    shift += o.shift;
    return *this;
  }
};

inline Key operator+(Key a, const Key& b) { return a += b; }

/// Strict "a ranks before b" with tolerances on the real-valued parts.
bool better(const Key& a, const Key& b);

/// One household's optimization instance with the PV flag already applied.
class Problem {
 public:
  Problem(const Household& household, const PriceProfile& price, const PVProfile& pv,
          double penalty_price);

  const Household& household() const { return *household_; }
  int slots() const { return slots_; }
  int appliances() const { return static_cast<int>(household_->appliances.size()); }
  double pv(int t) const { return pv_[t]; }
  double price(int t) const { return price_[t]; }
  double penalty_price() const { return penalty_price_; }

  double slot_cost(int t, double load) const;
  double marginal(int t, double load, double power) const {
    return slot_cost(t, load + power) - slot_cost(t, load);
  }
  bool fits(double load, double power) const {
    return load + power <= household_->md_kw + kPowerTol;
  }
  double chunk_penalty(int appliance, int chunk, int t) const;

  /// Full ranking key of a schedule described by its load and placements.
  Key evaluate(std::span<const double> load,
               const std::vector<std::vector<int>>& placements) const;

 private:
  const Household* household_;
  int slots_;
  Series price_;
  Series pv_;
  double penalty_price_;
};

struct Placement {
  std::vector<int> slots;
  Key key;
};

/// Best placement of one appliance against the load of everything else
/// (`load` must exclude the appliance). Exact for a single appliance: the
/// marginal cost of each slot is independent of the appliance's other slots.
/// Returns nullopt when no placement respects the maximum-demand cap.
std::optional<Placement> best_placement(const Problem& problem, int appliance,
                                        std::span<const double> load);

/// Cost-only minimum of best_placement (kInf if none is feasible).
double isolated_min_cost(const Problem& problem, int appliance, std::span<const double> load);

/// Ranking key contribution of an existing placement against `load`
/// (which excludes the appliance).
Key placement_key(const Problem& problem, int appliance, std::span<const int> slots,
                  std::span<const double> load);

/// completion[k][t]: minimal cost of chunks k..D-1 of an interruptible
/// appliance when chunk k sits at slot t (kInf where impossible).
std::vector<std::vector<double>> completion_table(const Problem& problem, int appliance,
                                                  std::span<const double> load);

/// Electricity cost of pouring `power_slots` (sum of rated power over the
/// chunks still to place) into the cheapest headroom under the cap, as if it
/// were divisible and free of windows. A lower bound on the cost increment of
/// placing those chunks.
double fluid_min_cost(const Problem& problem, std::span<const double> load, double power_slots);

/// Tighter version of fluid_min_cost for appliances whose ratings share a
/// common quantum. In any slot the remaining appliances can add only a subset
/// sum of their ratings, so the zero-cost PV headroom is cut down to the
/// largest reachable subset sum, and the step past it is charged along the
/// convex hull of the reachable points. Without a quantum it falls back to
/// the fluid bound.
class PackingBound {
 public:
  /// `order` lists appliances in branching order; suffix l of that order is
  /// what remains at search level l.
  PackingBound(const Problem& problem, const std::vector<int>& order);

  double min_cost(int level, std::span<const double> load, double power_slots) const;

 private:
  const Problem* problem_;
  double quantum_ = 0.0;
  std::vector<std::vector<bool>> reachable_;  // per level, index = units
};

/// Cost of each contiguous start (index = start slot; kInf where impossible).
std::vector<double> block_costs(const Problem& problem, int appliance,
                                std::span<const double> load);

}  // namespace dsm::detail

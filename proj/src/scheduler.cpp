#include "dsm/scheduler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

#include "dsm/error.hpp"
#include "dsm/random.hpp"
#include "placement.hpp"

namespace dsm {

using detail::Key;
using detail::Problem;
using detail::kCostTol;
using detail::kInf;

int CostBreakdown::total_shift() const {
  return std::accumulate(shift_slots.begin(), shift_slots.end(), 0);
}

void SolveBudget::validate() const {
  if (max_nodes <= 0 || !(time_limit_s > 0.0) || restarts <= 0) {
    throw Error(Errc::kInvalidBudget, "node cap, time limit and restarts must all be positive");
  }
}

double electricity_cost(std::span<const double> billable_kw, const PriceProfile& price) {
  if (billable_kw.size() != price.price_per_kwh.size()) {
    throw Error(Errc::kDimensionMismatch, "load has " + std::to_string(billable_kw.size()) +
                                              " slots, price profile has " +
                                              std::to_string(price.price_per_kwh.size()));
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < billable_kw.size(); ++t) sum += billable_kw[t] * price.price_per_kwh[t];
  return TimeGrid::kSlotHours * sum;
}

CostBreakdown shift_penalty(const Schedule& next, const Schedule& old, const Household& h,
                            double penalty_price) {
  if (next.appliance_count() != h.appliances.size() ||
      old.appliance_count() != h.appliances.size() || next.slot_count() != old.slot_count()) {
    throw Error(Errc::kDimensionMismatch, "schedules do not match the household");
  }
  CostBreakdown out;
  for (std::size_t a = 0; a < h.appliances.size(); ++a) {
    const auto& app = h.appliances[a];
    const auto now = next.on_slots(a);
    const auto before = old.on_slots(a);
    if (static_cast<int>(now.size()) != app.duration_slots ||
        static_cast<int>(before.size()) != app.duration_slots) {
      throw Error(Errc::kDurationViolation,
                  app.id + ": expected " + std::to_string(app.duration_slots) +
                      " on-slots, got " + std::to_string(now.size()) + " and " +
                      std::to_string(before.size()));
    }
    int shift = 0;
    for (std::size_t k = 0; k < now.size(); ++k) shift += std::abs(now[k] - before[k]);
    out.shift_slots.push_back(shift);
    out.penalty_cost += shift * app.rated_power_kw;
  }
  out.penalty_cost *= 0.5 * penalty_price;
  return out;
}

std::string Violation::describe() const {
  switch (kind) {
    case Kind::kMaxDemand:
      return "maximum demand exceeded at slot " + std::to_string(slot) + " (" +
             std::to_string(value) + " kW)";
    case Kind::kDuration:
      return "appliance " + std::to_string(appliance) + " runs " +
             std::to_string(static_cast<int>(value)) + " slots";
    case Kind::kWindow:
      return "appliance " + std::to_string(appliance) + " on outside its window at slot " +
             std::to_string(slot);
    case Kind::kContiguity:
      return "uninterruptible appliance " + std::to_string(appliance) + " split at slot " +
             std::to_string(slot);
  }
  return "unknown violation";
}

FeasibilityReport check_feasibility(const Schedule& s, const Household& h) {
  const Series load = aggregate_power(s, h);
  FeasibilityReport report;
  for (std::size_t t = 0; t < load.size(); ++t) {
    if (load[t] > h.md_kw + detail::kPowerTol) {
      report.violations.push_back(
          {Violation::Kind::kMaxDemand, -1, static_cast<int>(t), load[t]});
    }
  }
  for (std::size_t a = 0; a < h.appliances.size(); ++a) {
    const auto& app = h.appliances[a];
    const auto slots = s.on_slots(a);
    const int id = static_cast<int>(a);
    if (static_cast<int>(slots.size()) != app.duration_slots) {
      report.violations.push_back(
          {Violation::Kind::kDuration, id, -1, static_cast<double>(slots.size())});
    }
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (slots[k] < app.window_start || slots[k] > app.window_end) {
        report.violations.push_back({Violation::Kind::kWindow, id, slots[k], 0.0});
      }
      if (!app.interruptible && k > 0 && slots[k] != slots[k - 1] + 1) {
        report.violations.push_back({Violation::Kind::kContiguity, id, slots[k], 0.0});
      }
    }
  }
  return report;
}

CostBreakdown total_cost(const Schedule& s, const Household& h, const PriceProfile& price,
                         const PVProfile& pv, double penalty_price) {
  const auto report = check_feasibility(s, h);
  if (!report) {
    throw Error(Errc::kInfeasibleSchedule,
                "household " + std::to_string(h.index) + ": " +
                    report.violations.front().describe());
  }
  CostBreakdown out = shift_penalty(s, Schedule::baseline(h), h, penalty_price);
  const Series gross = aggregate_power(s, h);
  out.electricity_cost = electricity_cost(net_billable_load(gross, pv, h.pv_installed), price);
  return out;
}

namespace {

struct State {
  std::vector<std::vector<int>> placements;
  Series load;
};

void add(const Problem& p, State& st, int a, int sign) {
  const double r = p.household().appliances[static_cast<std::size_t>(a)].rated_power_kw;
  for (int t : st.placements[static_cast<std::size_t>(a)]) st.load[static_cast<std::size_t>(t)] += sign * r;
}

std::vector<int> energy_order(const Household& h) {
  std::vector<int> order(h.appliances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    const auto& a = h.appliances[static_cast<std::size_t>(x)];
    const auto& b = h.appliances[static_cast<std::size_t>(y)];
    return a.rated_power_kw * a.duration_slots > b.rated_power_kw * b.duration_slots;
  });
  return order;
}

Schedule to_schedule(const Household& h, const std::vector<std::vector<int>>& placements) {
  Schedule s(h.appliances.size(), h.base_load_kw.size());
  for (std::size_t a = 0; a < placements.size(); ++a) {
    for (int t : placements[a]) s.set(a, static_cast<std::size_t>(t), true);
  }
  return s;
}

State baseline_state(const Household& h) {
  State st;
  st.load = h.base_load_kw;
  for (const auto& app : h.appliances) {
    st.placements.push_back(app.baseline_on_slots);
    for (int t : app.baseline_on_slots) st.load[static_cast<std::size_t>(t)] += app.rated_power_kw;
  }
  return st;
}

bool within_cap(const Household& h, const Series& load) {
  return std::all_of(load.begin(), load.end(),
                     [&](double v) { return v <= h.md_kw + detail::kPowerTol; });
}

std::optional<State> greedy(const Problem& p, const std::vector<int>& order) {
  const Household& h = p.household();
  State st;
  st.load = h.base_load_kw;
  st.placements.resize(h.appliances.size());
  for (int a : order) {
    auto best = detail::best_placement(p, a, st.load);
    if (!best) return std::nullopt;
    st.placements[static_cast<std::size_t>(a)] = std::move(best->slots);
    add(p, st, a, +1);
  }
  return st;
}

bool relocate_pass(const Problem& p, State& st, const std::vector<int>& order) {
  bool improved = false;
  for (int a : order) {
    add(p, st, a, -1);
    const Key current = detail::placement_key(p, a, st.placements[static_cast<std::size_t>(a)], st.load);
    auto best = detail::best_placement(p, a, st.load);
    if (best && detail::better(best->key, current)) {
      st.placements[static_cast<std::size_t>(a)] = std::move(best->slots);
      improved = true;
    }
    add(p, st, a, +1);
  }
  return improved;
}

bool reinsert(const Problem& p, State& st, int first, int second) {
  for (int a : {first, second}) {
    auto best = detail::best_placement(p, a, st.load);
    if (!best) return false;
    st.placements[static_cast<std::size_t>(a)] = std::move(best->slots);
    add(p, st, a, +1);
  }
  return true;
}

// First improving pairwise re-placement, if any.
bool pair_pass(const Problem& p, State& st, const std::vector<int>& order) {
  const Key current = p.evaluate(st.load, st.placements);
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const int a = order[i];
      const int b = order[j];
      for (auto [first, second] : {std::pair{a, b}, std::pair{b, a}}) {
        State trial = st;
        add(p, trial, a, -1);
        add(p, trial, b, -1);
        if (!reinsert(p, trial, first, second)) continue;
        if (detail::better(p.evaluate(trial.load, trial.placements), current)) {
          st = std::move(trial);
          return true;
        }
      }
    }
  }
  return false;
}

void local_search(const Problem& p, State& st, const std::vector<int>& order) {
  constexpr int kMaxRounds = 500;
  for (int round = 0; round < kMaxRounds; ++round) {
    if (relocate_pass(p, st, order)) continue;
    if (!pair_pass(p, st, order)) break;
  }
}

struct Candidate {
  State state;
  Key key;
};

std::optional<Candidate> run_heuristic(const Problem& p, const SolveBudget& budget,
                                       std::uint64_t seed) {
  const Household& h = p.household();
  const std::vector<int> order = energy_order(h);
  std::optional<Candidate> best;
  auto consider = [&](std::optional<State> st) {
    if (!st) return;
    local_search(p, *st, order);
    Key key = p.evaluate(st->load, st->placements);
    if (!best || detail::better(key, best->key)) best = Candidate{std::move(*st), key};
  };

  State base = baseline_state(h);
  if (within_cap(h, base.load)) consider(std::move(base));
  consider(greedy(p, order));
  for (int r = 1; r <= budget.restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::vector<int> shuffled = order;
    rng.shuffle(shuffled);
    consider(greedy(p, shuffled));
  }
  return best;
}

SolveResult finish(const Household& h, const PriceProfile& price, const PVProfile& pv,
                   double penalty_price, const std::vector<std::vector<int>>& placements,
                   SolveStatus status, long nodes) {
  SolveResult out;
  out.schedule = to_schedule(h, placements);
  out.cost = total_cost(out.schedule, h, price, pv, penalty_price);
  out.status = status;
  out.nodes = nodes;
  return out;
}

class BranchAndBound {
 public:
  BranchAndBound(const Problem& p, const SolveBudget& budget)
      : p_(p),
        budget_(budget),
        order_(energy_order(p.household())),
        packing_(p, order_),
        deadline_(std::chrono::steady_clock::now() +
                  std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(budget.time_limit_s))) {
    const Household& h = p.household();
    state_.load = h.base_load_kw;
    state_.placements.resize(h.appliances.size());
    for (int t = 0; t < p.slots(); ++t) partial_ += p.slot_cost(t, state_.load[static_cast<std::size_t>(t)]);
    // energy_after_[l]: rated power summed over every chunk of levels l onward.
    energy_after_.assign(order_.size() + 1, 0.0);
    for (std::size_t l = order_.size(); l-- > 0;) {
      const Appliance& app = h.appliances[static_cast<std::size_t>(order_[l])];
      energy_after_[l] = energy_after_[l + 1] + app.rated_power_kw * app.duration_slots;
    }
  }

  void seed_incumbent(const State& st, double cost) {
    best_cost_ = cost;
    best_ = st.placements;
  }

  void run() { search(0); }

  bool aborted() const { return aborted_; }
  long nodes() const { return nodes_; }
  bool has_incumbent() const { return !std::isinf(best_cost_); }
  const std::vector<std::vector<int>>& incumbent() const { return best_; }

 private:
  bool prunable(double bound) const { return bound >= best_cost_ - kCostTol; }

  bool tick() {
    ++nodes_;
    if (nodes_ > budget_.max_nodes) aborted_ = true;
    if ((nodes_ & 1023) == 0 && std::chrono::steady_clock::now() > deadline_) aborted_ = true;
    return !aborted_;
  }

  void place_chunk(int a, int k, int t) {
    const double r = p_.household().appliances[static_cast<std::size_t>(a)].rated_power_kw;
    double& load = state_.load[static_cast<std::size_t>(t)];
    const double delta = p_.marginal(t, load, r) + p_.chunk_penalty(a, k, t);
    undo_.push_back(delta);
    partial_ += delta;
    load += r;
    state_.placements[static_cast<std::size_t>(a)].push_back(t);
  }

  void remove_chunk(int a, int t) {
    const double r = p_.household().appliances[static_cast<std::size_t>(a)].rated_power_kw;
    state_.load[static_cast<std::size_t>(t)] -= r;
    partial_ -= undo_.back();
    undo_.pop_back();
    state_.placements[static_cast<std::size_t>(a)].pop_back();
  }

  void search(std::size_t level) {
    if (aborted_) return;
    if (level == order_.size()) {
      const double cost = p_.evaluate(state_.load, state_.placements).cost;
      if (cost < best_cost_ - kCostTol) {
        best_cost_ = cost;
        best_ = state_.placements;
      }
      return;
    }
    if (prunable(partial_ + packing_.min_cost(static_cast<int>(level), state_.load, energy_after_[level]))) return;
    double rest = 0.0;
    for (std::size_t j = level + 1; j < order_.size(); ++j) {
      rest += detail::isolated_min_cost(p_, order_[j], state_.load);
      if (std::isinf(rest)) return;
    }
    const int a = order_[level];
    const Appliance& app = p_.household().appliances[static_cast<std::size_t>(a)];
    if (!app.interruptible) {
      const auto costs = detail::block_costs(p_, a, state_.load);
      std::vector<int> starts;
      for (int s = 0; s < p_.slots(); ++s) {
        if (!std::isinf(costs[static_cast<std::size_t>(s)])) starts.push_back(s);
      }
      std::stable_sort(starts.begin(), starts.end(), [&](int x, int y) {
        return costs[static_cast<std::size_t>(x)] < costs[static_cast<std::size_t>(y)];
      });
      for (int s : starts) {
        if (prunable(partial_ + costs[static_cast<std::size_t>(s)] + rest)) break;
        if (!tick()) return;
        for (int j = 0; j < app.duration_slots; ++j) place_chunk(a, j, s + j);
        search(level + 1);
        for (int j = app.duration_slots - 1; j >= 0; --j) remove_chunk(a, s + j);
        if (aborted_) return;
      }
      return;
    }
    const auto table = detail::completion_table(p_, a, state_.load);
    search_chunk(level, a, 0, -1, table, rest);
  }

  void search_chunk(std::size_t level, int a, int k, int prev,
                    const std::vector<std::vector<double>>& table, double rest) {
    const Appliance& app = p_.household().appliances[static_cast<std::size_t>(a)];
    if (k > 0) {
      const double pending = energy_after_[level + 1] + app.rated_power_kw * (app.duration_slots - k);
      if (prunable(partial_ + packing_.min_cost(static_cast<int>(level), state_.load, pending))) return;
    }
    const auto& row = table[static_cast<std::size_t>(k)];
    const int lo = std::max(prev + 1, app.window_start + k);
    const int hi = app.window_end - (app.duration_slots - 1 - k);
    std::vector<int> slots;
    for (int t = lo; t <= hi; ++t) {
      if (!std::isinf(row[static_cast<std::size_t>(t)])) slots.push_back(t);
    }
    std::stable_sort(slots.begin(), slots.end(), [&](int x, int y) {
      return row[static_cast<std::size_t>(x)] < row[static_cast<std::size_t>(y)];
    });
    // Chunks already placed for this appliance are part of partial_, and the
    // table entry covers chunk k onward.
    for (int t : slots) {
      if (prunable(partial_ + row[static_cast<std::size_t>(t)] + rest)) break;
      if (!tick()) return;
      place_chunk(a, k, t);
      if (k + 1 == app.duration_slots) {
        search(level + 1);
      } else {
        search_chunk(level, a, k + 1, t, table, rest);
      }
      remove_chunk(a, t);
      if (aborted_) return;
    }
  }

  const Problem& p_;
  SolveBudget budget_;
  std::vector<int> order_;
  detail::PackingBound packing_;
  std::chrono::steady_clock::time_point deadline_;
  State state_;
  std::vector<double> energy_after_;
  std::vector<double> undo_;
  double partial_ = 0.0;
  double best_cost_ = kInf;
  std::vector<std::vector<int>> best_;
  long nodes_ = 0;
  bool aborted_ = false;
};

}  // namespace

SolveResult optimize_heuristic(const Household& h, const PriceProfile& price, const PVProfile& pv,
                               double penalty_price, const SolveBudget& budget,
                               std::uint64_t seed) {
  budget.validate();
  const Problem p(h, price, pv, penalty_price);
  auto best = run_heuristic(p, budget, seed);
  if (!best) {
    throw Error(Errc::kNoFeasibleSchedule,
                "household " + std::to_string(h.index) + ": no placement fits the maximum demand");
  }
  return finish(h, price, pv, penalty_price, best->state.placements, SolveStatus::kHeuristic, 0);
}

SolveResult optimize_exact(const Household& h, const PriceProfile& price, const PVProfile& pv,
                           double penalty_price, const SolveBudget& budget) {
  budget.validate();
  const Problem p(h, price, pv, penalty_price);
  BranchAndBound bnb(p, budget);
  if (auto warm = run_heuristic(p, budget, 0)) bnb.seed_incumbent(warm->state, warm->key.cost);
  bnb.run();
  if (!bnb.has_incumbent()) {
    throw Error(Errc::kNoFeasibleSchedule,
                "household " + std::to_string(h.index) + ": no placement fits the maximum demand" +
                    (bnb.aborted() ? " within the search budget" : ""));
  }
  return finish(h, price, pv, penalty_price, bnb.incumbent(),
                bnb.aborted() ? SolveStatus::kBudgetExhausted : SolveStatus::kOptimal,
                bnb.nodes());
}

}  // namespace dsm

#include "placement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "dsm/error.hpp"

namespace dsm::detail {

bool better(const Key& a, const Key& b) {
  const bool a_inf = std::isinf(a.cost);
  const bool b_inf = std::isinf(b.cost);
  if (a_inf || b_inf) return !a_inf && b_inf;
  if (a.cost < b.cost - kCostTol) return true;
  if (a.cost > b.cost + kCostTol) return false;
  if (a.flat < b.flat - kFlatTol) return true;
  if (a.flat > b.flat + kFlatTol) return false;
  return a.shift < b.shift;
}

Problem::Problem(const Household& household, const PriceProfile& price, const PVProfile& pv,
                 double penalty_price)
    : household_(&household),
      slots_(household.slot_count()),
      price_(price.price_per_kwh),
      pv_(static_cast<std::size_t>(household.slot_count()), 0.0),
      penalty_price_(penalty_price) {
  validate_price(price, slots_);
  validate_pv(pv, slots_);
  if (!(penalty_price >= 0.0) || !std::isfinite(penalty_price)) {
    throw Error(Errc::kInvalidScenario, "penalty price must be finite and non-negative");
  }
  if (household.pv_installed) pv_ = pv.output_kw;
}

double Problem::slot_cost(int t, double load) const {
  return 0.5 * price_[t] * std::max(load - pv_[t], 0.0);
}

double Problem::chunk_penalty(int appliance, int chunk, int t) const {
  const Appliance& a = household_->appliances[appliance];
  return 0.5 * penalty_price_ * a.rated_power_kw *
         std::abs(t - a.baseline_on_slots[chunk]);
}

Key Problem::evaluate(std::span<const double> load,
                      const std::vector<std::vector<int>>& placements) const {
  Key key;
  for (int t = 0; t < slots_; ++t) {
    key.cost += slot_cost(t, load[t]);
    const double net = load[t] - pv_[t];
    key.flat += net * net;
  }
  for (std::size_t a = 0; a < placements.size(); ++a) {
    const auto& slots = placements[a];
    for (std::size_t k = 0; k < slots.size(); ++k) {
      key.cost += chunk_penalty(static_cast<int>(a), static_cast<int>(k), slots[k]);
      key.shift += std::abs(slots[k] - household_->appliances[a].baseline_on_slots[k]);
    }
  }
  return key;
}

namespace {

Key infeasible_key() { return Key{kInf, 0.0, 0}; }

Key unit_key(const Problem& p, int appliance, int chunk, int t, std::span<const double> load) {
  const Appliance& a = p.household().appliances[appliance];
  const double r = a.rated_power_kw;
  if (!p.fits(load[t], r)) return infeasible_key();
  const double net = load[t] - p.pv(t);
  return Key{p.marginal(t, load[t], r) + p.chunk_penalty(appliance, chunk, t),
             2.0 * r * net + r * r, std::abs(t - a.baseline_on_slots[chunk])};
}

double unit_cost(const Problem& p, int appliance, int chunk, int t,
                 std::span<const double> load) {
  const double r = p.household().appliances[appliance].rated_power_kw;
  if (!p.fits(load[t], r)) return kInf;
  return p.marginal(t, load[t], r) + p.chunk_penalty(appliance, chunk, t);
}

}  // namespace

std::optional<Placement> best_placement(const Problem& p, int appliance,
                                        std::span<const double> load) {
  const Appliance& a = p.household().appliances[appliance];
  const int d = a.duration_slots;
  const int ws = a.window_start;
  const int we = a.window_end;

  if (!a.interruptible) {
    std::optional<Placement> best;
    for (int s = ws; s + d - 1 <= we; ++s) {
      Key key;
      for (int j = 0; j < d; ++j) key += unit_key(p, appliance, j, s + j, load);
      if (std::isinf(key.cost)) continue;
      if (!best || better(key, best->key)) {
        best = Placement{{}, key};
        best->slots.resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) best->slots[static_cast<std::size_t>(j)] = s + j;
      }
    }
    return best;
  }

  // value[k][t]: best key of chunks k..d-1 with chunk k at slot t.
  // arg[k][t]: earliest slot >= t minimizing value[k][.].
  const int n = p.slots();
  std::vector<std::vector<Key>> value(static_cast<std::size_t>(d),
                                      std::vector<Key>(static_cast<std::size_t>(n) + 1,
                                                       infeasible_key()));
  std::vector<std::vector<int>> arg(static_cast<std::size_t>(d),
                                    std::vector<int>(static_cast<std::size_t>(n) + 1, -1));
  for (int k = d - 1; k >= 0; --k) {
    auto& val = value[static_cast<std::size_t>(k)];
    auto& best_from = arg[static_cast<std::size_t>(k)];
    const int lo = ws + k;
    const int hi = we - (d - 1 - k);
    for (int t = lo; t <= hi; ++t) {
      Key unit = unit_key(p, appliance, k, t, load);
      if (std::isinf(unit.cost)) continue;
      if (k == d - 1) {
        val[static_cast<std::size_t>(t)] = unit;
      } else {
        const int next = arg[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(t) + 1];
        if (next < 0) continue;
        val[static_cast<std::size_t>(t)] =
            unit + value[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(next)];
      }
    }
    for (int t = n - 1; t >= 0; --t) {
      const int after = best_from[static_cast<std::size_t>(t) + 1];
      const Key& here = val[static_cast<std::size_t>(t)];
      if (std::isinf(here.cost)) {
        best_from[static_cast<std::size_t>(t)] = after;
      } else if (after < 0 || !better(val[static_cast<std::size_t>(after)], here)) {
        best_from[static_cast<std::size_t>(t)] = t;
      } else {
        best_from[static_cast<std::size_t>(t)] = after;
      }
    }
  }
  const int first = arg[0][0];
  if (first < 0) return std::nullopt;
  Placement out;
  out.key = value[0][static_cast<std::size_t>(first)];
  out.slots.push_back(first);
  for (int k = 1; k < d; ++k) {
    const int prev = out.slots.back();
    out.slots.push_back(arg[static_cast<std::size_t>(k)][static_cast<std::size_t>(prev) + 1]);
  }
  return out;
}

std::vector<std::vector<double>> completion_table(const Problem& p, int appliance,
                                                  std::span<const double> load) {
  const Appliance& a = p.household().appliances[appliance];
  const int d = a.duration_slots;
  const int n = p.slots();
  std::vector<std::vector<double>> g(static_cast<std::size_t>(d),
                                     std::vector<double>(static_cast<std::size_t>(n), kInf));
  std::vector<double> suffix(static_cast<std::size_t>(n) + 1, kInf);
  for (int k = d - 1; k >= 0; --k) {
    auto& row = g[static_cast<std::size_t>(k)];
    const int lo = a.window_start + k;
    const int hi = a.window_end - (d - 1 - k);
    for (int t = lo; t <= hi; ++t) {
      const double unit = unit_cost(p, appliance, k, t, load);
      const double tail = (k == d - 1) ? 0.0 : suffix[static_cast<std::size_t>(t) + 1];
      row[static_cast<std::size_t>(t)] = unit + tail;
    }
    suffix[static_cast<std::size_t>(n)] = kInf;
    for (int t = n - 1; t >= 0; --t) {
      suffix[static_cast<std::size_t>(t)] =
          std::min(suffix[static_cast<std::size_t>(t) + 1], row[static_cast<std::size_t>(t)]);
    }
  }
  return g;
}

std::vector<double> block_costs(const Problem& p, int appliance, std::span<const double> load) {
  const Appliance& a = p.household().appliances[appliance];
  std::vector<double> costs(static_cast<std::size_t>(p.slots()), kInf);
  for (int s = a.window_start; s + a.duration_slots - 1 <= a.window_end; ++s) {
    double c = 0.0;
    for (int j = 0; j < a.duration_slots; ++j) c += unit_cost(p, appliance, j, s + j, load);
    costs[static_cast<std::size_t>(s)] = c;
  }
  return costs;
}

double isolated_min_cost(const Problem& p, int appliance, std::span<const double> load) {
  const Appliance& a = p.household().appliances[appliance];
  if (!a.interruptible) {
    const auto costs = block_costs(p, appliance, load);
    return *std::min_element(costs.begin(), costs.end());
  }
  const auto g = completion_table(p, appliance, load);
  return *std::min_element(g[0].begin(), g[0].end());
}

Key placement_key(const Problem& p, int appliance, std::span<const int> slots,
                  std::span<const double> load) {
  Key key;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    key += unit_key(p, appliance, static_cast<int>(k), slots[k], load);
  }
  return key;
}

double fluid_min_cost(const Problem& p, std::span<const double> load, double power_slots) {
  if (power_slots <= 0.0) return 0.0;
  const double cap = p.household().md_kw;
  std::vector<std::pair<double, double>> segments;  // (unit cost, headroom)
  double free = 0.0;
  for (int t = 0; t < p.slots(); ++t) {
    const double l = load[t];
    const double room = std::max(cap - l, 0.0);
    const double sun = std::clamp(p.pv(t) - l, 0.0, room);
    free += sun;
    if (room > sun) segments.emplace_back(0.5 * p.price(t), room - sun);
  }
  double rest = power_slots - free;
  if (rest <= 0.0) return 0.0;
  std::sort(segments.begin(), segments.end());
  double cost = 0.0;
  for (const auto& [unit, room] : segments) {
    const double take = std::min(rest, room);
    cost += unit * take;
    rest -= take;
    if (rest <= 0.0) return cost;
  }
  return rest > kPowerTol * p.slots() ? kInf : cost;
}

PackingBound::PackingBound(const Problem& p, const std::vector<int>& order) : problem_(&p) {
  constexpr double kQuanta[] = {1.0, 0.5, 0.1, 0.05, 0.01};
  constexpr double kMaxUnits = 1 << 16;
  const auto& apps = p.household().appliances;
  for (double q : kQuanta) {
    if (p.household().md_kw / q > kMaxUnits) break;
    const bool fits = std::all_of(apps.begin(), apps.end(), [q](const Appliance& a) {
      const double units = a.rated_power_kw / q;
      return std::abs(units - std::round(units)) < 1e-9;
    });
    if (fits) {
      quantum_ = q;
      break;
    }
  }
  if (quantum_ == 0.0) return;
  const auto width = static_cast<std::size_t>(std::floor(p.household().md_kw / quantum_)) + 1;
  reachable_.assign(order.size() + 1, std::vector<bool>(width, false));
  reachable_[order.size()][0] = true;
  for (std::size_t l = order.size(); l-- > 0;) {
    auto& now = reachable_[l];
    now = reachable_[l + 1];
    const auto step = static_cast<std::size_t>(
        std::llround(apps[static_cast<std::size_t>(order[l])].rated_power_kw / quantum_));
    for (std::size_t u = width; u-- > step;) {
      if (reachable_[l + 1][u - step]) now[u] = true;
    }
  }
}

double PackingBound::min_cost(int level, std::span<const double> load, double power_slots) const {
  const Problem& p = *problem_;
  if (quantum_ == 0.0) return fluid_min_cost(p, load, power_slots);
  if (power_slots <= 0.0) return 0.0;
  const auto& reach = reachable_[static_cast<std::size_t>(level)];
  const long top = static_cast<long>(reach.size()) - 1;
  const double cap = p.household().md_kw;
  std::vector<std::pair<double, double>> segments;  // (unit cost, headroom)
  double free = 0.0;
  for (int t = 0; t < p.slots(); ++t) {
    const double l = load[t];
    const double room = std::max(cap - l, 0.0);
    const double unit = 0.5 * p.price(t);
    const double sun = std::clamp(p.pv(t) - l, 0.0, room);
    // Largest reachable sum within the sunny headroom, and the next one up.
    long below = std::min(top, static_cast<long>(std::floor(sun / quantum_ + 1e-9)));
    while (below > 0 && !reach[static_cast<std::size_t>(below)]) --below;
    long above = below + 1;
    while (above <= top && !reach[static_cast<std::size_t>(above)]) ++above;
    const double s = std::min(below * quantum_, room);
    free += s;
    if (room <= s) continue;
    if (above > top || above * quantum_ > room + kPowerTol) {
      continue;  // nothing more fits in this slot
    }
    const double u = std::min(above * quantum_, room);
    const double step_cost = unit * std::max(u - sun, 0.0);
    if (u > s) segments.emplace_back(step_cost / (u - s), u - s);
    if (room > u) segments.emplace_back(unit, room - u);
  }
  double rest = power_slots - free;
  if (rest <= 0.0) return 0.0;
  std::sort(segments.begin(), segments.end());
  double cost = 0.0;
  for (const auto& [unit, room] : segments) {
    const double take = std::min(rest, room);
    cost += unit * take;
    rest -= take;
    if (rest <= 0.0) return cost;
  }
  return rest > kPowerTol * p.slots() ? kInf : cost;
}

}  // namespace dsm::detail

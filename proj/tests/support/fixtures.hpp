#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dsm/feeder.hpp"
#include "dsm/model.hpp"
#include "dsm/random.hpp"
#include "dsm/synth.hpp"

namespace fixture {

inline dsm::Appliance appliance(std::string id, double kw, int duration, int window_start,
                                int window_end, bool interruptible, std::vector<int> baseline) {
  dsm::Appliance a;
  a.id = std::move(id);
  a.rated_power_kw = kw;
  a.duration_slots = duration;
  a.window_start = window_start;
  a.window_end = window_end;
  a.interruptible = interruptible;
  a.baseline_on_slots = std::move(baseline);
  return a;
}

inline dsm::PriceProfile flat_price(int slots, double value) {
  return dsm::PriceProfile{dsm::Series(static_cast<std::size_t>(slots), value)};
}

inline dsm::PVProfile no_pv(int slots) {
  return dsm::PVProfile{dsm::Series(static_cast<std::size_t>(slots), 0.0), 6.0};
}

inline dsm::Household household(std::vector<dsm::Appliance> apps, dsm::Series base, double md) {
  dsm::Household h;
  h.index = 1;
  h.bus = 2;
  h.appliances = std::move(apps);
  h.base_load_kw = std::move(base);
  h.md_kw = md;
  return dsm::validate_household(std::move(h));
}

struct SmallInstance {
  dsm::Household household;
  dsm::PriceProfile price;
  dsm::PVProfile pv;
  double penalty_price = 0.0;
};

/// Random instance with up to `max_appliances` appliances on a horizon of at
/// most `max_slots` slots; the cap sometimes binds.
inline SmallInstance random_small_instance(dsm::Rng& rng, int max_appliances = 3, int max_slots = 12) {
  const int T = rng.range(4, max_slots);
  const int count = rng.range(1, max_appliances);
  SmallInstance in;
  in.price.price_per_kwh.resize(static_cast<std::size_t>(T));
  for (auto& p : in.price.price_per_kwh) p = std::round(rng.uniform(0.02, 0.4) * 100.0) / 100.0;
  in.pv = no_pv(T);
  if (rng.uniform() < 0.5) {
    for (auto& p : in.pv.output_kw) p = rng.uniform() < 0.4 ? 0.0 : rng.uniform(0.0, 6.0);
  }
  std::vector<dsm::Appliance> apps;
  dsm::Series load(static_cast<std::size_t>(T), 0.0);
  dsm::Series base(static_cast<std::size_t>(T));
  for (auto& b : base) b = rng.uniform(0.0, 1.5);
  for (int k = 0; k < count; ++k) {
    const int duration = rng.range(1, std::min(4, T));
    const int ws = rng.range(0, T - duration);
    const int we = rng.range(ws + duration - 1, T - 1);
    const bool interruptible = rng.uniform() < 0.5;
    const double kw = rng.uniform(0.3, 4.0);
    std::vector<int> baseline;
    if (interruptible) {
      std::vector<int> pool;
      for (int t = ws; t <= we; ++t) pool.push_back(t);
      rng.shuffle(pool);
      baseline.assign(pool.begin(), pool.begin() + duration);
      std::sort(baseline.begin(), baseline.end());
    } else {
      const int s = rng.range(ws, we - duration + 1);
      for (int j = 0; j < duration; ++j) baseline.push_back(s + j);
    }
    for (int t : baseline) load[static_cast<std::size_t>(t)] += kw;
    apps.push_back(appliance("app" + std::to_string(k), kw, duration, ws, we, interruptible, baseline));
  }
  double peak = 0.0;
  for (int t = 0; t < T; ++t) peak = std::max(peak, load[static_cast<std::size_t>(t)] + base[static_cast<std::size_t>(t)]);
  const double md = peak + (rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.0, 4.0));
  in.household = household(std::move(apps), std::move(base), md);
  in.household.pv_installed = rng.uniform() < 0.5;
  in.penalty_price = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 0.2);
  return in;
}

/// Random tree: each new bus hangs off a uniformly chosen earlier bus.
inline dsm::FeederSpec random_feeder(dsm::Rng& rng, int buses) {
  dsm::FeederSpec spec;
  spec.bus_count = buses;
  for (int b = 1; b < buses; ++b) {
    spec.branches.push_back({rng.range(0, b - 1), b, rng.uniform(0.0005, 0.004), rng.uniform(0.0002, 0.003)});
  }
  return spec;
}

/// Loads between -6 kW (PV surplus) and 12 kW per bus, lagging vars.
inline dsm::InjectionFrame random_frame(dsm::Rng& rng, int buses) {
  dsm::InjectionFrame f;
  f.load_kw.assign(static_cast<std::size_t>(buses), 0.0);
  f.load_kvar.assign(static_cast<std::size_t>(buses), 0.0);
  for (int b = 1; b < buses; ++b) {
    f.load_kw[static_cast<std::size_t>(b)] = rng.uniform(-6.0, 12.0);
    f.load_kvar[static_cast<std::size_t>(b)] = rng.uniform(0.0, 4.0);
  }
  return f;
}

}  // namespace fixture

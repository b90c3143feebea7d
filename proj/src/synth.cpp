#include "dsm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dsm/error.hpp"
#include "dsm/random.hpp"

namespace dsm {

void SynthConfig::validate() const {
  const int n = TimeGrid::kSlotsPerDay;
  auto window_ok = [n](int start, int end) { return 0 <= start && start < end && end <= n; };
  if (!window_ok(morning_peak_start, morning_peak_end) ||
      !window_ok(evening_peak_start, evening_peak_end)) {
    throw Error(Errc::kInvalidSynthConfig, "peak windows must be non-empty ranges inside the day");
  }
  if (morning_peak_end > evening_peak_start) {
    throw Error(Errc::kInvalidSynthConfig, "morning peak must end before the evening peak starts");
  }
  if (night_start < evening_peak_end || night_start > n) {
    throw Error(Errc::kInvalidSynthConfig, "night tier must start after the evening peak");
  }
  if (!(price_offpeak >= 0.0) || !(price_mid >= 0.0) || !(price_peak >= 0.0)) {
    throw Error(Errc::kInvalidSynthConfig, "prices must be non-negative");
  }
  if (price_peak < price_offpeak || price_peak < price_mid) {
    throw Error(Errc::kInvalidSynthConfig, "peak price must not be below the other tiers");
  }
  if (!window_ok(pv_sunrise, pv_sunset)) {
    throw Error(Errc::kInvalidSynthConfig, "sunrise must precede sunset within the day");
  }
  if (!(pv_rated_kw > 0.0) || !(pv_shape_exponent > 0.0)) {
    throw Error(Errc::kInvalidSynthConfig, "PV rating and shape exponent must be positive");
  }
}

int HouseholdClass::interruptible_count() const {
  return static_cast<int>(std::count_if(appliances.begin(), appliances.end(),
                                        [](const CatalogEntry& e) { return e.interruptible; }));
}

int HouseholdClass::uninterruptible_count() const {
  return static_cast<int>(appliances.size()) - interruptible_count();
}

const HouseholdClass& ApplianceCatalog::find(const std::string& name) const {
  for (const auto& c : classes) {
    if (c.name == name) return c;
  }
  throw Error(Errc::kTemplateUnknown, "no household class named '" + name + "'");
}

namespace {

constexpr int kDay = TimeGrid::kSlotsPerDay;

CatalogEntry entry(std::string name, double kw, int slots, bool interruptible, Preference pref,
                   int window_start = 0, int window_end = kDay - 1) {
  return CatalogEntry{std::move(name), kw, slots, window_start, window_end, interruptible, pref};
}

ApplianceCatalog make_default_catalog() {
  using P = Preference;
  const int six = TimeGrid::slot_at(6);
  const int eight = TimeGrid::slot_at(8);
  const int nine = TimeGrid::slot_at(9);
  const int noon_end = TimeGrid::slot_at(11, 30);
  const int late = TimeGrid::slot_at(21, 30);

  ApplianceCatalog catalog;

  HouseholdClass a{"A21-7", 12.4, 1.1, {}};
  a.appliances = {
      entry("ev_charger", 3.3, 4, true, P::kEvening),
      entry("water_heater", 2.0, 3, true, P::kMorning),
      entry("pool_pump", 1.1, 6, true, P::kAnytime),
      entry("hot_tub_heater", 1.5, 2, true, P::kEvening),
      entry("hvac_precool", 2.5, 2, true, P::kEvening, eight, late),
      entry("dehumidifier", 0.6, 4, true, P::kAnytime),
      entry("space_heater", 1.5, 2, true, P::kMorning, 0, noon_end),
      entry("freezer_defrost", 0.5, 2, true, P::kAnytime),
      entry("ebike_charger", 0.5, 4, true, P::kEvening),
      entry("mower_charger", 0.6, 2, true, P::kAnytime),
      entry("tool_charger", 0.5, 2, true, P::kAnytime),
      entry("air_purifier", 0.5, 4, true, P::kAnytime),
      entry("floor_heating", 1.0, 2, true, P::kMorning, 0, noon_end),
      entry("towel_warmer", 0.5, 2, true, P::kMorning, 0, noon_end),
      entry("garage_heater", 1.2, 2, true, P::kEvening),
      entry("aquarium_heater", 0.5, 2, true, P::kAnytime),
      entry("irrigation_pump", 1.2, 2, true, P::kMorning),
      entry("water_softener", 0.5, 2, true, P::kAnytime),
      entry("ice_maker", 0.5, 2, true, P::kAnytime),
      entry("sauna_preheat", 3.0, 2, true, P::kEvening, six, kDay - 1),
      entry("device_charging", 0.5, 2, true, P::kEvening),
      entry("washing_machine", 0.5, 2, false, P::kMorning, six, kDay - 1),
      entry("clothes_dryer", 3.0, 2, false, P::kEvening, six, kDay - 1),
      entry("dishwasher", 1.2, 3, false, P::kEvening),
      entry("bread_maker", 0.6, 4, false, P::kMorning, 0, nine),
      entry("robot_vacuum", 0.5, 2, false, P::kAnytime, six, kDay - 1),
      entry("steam_iron", 1.0, 1, false, P::kEvening, six, kDay - 1),
      entry("pressure_washer", 1.5, 1, false, P::kAnytime, six, kDay - 1),
  };

  HouseholdClass b{"B15-4", 15.3, 1.3, {}};
  b.appliances = {
      entry("ev_charger", 3.6, 6, true, P::kEvening),
      entry("water_heater", 4.0, 2, true, P::kMorning),
      entry("pool_pump", 1.5, 4, true, P::kAnytime),
      entry("hvac_precool", 3.5, 2, true, P::kEvening, eight, late),
      entry("hot_tub_heater", 3.0, 2, true, P::kEvening),
      entry("dehumidifier", 0.6, 4, true, P::kAnytime),
      entry("space_heater", 1.5, 2, true, P::kMorning, 0, noon_end),
      entry("ebike_charger", 0.5, 4, true, P::kEvening),
      entry("garage_heater", 1.5, 2, true, P::kEvening),
      entry("irrigation_pump", 1.2, 2, true, P::kMorning),
      entry("floor_heating", 1.0, 2, true, P::kMorning, 0, noon_end),
      entry("air_purifier", 0.5, 4, true, P::kAnytime),
      entry("freezer_defrost", 0.5, 2, true, P::kAnytime),
      entry("tool_charger", 0.5, 2, true, P::kAnytime),
      entry("ice_maker", 0.5, 2, true, P::kAnytime),
      entry("washing_machine", 0.5, 2, false, P::kMorning, six, kDay - 1),
      entry("clothes_dryer", 3.0, 2, false, P::kEvening, six, kDay - 1),
      entry("dishwasher", 1.2, 3, false, P::kEvening),
      entry("oven_self_clean", 2.4, 2, false, P::kEvening, six, kDay - 1),
  };

  HouseholdClass c{"C17-4", 11.8, 1.0, {}};
  c.appliances = {
      entry("ev_charger", 3.3, 4, true, P::kEvening),
      entry("water_heater", 2.0, 3, true, P::kMorning),
      entry("pool_pump", 1.1, 4, true, P::kAnytime),
      entry("hvac_precool", 2.0, 2, true, P::kEvening, eight, late),
      entry("hot_tub_heater", 1.5, 2, true, P::kEvening),
      entry("dehumidifier", 0.6, 4, true, P::kAnytime),
      entry("space_heater", 1.5, 2, true, P::kMorning, 0, noon_end),
      entry("ebike_charger", 0.5, 4, true, P::kEvening),
      entry("mower_charger", 0.6, 2, true, P::kAnytime),
      entry("air_purifier", 0.5, 4, true, P::kAnytime),
      entry("floor_heating", 1.0, 2, true, P::kMorning, 0, noon_end),
      entry("towel_warmer", 0.5, 2, true, P::kMorning, 0, noon_end),
      entry("garage_heater", 1.2, 2, true, P::kEvening),
      entry("aquarium_heater", 0.5, 2, true, P::kAnytime),
      entry("irrigation_pump", 1.2, 2, true, P::kMorning),
      entry("water_softener", 0.5, 2, true, P::kAnytime),
      entry("ice_maker", 0.5, 2, true, P::kAnytime),
      entry("washing_machine", 0.5, 2, false, P::kMorning, six, kDay - 1),
      entry("clothes_dryer", 3.0, 2, false, P::kEvening, six, kDay - 1),
      entry("dishwasher", 1.2, 3, false, P::kEvening),
      entry("bread_maker", 0.6, 4, false, P::kMorning, 0, nine),
  };

  HouseholdClass d{"D12-4", 8.0, 0.8, {}};
  d.appliances = {
      entry("ev_charger", 3.3, 4, true, P::kEvening),
      entry("water_heater", 2.0, 3, true, P::kMorning),
      entry("pool_pump", 1.1, 4, true, P::kAnytime),
      entry("hvac_precool", 2.0, 2, true, P::kEvening, eight, late),
      entry("dehumidifier", 0.6, 4, true, P::kAnytime),
      entry("space_heater", 1.5, 2, true, P::kMorning, 0, noon_end),
      entry("ebike_charger", 0.5, 4, true, P::kEvening),
      entry("air_purifier", 0.5, 4, true, P::kAnytime),
      entry("floor_heating", 1.0, 2, true, P::kMorning, 0, noon_end),
      entry("garage_heater", 1.2, 2, true, P::kEvening),
      entry("irrigation_pump", 1.2, 2, true, P::kMorning),
      entry("ice_maker", 0.5, 2, true, P::kAnytime),
      entry("washing_machine", 0.5, 2, false, P::kMorning, six, kDay - 1),
      entry("clothes_dryer", 2.0, 2, false, P::kEvening, six, kDay - 1),
      entry("dishwasher", 1.2, 3, false, P::kEvening),
      entry("bread_maker", 0.6, 4, false, P::kMorning, 0, nine),
  };

  catalog.classes = {std::move(a), std::move(b), std::move(c), std::move(d)};
  return catalog;
}

// Non-schedulable load shape (kW) before class scaling and noise.
Series base_shape(const SynthConfig& c) {
  Series shape(kDay);
  for (int t = 0; t < kDay; ++t) {
    double kw;
    if (t < TimeGrid::slot_at(6)) {
      kw = 0.30;
    } else if (t < c.morning_peak_start) {
      kw = 0.50;
    } else if (t < c.morning_peak_end) {
      kw = 1.10;
    } else if (t < c.evening_peak_start) {
      kw = 0.45;
    } else if (t < c.evening_peak_end) {
      kw = 1.50;
    } else if (t < c.night_start) {
      kw = 0.90;
    } else {
      kw = 0.45;
    }
    shape[static_cast<std::size_t>(t)] = kw;
  }
  return shape;
}

Series noisy_base(const SynthConfig& c, double scale, Rng& rng) {
  Series base = base_shape(c);
  for (double& kw : base) kw *= scale * (1.0 + 0.15 * (2.0 * rng.uniform() - 1.0));
  return base;
}

std::vector<int> preferred_starts(const SynthConfig& c, const CatalogEntry& e) {
  int lo = e.window_start;
  int hi = e.window_end - e.duration_slots + 1;
  if (e.preference == Preference::kMorning) {
    lo = std::max(lo, c.morning_peak_start);
    hi = std::min(hi, c.morning_peak_end - 1);
  } else if (e.preference == Preference::kEvening) {
    lo = std::max(lo, c.evening_peak_start);
    hi = std::min(hi, c.evening_peak_end - 1);
  }
  std::vector<int> starts;
  for (int s = lo; s <= hi; ++s) starts.push_back(s);
  return starts;
}

}  // namespace

const ApplianceCatalog& default_catalog() {
  static const ApplianceCatalog catalog = make_default_catalog();
  return catalog;
}

PriceProfile gen_price_profile(const SynthConfig& c) {
  c.validate();
  PriceProfile p;
  p.price_per_kwh.resize(kDay);
  for (int t = 0; t < kDay; ++t) {
    double price = c.price_mid;
    if (t < c.morning_peak_start || t >= c.night_start) price = c.price_offpeak;
    if (t >= c.evening_peak_start && t < c.evening_peak_end) price = c.price_peak;
    p.price_per_kwh[static_cast<std::size_t>(t)] = price;
  }
  return p;
}

PVProfile gen_pv_profile(const SynthConfig& c) {
  c.validate();
  PVProfile pv;
  pv.rated_kw = c.pv_rated_kw;
  pv.output_kw.assign(kDay, 0.0);
  const double span = c.pv_sunset - c.pv_sunrise;
  for (int t = c.pv_sunrise + 1; t < c.pv_sunset; ++t) {
    const double phase = std::numbers::pi * (t - c.pv_sunrise) / span;
    pv.output_kw[static_cast<std::size_t>(t)] =
        std::min(c.pv_rated_kw, c.pv_rated_kw * std::pow(std::sin(phase), c.pv_shape_exponent));
  }
  return pv;
}

BaselineDraw gen_baseline_load(const SynthConfig& c, const HouseholdClass& cls,
                               std::uint64_t seed) {
  c.validate();
  Rng rng(mix_seed(seed, 0));
  BaselineDraw draw;
  draw.md_kw = cls.md_kw;
  draw.base_load_kw = noisy_base(c, cls.base_scale, rng);
  Series load = draw.base_load_kw;

  // Place heavier appliances first so the cap is respected by construction.
  std::vector<std::size_t> order(cls.appliances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return cls.appliances[x].rated_kw > cls.appliances[y].rated_kw;
  });
  draw.appliances.resize(cls.appliances.size());
  for (std::size_t i : order) {
    const CatalogEntry& e = cls.appliances[i];
    std::vector<int> preferred = preferred_starts(c, e);
    // Original runs happen while residents are up; overnight only as a last resort.
    const int wake = TimeGrid::slot_at(6);
    std::vector<int> awake;
    std::vector<int> night;
    for (int s = e.window_start; s + e.duration_slots - 1 <= e.window_end; ++s) {
      (s >= wake ? awake : night).push_back(s);
    }
    if (awake.empty() && night.empty()) {
      throw Error(Errc::kWindowTooSmall, cls.name + "/" + e.name + ": window too small");
    }
    rng.shuffle(preferred);
    rng.shuffle(awake);
    rng.shuffle(night);
    // Mostly inside the peak window, occasionally anywhere in the day.
    std::vector<int> candidates;
    if (rng.uniform() < 0.85) candidates = preferred;
    candidates.insert(candidates.end(), awake.begin(), awake.end());
    candidates.insert(candidates.end(), night.begin(), night.end());
    bool placed = false;
    for (int s : candidates) {
      bool fits = true;
      for (int j = 0; j < e.duration_slots; ++j) {
        fits = fits && load[static_cast<std::size_t>(s + j)] + e.rated_kw <= cls.md_kw;
      }
      if (!fits) continue;
      Appliance app;
      app.id = e.name;
      app.rated_power_kw = e.rated_kw;
      app.duration_slots = e.duration_slots;
      app.window_start = e.window_start;
      app.window_end = e.window_end;
      app.interruptible = e.interruptible;
      for (int j = 0; j < e.duration_slots; ++j) {
        app.baseline_on_slots.push_back(s + j);
        load[static_cast<std::size_t>(s + j)] += e.rated_kw;
      }
      draw.appliances[i] = validate_appliance(std::move(app));
      placed = true;
      break;
    }
    if (!placed) {
      throw Error(Errc::kInvalidHousehold,
                  cls.name + "/" + e.name + ": no original placement fits the maximum demand");
    }
  }
  const auto peak = std::max_element(load.begin(), load.end());
  draw.base_load_kw[static_cast<std::size_t>(peak - load.begin())] += cls.md_kw - *peak;
  return draw;
}

BaselineDraw gen_baseline_load(const SynthConfig& c, const std::string& class_name,
                               std::uint64_t seed, const ApplianceCatalog& catalog) {
  return gen_baseline_load(c, catalog.find(class_name), seed);
}

Series gen_fixed_load(const SynthConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(mix_seed(seed, 1));
  const double scale = rng.uniform(1.8, 2.6);
  return noisy_base(c, scale, rng);
}

const std::vector<SmartHomeRow>& smart_home_layout() {
  static const std::vector<SmartHomeRow> rows = {
      {1, 12, 21, 7, 12.4},  {2, 14, 15, 4, 15.3},  {3, 17, 17, 4, 11.8},  {4, 20, 12, 4, 8.0},
      {5, 3, 21, 7, 12.4},   {6, 10, 15, 4, 15.3},  {7, 19, 17, 4, 11.8},  {8, 29, 12, 4, 8.0},
      {9, 8, 21, 7, 12.4},   {10, 15, 15, 4, 15.3}, {11, 22, 17, 4, 11.8}, {12, 25, 12, 4, 8.0},
      {13, 6, 21, 7, 12.4},  {14, 16, 15, 4, 15.3}, {15, 23, 17, 4, 11.8}, {16, 31, 12, 4, 8.0},
  };
  return rows;
}

int Community::smart_count() const {
  return static_cast<int>(std::count_if(households.begin(), households.end(),
                                        [](const Household& h) { return h.smart(); }));
}

Community build_community(const SynthConfig& c, const ApplianceCatalog& catalog) {
  return build_community(c, catalog, default_feeder_spec());
}

Community build_community(const SynthConfig& c, const ApplianceCatalog& catalog,
                          const FeederSpec& feeder) {
  c.validate();
  constexpr int kHouseholds = 30;
  Community community{{}, Feeder::build(feeder)};
  if (community.feeder.bus_count() < kHouseholds + 1) {
    throw Error(Errc::kInvalidHousehold, "the community needs a feeder with at least 31 buses");
  }
  std::vector<bool> taken(static_cast<std::size_t>(kHouseholds) + 2, false);
  for (const auto& row : smart_home_layout()) {
    const HouseholdClass* cls = nullptr;
    for (const auto& candidate : catalog.classes) {
      if (candidate.interruptible_count() == row.interruptible &&
          candidate.uninterruptible_count() == row.uninterruptible &&
          std::abs(candidate.md_kw - row.md_kw) < 1e-9) {
        cls = &candidate;
        break;
      }
    }
    if (cls == nullptr) {
      throw Error(Errc::kTemplateUnknown, "catalog has no class with " +
                                              std::to_string(row.interruptible) + "/" +
                                              std::to_string(row.uninterruptible) +
                                              " appliances and MD " + std::to_string(row.md_kw));
    }
    BaselineDraw draw = gen_baseline_load(c, *cls, mix_seed(c.seed, static_cast<std::uint64_t>(row.household)));
    Household h;
    h.index = row.household;
    h.bus = row.bus;
    h.appliances = std::move(draw.appliances);
    h.md_kw = draw.md_kw;
    h.base_load_kw = std::move(draw.base_load_kw);
    community.households.push_back(validate_household(std::move(h)));
    taken[static_cast<std::size_t>(row.bus)] = true;
  }
  int index = static_cast<int>(smart_home_layout().size());
  for (int bus = 2; bus <= kHouseholds + 1; ++bus) {
    if (taken[static_cast<std::size_t>(bus)]) continue;
    Household h;
    h.index = ++index;
    h.bus = bus;
    h.base_load_kw = gen_fixed_load(c, mix_seed(c.seed, 1000 + static_cast<std::uint64_t>(h.index)));
    h.md_kw = *std::max_element(h.base_load_kw.begin(), h.base_load_kw.end());
    community.households.push_back(validate_household(std::move(h)));
  }
  return community;
}

}  // namespace dsm

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsm/feeder.hpp"
#include "dsm/model.hpp"

namespace dsm {

/// Parameters of the synthetic day. Slot fields are half-open [start, end)
/// ranges on the 48-slot grid.
struct SynthConfig {
  std::uint64_t seed = 2018;
  int morning_peak_start = 14;  // 07:00
  int morning_peak_end = 18;    // 09:00
  int evening_peak_start = 34;  // 17:00
  int evening_peak_end = 40;    // 20:00
  int night_start = 44;         // 22:00, start of the overnight off-peak tier
  double price_offpeak = 0.06;  // $/kWh
  double price_mid = 0.12;
  double price_peak = 0.30;
  int pv_sunrise = 16;  // 08:00
  int pv_sunset = 32;   // 16:00
  double pv_rated_kw = 6.0;
  double pv_shape_exponent = 2.0;

  /// Throws InvalidSynthConfig.
  void validate() const;
};

enum class Preference { kMorning, kEvening, kAnytime };

struct CatalogEntry {
  std::string name;
  double rated_kw = 0.0;
  int duration_slots = 1;
  int window_start = 0;
  int window_end = TimeGrid::kSlotsPerDay - 1;
  bool interruptible = false;
  Preference preference = Preference::kAnytime;
};

/// One of the four smart-home appliance mixes.
struct HouseholdClass {
  std::string name;
  double md_kw = 0.0;
  double base_scale = 1.0;  // multiplier on the non-schedulable load shape
  std::vector<CatalogEntry> appliances;

  int interruptible_count() const;
  int uninterruptible_count() const;
};

struct ApplianceCatalog {
  std::vector<HouseholdClass> classes;

  /// Throws TemplateUnknown.
  const HouseholdClass& find(const std::string& name) const;
};

/// Built-in catalog: classes "A21-7" (MD 12.4 kW), "B15-4" (15.3), "C17-4"
/// (11.8) and "D12-4" (8.0), named after their interruptible/uninterruptible
/// appliance counts.
const ApplianceCatalog& default_catalog();

/// Deterministic step tariff: off-peak overnight, mid-level otherwise, peak
/// inside the evening peak window.
PriceProfile gen_price_profile(const SynthConfig& config);

/// Clear-sky bell rated * sin^k(pi * (h - sunrise) / (sunset - sunrise)),
/// evaluated at slot start times, zero outside daylight.
PVProfile gen_pv_profile(const SynthConfig& config);

struct BaselineDraw {
  Series base_load_kw;
  std::vector<Appliance> appliances;
  double md_kw = 0.0;
};

/// Non-schedulable two-peak load plus one contiguous original run per
/// appliance, placed preferentially inside the morning or evening peak window.
/// The base load at the original peak slot is topped up so the household's
/// original peak equals the class maximum demand.
BaselineDraw gen_baseline_load(const SynthConfig& config, const HouseholdClass& cls,
                               std::uint64_t seed);
BaselineDraw gen_baseline_load(const SynthConfig& config, const std::string& class_name,
                               std::uint64_t seed, const ApplianceCatalog& catalog = default_catalog());

/// Fixed two-peak load of a household outside the DSM program.
Series gen_fixed_load(const SynthConfig& config, std::uint64_t seed);

struct SmartHomeRow {
  int household;
  int bus;
  int interruptible;
  int uninterruptible;
  double md_kw;
};

/// Smart households, bus assignment, appliance counts and agreed MD limits.
const std::vector<SmartHomeRow>& smart_home_layout();

struct Community {
  /// Smart homes 1-16 in layout order, then the 14 fixed-load homes (17-30).
  std::vector<Household> households;
  Feeder feeder;

  int smart_count() const;
};

Community build_community(const SynthConfig& config,
                          const ApplianceCatalog& catalog = default_catalog());
Community build_community(const SynthConfig& config, const ApplianceCatalog& catalog,
                          const FeederSpec& feeder);

}  // namespace dsm

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dsm {

using Series = std::vector<double>;

/// Day-ahead planning grid: 48 half-hour slots, indexed from 0. Slot k starts
/// at k * 0.5 h wall-clock time.
struct TimeGrid {
  static constexpr int kSlotsPerDay = 48;
  static constexpr double kSlotHours = 0.5;

  /// "HH:MM" start time of a slot.
  static std::string label(int slot);
  /// Slot starting at the given wall-clock time; minutes must be 0 or 30.
  static int slot_at(int hour, int minute = 0);
  /// Parses "HH:MM" (24:00 allowed as the end-of-day boundary).
  static int parse_label(const std::string& text);
};

struct Appliance {
  std::string id;
  double rated_power_kw = 0.0;
  int duration_slots = 1;
  int window_start = 0;
  int window_end = 0;  // inclusive
  bool interruptible = false;
  std::vector<int> baseline_on_slots;

  int window_width() const { return window_end - window_start + 1; }
};

/// Throws dsm::Error (WindowTooSmall, BaselineOutsideWindow,
/// NonContiguousBaseline, InvalidAppliance) when an invariant is broken.
Appliance validate_appliance(Appliance appliance);

struct Household {
  int index = 0;
  int bus = 0;  // 1-based bus number on the feeder
  std::vector<Appliance> appliances;
  double md_kw = 0.0;
  bool pv_installed = false;
  Series base_load_kw;
  double power_factor = 0.95;

  int slot_count() const { return static_cast<int>(base_load_kw.size()); }
  int interruptible_count() const;
  bool smart() const { return !appliances.empty(); }
};

/// Validates every appliance against the household horizon and checks the
/// household-level invariants (non-negative base load, power factor, and the
/// maximum-demand cap covering the original load peak).
Household validate_household(Household household);

struct PriceProfile {
  Series price_per_kwh;
};

struct PVProfile {
  Series output_kw;
  double rated_kw = 6.0;
};

void validate_price(const PriceProfile& price, int slot_count);
void validate_pv(const PVProfile& pv, int slot_count);

/// Binary appliance-by-slot on/off matrix.
class Schedule {
 public:
  Schedule() = default;
  Schedule(std::size_t appliance_count, std::size_t slot_count);

  static Schedule baseline(const Household& household);

  std::size_t appliance_count() const { return appliances_; }
  std::size_t slot_count() const { return slots_; }

  bool on(std::size_t appliance, std::size_t slot) const {
    return cells_[appliance * slots_ + slot] != 0;
  }
  void set(std::size_t appliance, std::size_t slot, bool value) {
    cells_[appliance * slots_ + slot] = value ? 1 : 0;
  }

  /// Ascending list of on-slots of one appliance.
  std::vector<int> on_slots(std::size_t appliance) const;
  int row_sum(std::size_t appliance) const;
  void clear_row(std::size_t appliance);

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  std::size_t appliances_ = 0;
  std::size_t slots_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// base_load(t) + sum_a r_a * u_a(t).
Series aggregate_power(const Schedule& schedule, const Household& household);

/// Billing quantity: max(gross(t) - alpha * P_pv(t), 0). Surplus PV is not
/// credited.
Series net_billable_load(std::span<const double> gross_kw, const PVProfile& pv, bool alpha);

/// Physical bus injection: gross(t) - alpha * P_pv(t), negative on surplus.
Series physical_net_load(std::span<const double> gross_kw, const PVProfile& pv, bool alpha);

}  // namespace dsm

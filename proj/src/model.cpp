#include "dsm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dsm/error.hpp"

namespace dsm {

std::string TimeGrid::label(int slot) {
  const int minutes = slot * 30;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

int TimeGrid::slot_at(int hour, int minute) {
  if (hour < 0 || hour > 24 || (minute != 0 && minute != 30) || (hour == 24 && minute != 0)) {
    throw Error(Errc::kInvalidSynthConfig,
                "time " + std::to_string(hour) + ":" + std::to_string(minute) +
                    " is not on the half-hour grid");
  }
  return hour * 2 + minute / 30;
}

int TimeGrid::parse_label(const std::string& text) {
  int hour = -1;
  int minute = -1;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d:%d%c", &hour, &minute, &tail) != 2) {
    throw Error(Errc::kInvalidSynthConfig, "cannot parse time '" + text + "'");
  }
  return slot_at(hour, minute);
}

Appliance validate_appliance(Appliance a) {
  if (!(a.rated_power_kw > 0.0) || !std::isfinite(a.rated_power_kw)) {
    throw Error(Errc::kInvalidAppliance, a.id + ": rated power must be positive");
  }
  if (a.duration_slots < 1) {
    throw Error(Errc::kInvalidAppliance, a.id + ": duration must be at least one slot");
  }
  if (a.window_end < a.window_start || a.window_width() < a.duration_slots) {
    throw Error(Errc::kWindowTooSmall, a.id + ": window [" + std::to_string(a.window_start) +
                                           ", " + std::to_string(a.window_end) +
                                           "] cannot hold " +
                                           std::to_string(a.duration_slots) + " slots");
  }
  if (static_cast<int>(a.baseline_on_slots.size()) != a.duration_slots) {
    throw Error(Errc::kInvalidAppliance, a.id + ": baseline must list exactly " +
                                             std::to_string(a.duration_slots) + " slots");
  }
  for (std::size_t k = 0; k < a.baseline_on_slots.size(); ++k) {
    const int slot = a.baseline_on_slots[k];
    if (slot < a.window_start || slot > a.window_end) {
      throw Error(Errc::kBaselineOutsideWindow,
                  a.id + ": baseline slot " + std::to_string(slot) + " outside window");
    }
    if (k > 0 && slot <= a.baseline_on_slots[k - 1]) {
      throw Error(Errc::kInvalidAppliance, a.id + ": baseline slots must be strictly increasing");
    }
    if (k > 0 && !a.interruptible && slot != a.baseline_on_slots[k - 1] + 1) {
      throw Error(Errc::kNonContiguousBaseline,
                  a.id + ": uninterruptible baseline has a gap before slot " +
                      std::to_string(slot));
    }
  }
  return a;
}

int Household::interruptible_count() const {
  return static_cast<int>(std::count_if(appliances.begin(), appliances.end(),
                                        [](const Appliance& a) { return a.interruptible; }));
}

Household validate_household(Household h) {
  const int slots = h.slot_count();
  if (slots == 0) {
    throw Error(Errc::kInvalidHousehold, "household " + std::to_string(h.index) +
                                             ": empty base load series");
  }
  for (double v : h.base_load_kw) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(Errc::kInvalidHousehold, "household " + std::to_string(h.index) +
                                               ": base load must be non-negative");
    }
  }
  if (!(h.power_factor > 0.0 && h.power_factor <= 1.0)) {
    throw Error(Errc::kInvalidHousehold,
                "household " + std::to_string(h.index) + ": power factor outside (0, 1]");
  }
  if (!(h.md_kw > 0.0)) {
    throw Error(Errc::kInvalidHousehold,
                "household " + std::to_string(h.index) + ": maximum demand must be positive");
  }
  for (auto& a : h.appliances) {
    a = validate_appliance(std::move(a));
    if (a.window_start < 0 || a.window_end >= slots) {
      throw Error(Errc::kBaselineOutsideWindow,
                  a.id + ": window exceeds the " + std::to_string(slots) + "-slot horizon");
    }
  }
  const Series baseline = aggregate_power(Schedule::baseline(h), h);
  const double peak = *std::max_element(baseline.begin(), baseline.end());
  if (peak > h.md_kw + 1e-9) {
    throw Error(Errc::kInvalidHousehold, "household " + std::to_string(h.index) +
                                             ": original peak " + std::to_string(peak) +
                                             " kW exceeds maximum demand " +
                                             std::to_string(h.md_kw) + " kW");
  }
  return h;
}

void validate_price(const PriceProfile& price, int slot_count) {
  if (static_cast<int>(price.price_per_kwh.size()) != slot_count) {
    throw Error(Errc::kDimensionMismatch, "price profile has " +
                                              std::to_string(price.price_per_kwh.size()) +
                                              " slots, expected " + std::to_string(slot_count));
  }
  for (double p : price.price_per_kwh) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(Errc::kDimensionMismatch, "prices must be finite and non-negative");
    }
  }
}

void validate_pv(const PVProfile& pv, int slot_count) {
  if (static_cast<int>(pv.output_kw.size()) != slot_count) {
    throw Error(Errc::kDimensionMismatch, "PV profile has " + std::to_string(pv.output_kw.size()) +
                                              " slots, expected " + std::to_string(slot_count));
  }
  for (double p : pv.output_kw) {
    if (!(p >= 0.0) || p > pv.rated_kw + 1e-12) {
      throw Error(Errc::kDimensionMismatch, "PV output must lie in [0, rated]");
    }
  }
}

Schedule::Schedule(std::size_t appliance_count, std::size_t slot_count)
    : appliances_(appliance_count), slots_(slot_count), cells_(appliance_count * slot_count, 0) {}

Schedule Schedule::baseline(const Household& h) {
  Schedule s(h.appliances.size(), h.base_load_kw.size());
  for (std::size_t a = 0; a < h.appliances.size(); ++a) {
    for (int slot : h.appliances[a].baseline_on_slots) {
      if (slot < 0 || slot >= static_cast<int>(s.slot_count())) {
        throw Error(Errc::kBaselineOutsideWindow, h.appliances[a].id + ": baseline slot " +
                                                      std::to_string(slot) + " off the horizon");
      }
      s.set(a, static_cast<std::size_t>(slot), true);
    }
  }
  return s;
}

std::vector<int> Schedule::on_slots(std::size_t appliance) const {
  std::vector<int> slots;
  for (std::size_t t = 0; t < slots_; ++t) {
    if (on(appliance, t)) slots.push_back(static_cast<int>(t));
  }
  return slots;
}

int Schedule::row_sum(std::size_t appliance) const {
  int n = 0;
  for (std::size_t t = 0; t < slots_; ++t) n += on(appliance, t) ? 1 : 0;
  return n;
}

void Schedule::clear_row(std::size_t appliance) {
  std::fill_n(cells_.begin() + static_cast<std::ptrdiff_t>(appliance * slots_), slots_, 0);
}

Series aggregate_power(const Schedule& s, const Household& h) {
  if (s.appliance_count() != h.appliances.size() ||
      s.slot_count() != h.base_load_kw.size()) {
    throw Error(Errc::kDimensionMismatch,
                "schedule is " + std::to_string(s.appliance_count()) + "x" +
                    std::to_string(s.slot_count()) + ", household has " +
                    std::to_string(h.appliances.size()) + " appliances and " +
                    std::to_string(h.base_load_kw.size()) + " slots");
  }
  Series total = h.base_load_kw;
  for (std::size_t a = 0; a < s.appliance_count(); ++a) {
    const double r = h.appliances[a].rated_power_kw;
    for (std::size_t t = 0; t < s.slot_count(); ++t) {
      if (s.on(a, t)) total[t] += r;
    }
  }
  return total;
}

namespace {

void require_same_length(std::span<const double> gross, const PVProfile& pv) {
  if (gross.size() != pv.output_kw.size()) {
    throw Error(Errc::kDimensionMismatch, "load has " + std::to_string(gross.size()) +
                                              " slots, PV profile has " +
                                              std::to_string(pv.output_kw.size()));
  }
}

}  // namespace

Series net_billable_load(std::span<const double> gross, const PVProfile& pv, bool alpha) {
  require_same_length(gross, pv);
  Series out(gross.begin(), gross.end());
  if (!alpha) return out;
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = std::max(gross[t] - pv.output_kw[t], 0.0);
  }
  return out;
}

Series physical_net_load(std::span<const double> gross, const PVProfile& pv, bool alpha) {
  require_same_length(gross, pv);
  Series out(gross.begin(), gross.end());
  if (!alpha) return out;
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = gross[t] - pv.output_kw[t];
  return out;
}

}  // namespace dsm

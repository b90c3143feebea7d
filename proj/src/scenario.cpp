#include "dsm/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <thread>
#include <tuple>

#include "dsm/error.hpp"
#include "dsm/random.hpp"

namespace dsm {

std::string to_string(SolverKind kind) {
  return kind == SolverKind::kExact ? "exact" : "heuristic";
}

SolverKind parse_solver(const std::string& text) {
  if (text == "exact") return SolverKind::kExact;
  if (text == "heuristic") return SolverKind::kHeuristic;
  throw Error(Errc::kConfigInvalid, "solver: expected 'exact' or 'heuristic', got '" + text + "'");
}

void ScenarioSpec::validate(int smart_homes) const {
  if (participation < 0 || participation > smart_homes) {
    throw Error(Errc::kInvalidScenario, "participation " + std::to_string(participation) +
                                            " outside [0, " + std::to_string(smart_homes) + "]");
  }
  if (!(penalty_price >= 0.0) || !std::isfinite(penalty_price)) {
    throw Error(Errc::kInvalidScenario, "penalty price must be finite and non-negative");
  }
}

std::string ScenarioSpec::name() const {
  char cents[32];
  const double value = penalty_price * 100.0;
  const double rounded = std::round(value * 1e6) / 1e6;
  auto res = std::to_chars(cents, cents + sizeof(cents), rounded);
  std::string label(cents, res.ptr);
  std::replace(label.begin(), label.end(), '.', 'p');
  std::string out = "p" + std::to_string(participation) + "_pp" + label + (pv_enabled ? "_pvon" : "_pvoff");
  if (!dsm) out += "_nodsm";
  return out;
}

ScenarioInputs ScenarioInputs::synthesize(const SynthConfig& config) {
  ScenarioInputs in{build_community(config), gen_price_profile(config), gen_pv_profile(config), {}, {}};
  return in;
}

namespace {

class Fnv {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001B3ULL;
    }
  }
  void number(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    bytes(&bits, sizeof bits);
  }
  void number(std::int64_t x) { bytes(&x, sizeof x); }
  void series(const Series& s) {
    number(static_cast<std::int64_t>(s.size()));
    for (double x : s) number(x);
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

}  // namespace

std::uint64_t ScenarioInputs::fingerprint() const {
  Fnv f;
  for (const auto& h : community.households) {
    f.number(std::int64_t{h.index});
    f.number(std::int64_t{h.bus});
    f.number(h.md_kw);
    f.number(h.power_factor);
    f.series(h.base_load_kw);
    for (const auto& a : h.appliances) {
      f.bytes(a.id.data(), a.id.size());
      f.number(a.rated_power_kw);
      f.number(std::int64_t{a.duration_slots});
      f.number(std::int64_t{a.window_start});
      f.number(std::int64_t{a.window_end});
      f.number(std::int64_t{a.interruptible});
      for (int s : a.baseline_on_slots) f.number(std::int64_t{s});
    }
  }
  const Feeder& fd = community.feeder;
  f.number(std::int64_t{fd.bus_count()});
  f.number(fd.base_kva());
  f.number(fd.base_kv());
  f.number(fd.slack_voltage_pu());
  for (const auto& b : fd.branches()) {
    f.number(std::int64_t{b.upstream});
    f.number(std::int64_t{b.downstream});
    f.number(b.r_pu);
    f.number(b.x_pu);
  }
  f.series(price.price_per_kwh);
  f.series(pv.output_kw);
  return f.value();
}

std::optional<double> pv_utilization(std::span<const Series> gross, const PVProfile& pv) {
  double generated = 0.0;
  for (double p : pv.output_kw) generated += p;
  generated *= static_cast<double>(gross.size());
  if (!(generated > 0.0)) return std::nullopt;
  double used = 0.0;
  for (const auto& g : gross) {
    if (g.size() != pv.output_kw.size()) {
      throw Error(Errc::kDimensionMismatch, "load and PV series lengths differ");
    }
    for (std::size_t t = 0; t < g.size(); ++t) used += std::min(std::max(g[t], 0.0), pv.output_kw[t]);
  }
  return used / generated;
}

int default_thread_count() {
  if (const char* env = std::getenv("DSMSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first failure in
// index order is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < count; ++k) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

using SolveKey = std::tuple<std::size_t, double, bool, bool, SolverKind, std::uint64_t>;

struct Solved {
  Schedule schedule;
  CostBreakdown cost;
  double baseline_objective = 0.0;
  SolveStatus status = SolveStatus::kHeuristic;
  long nodes = 0;
};

// (household position, penalty, pv, dsm, solver, seed) of a participant.
SolveKey key_of(const ScenarioSpec& spec, std::size_t home) {
  return {home, spec.penalty_price, spec.pv_enabled, spec.dsm, spec.solver,
          spec.solver == SolverKind::kHeuristic ? spec.seed : 0};
}

Solved solve_one(const SolveKey& key, const ScenarioInputs& in) {
  const auto& [home, penalty, pv_on, dsm, solver, seed] = key;
  Household h = in.community.households[home];
  h.pv_installed = pv_on;
  Solved out;
  const Schedule baseline = Schedule::baseline(h);
  try {
    out.baseline_objective = total_cost(baseline, h, in.price, in.pv, penalty).objective();
    if (!dsm) {
      out.schedule = baseline;
      out.cost = total_cost(baseline, h, in.price, in.pv, penalty);
      out.status = SolveStatus::kOptimal;
      return out;
    }
    SolveResult r = solver == SolverKind::kExact
                        ? optimize_exact(h, in.price, in.pv, penalty, in.budget)
                        : optimize_heuristic(h, in.price, in.pv, penalty, in.budget,
                                             mix_seed(seed, static_cast<std::uint64_t>(h.index)));
    out.schedule = std::move(r.schedule);
    out.cost = std::move(r.cost);
    out.status = r.status;
    out.nodes = r.nodes;
  } catch (const Error& e) {
    throw Error(e.code(), "household " + std::to_string(h.index) + ": " + e.what());
  }
  return out;
}

using SolveCache = std::map<SolveKey, Solved>;

void fill_cache(SolveCache& cache, std::span<const ScenarioSpec> specs, const ScenarioInputs& in,
                int threads) {
  std::vector<SolveKey> pending;
  for (const auto& spec : specs) {
    for (int i = 0; i < spec.participation; ++i) {
      const SolveKey k = key_of(spec, static_cast<std::size_t>(i));
      if (!cache.contains(k) && std::find(pending.begin(), pending.end(), k) == pending.end()) {
        pending.push_back(k);
      }
    }
  }
  // Longest solves first so the tail of the pool stays busy.
  std::stable_sort(pending.begin(), pending.end(), [&](const SolveKey& a, const SolveKey& b) {
    return in.community.households[std::get<0>(a)].appliances.size() >
           in.community.households[std::get<0>(b)].appliances.size();
  });
  std::vector<Solved> solved(pending.size());
  parallel_for(pending.size(), threads, [&](std::size_t i) { solved[i] = solve_one(pending[i], in); });
  for (std::size_t i = 0; i < pending.size(); ++i) cache.emplace(pending[i], std::move(solved[i]));
}

void check_inputs(const ScenarioInputs& in) {
  const auto& homes = in.community.households;
  const int smart = in.community.smart_count();
  for (int i = 0; i < smart; ++i) {
    if (!homes[static_cast<std::size_t>(i)].smart()) {
      throw Error(Errc::kInvalidScenario, "smart homes must precede fixed-load homes");
    }
  }
  for (const auto& h : homes) {
    if (h.bus < 2 || h.bus > in.community.feeder.bus_count()) {
      throw Error(Errc::kInvalidScenario, "household " + std::to_string(h.index) + " sits on bus " +
                                              std::to_string(h.bus) + ", not a load bus");
    }
  }
  const int T = homes.empty() ? TimeGrid::kSlotsPerDay : homes.front().slot_count();
  validate_price(in.price, T);
  validate_pv(in.pv, T);
  in.budget.validate();
}

ScenarioResult assemble(const ScenarioSpec& spec, const ScenarioInputs& in, const SolveCache& cache,
                        std::uint64_t fingerprint) {
  const auto& homes = in.community.households;
  const Feeder& feeder = in.community.feeder;
  const std::size_t T = in.price.price_per_kwh.size();
  ScenarioResult res;
  res.spec = spec;
  res.input_fingerprint = fingerprint;
  res.community_gross_kw.assign(T, 0.0);
  res.community_net_kw.assign(T, 0.0);
  std::vector<InjectionFrame> frames(T);
  for (auto& f : frames) {
    f.load_kw.assign(static_cast<std::size_t>(feeder.bus_count()), 0.0);
    f.load_kvar.assign(static_cast<std::size_t>(feeder.bus_count()), 0.0);
  }
  std::vector<Series> pv_gross;
  for (std::size_t i = 0; i < homes.size(); ++i) {
    const Household& h = homes[i];
    HouseholdOutcome o;
    o.household = h.index;
    o.bus = h.bus;
    o.participating = static_cast<int>(i) < spec.participation;
    o.pv = o.participating && spec.pv_enabled;
    if (o.participating) {
      const Solved& s = cache.at(key_of(spec, i));
      o.schedule = s.schedule;
      o.cost = s.cost;
      o.baseline_objective = s.baseline_objective;
      o.status = s.status;
      o.nodes = s.nodes;
    } else {
      o.schedule = Schedule::baseline(h);
      o.cost = total_cost(o.schedule, h, in.price, in.pv, spec.penalty_price);
      o.baseline_objective = o.cost.objective();
      o.status = SolveStatus::kOptimal;
    }
    o.gross_kw = aggregate_power(o.schedule, h);
    o.billable_kw = net_billable_load(o.gross_kw, in.pv, o.pv);
    const Series net = physical_net_load(o.gross_kw, in.pv, o.pv);
    const double tan_phi = std::tan(std::acos(h.power_factor));
    const auto bus = static_cast<std::size_t>(h.bus - 1);
    for (std::size_t t = 0; t < T; ++t) {
      res.community_gross_kw[t] += o.gross_kw[t];
      res.community_net_kw[t] += net[t];
      frames[t].load_kw[bus] += net[t];
      frames[t].load_kvar[bus] += o.gross_kw[t] * tan_phi;
    }
    if (o.pv) pv_gross.push_back(o.gross_kw);
    res.households.push_back(std::move(o));
  }

  res.flows = solve_time_series(feeder, frames, in.power_flow);
  res.voltage = voltage_metrics(feeder, res.flows);
  ScenarioMetrics& m = res.metrics;
  m.pv_utilization = pv_utilization(pv_gross, in.pv);
  m.end_voltage_variance = res.voltage.variance;
  m.end_voltage_max_deviation_pu = res.voltage.max_deviation_pu;
  m.reverse_flow = reverse_flow_report(res.flows);
  const auto heads = feeder.head_branches();
  for (std::size_t t = 0; t < T; ++t) {
    const auto& pf = res.flows[t];
    const double loss_kwh = pf.total_loss_kw * TimeGrid::kSlotHours;
    m.total_loss_kwh += loss_kwh;
    if (static_cast<int>(t) >= kPeakWindowStart && static_cast<int>(t) < kPeakWindowEnd) {
      m.peak_window_loss_kwh += loss_kwh;
    }
    m.min_voltage_pu = std::min(m.min_voltage_pu, *std::min_element(pf.v_mag_pu.begin(), pf.v_mag_pu.end()));
    m.peak_community_kw = std::max(m.peak_community_kw, res.community_net_kw[t]);
    for (int k : heads) {
      m.max_head_reverse_kw = std::max(m.max_head_reverse_kw, -pf.branch_p_kw[static_cast<std::size_t>(k)]);
    }
  }
  return res;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const ScenarioInputs& inputs, int threads) {
  check_inputs(inputs);
  spec.validate(inputs.community.smart_count());
  SolveCache cache;
  fill_cache(cache, std::span(&spec, 1), inputs, threads);
  return assemble(spec, inputs, cache, inputs.fingerprint());
}

void GridSpec::validate() const {
  if (participation.empty() || penalty_prices.empty() || pv.empty()) {
    throw Error(Errc::kInvalidScenario, "grid axes must not be empty");
  }
  for (const auto& s : cells()) s.validate();
}

std::vector<ScenarioSpec> GridSpec::cells() const {
  std::vector<ScenarioSpec> out;
  for (bool pv_on : pv) {
    for (double penalty : penalty_prices) {
      for (int n : participation) {
        out.push_back({n, penalty, pv_on, true, solver, seed});
      }
    }
  }
  if (pv_reference) {
    const int top = participation.empty() ? 0 : *std::max_element(participation.begin(), participation.end());
    out.push_back({top, 0.0, true, false, solver, seed});
  }
  return out;
}

std::vector<ScenarioResult> run_grid(const GridSpec& grid, const ScenarioInputs& inputs,
                                     int threads) {
  check_inputs(inputs);
  const auto specs = grid.cells();
  for (const auto& s : specs) s.validate(inputs.community.smart_count());
  SolveCache cache;
  fill_cache(cache, specs, inputs, threads);
  const std::uint64_t fingerprint = inputs.fingerprint();
  std::vector<ScenarioResult> results(specs.size());
  parallel_for(specs.size(), threads, [&](std::size_t i) {
    try {
      results[i] = assemble(specs[i], inputs, cache, fingerprint);
    } catch (const Error& e) {
      throw Error(e.code(), specs[i].name() + ": " + e.what());
    }
  });
  return results;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 6);
  return std::string(buf, r.ptr);
}

const ScenarioResult* find(std::span<const ScenarioResult> results, int n, double penalty, bool pv,
                           bool dsm = true) {
  for (const auto& r : results) {
    if (r.spec.participation == n && r.spec.penalty_price == penalty && r.spec.pv_enabled == pv &&
        r.spec.dsm == dsm) {
      return &r;
    }
  }
  return nullptr;
}

}  // namespace

std::vector<TrendCheck> compare_scenarios(std::span<const ScenarioResult> results) {
  std::vector<TrendCheck> out;
  if (results.size() < 2) return out;
  for (const auto& r : results) {
    if (r.input_fingerprint != results.front().input_fingerprint) {
      throw Error(Errc::kIncomparableInputs,
                  r.spec.name() + " was computed from different inputs than " + results.front().spec.name());
    }
  }
  std::vector<int> levels;
  for (const auto& r : results) {
    if (r.spec.dsm) levels.push_back(r.spec.participation);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const int top = levels.empty() ? 0 : levels.back();

  for (bool pv : {false, true}) {
    std::vector<const ScenarioResult*> series;
    for (int n : levels) {
      if (const auto* r = find(results, n, 0.0, pv)) series.push_back(r);
    }
    if (series.size() < 2) continue;
    TrendCheck c{"T1", std::string("end-of-feeder voltage variance non-increasing in participation (PV ") +
                           (pv ? "on)" : "off)"),
                 true, ""};
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (i > 0) c.detail += " ";
      c.detail += std::to_string(series[i]->spec.participation) + ":" + fmt(series[i]->metrics.end_voltage_variance);
      if (i > 0 && series[i]->metrics.end_voltage_variance > series[i - 1]->metrics.end_voltage_variance) {
        c.passed = false;
      }
    }
    out.push_back(std::move(c));
  }

  const ScenarioResult* reference = find(results, 0, 0.0, false);
  if (reference == nullptr) {
    for (const auto& r : results) {
      if (r.spec.dsm && r.spec.participation == 0 && !r.spec.pv_enabled) reference = &r;
    }
  }
  if (reference != nullptr && top > 0) {
    for (bool pv : {false, true}) {
      const auto* r = find(results, top, 0.0, pv);
      if (r == nullptr) continue;
      TrendCheck c{"T2", "peak-window loss with " + std::to_string(top) + " DSM homes (PV " +
                             (pv ? "on" : "off") + ") below the reference run",
                   r->metrics.peak_window_loss_kwh < reference->metrics.peak_window_loss_kwh,
                   fmt(r->metrics.peak_window_loss_kwh) + " kWh vs " +
                       fmt(reference->metrics.peak_window_loss_kwh) + " kWh"};
      out.push_back(std::move(c));
    }
  }

  for (int n : levels) {
    std::vector<const ScenarioResult*> series;
    for (const auto& r : results) {
      if (r.spec.dsm && r.spec.pv_enabled && r.spec.participation == n && r.metrics.pv_utilization) {
        series.push_back(&r);
      }
    }
    std::sort(series.begin(), series.end(), [](const auto* a, const auto* b) {
      return a->spec.penalty_price < b->spec.penalty_price;
    });
    if (series.size() < 2) continue;
    TrendCheck c{"T3", "PV utilization non-increasing in penalty price (" + std::to_string(n) + " homes)",
                 true, ""};
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (i > 0) c.detail += " ";
      c.detail += fmt(series[i]->spec.penalty_price) + ":" + fmt(*series[i]->metrics.pv_utilization);
      if (i > 0 && *series[i]->metrics.pv_utilization > *series[i - 1]->metrics.pv_utilization) {
        c.passed = false;
      }
    }
    out.push_back(std::move(c));
  }

  const auto* with_dsm = find(results, top, 0.0, true);
  const ScenarioResult* without = nullptr;
  for (const auto& r : results) {
    if (!r.spec.dsm && r.spec.pv_enabled && r.spec.participation == top) without = &r;
  }
  if (top > 0 && with_dsm != nullptr && without != nullptr) {
    out.push_back({"T4", "head-branch reverse flow with DSM no larger than without",
                   with_dsm->metrics.max_head_reverse_kw <= without->metrics.max_head_reverse_kw,
                   fmt(with_dsm->metrics.max_head_reverse_kw) + " kW vs " +
                       fmt(without->metrics.max_head_reverse_kw) + " kW"});
  }
  return out;
}

}  // namespace dsm

#include "doctest.h"

#include <algorithm>

#include "dsm/error.hpp"
#include "dsm/scenario.hpp"

using namespace dsm;

namespace {

const ScenarioInputs& inputs() {
  static const ScenarioInputs in = [] {
    ScenarioInputs s = ScenarioInputs::synthesize(SynthConfig{});
    s.budget.max_nodes = 4000;
    return s;
  }();
  return in;
}

ScenarioSpec spec(int n, double pi, bool pv, SolverKind solver = SolverKind::kHeuristic) {
  ScenarioSpec s;
  s.participation = n;
  s.penalty_price = pi;
  s.pv_enabled = pv;
  s.solver = solver;
  return s;
}

double window_sum(const Series& s) {
  double sum = 0.0;
  for (int t = kPeakWindowStart; t < kPeakWindowEnd; ++t) sum += s[static_cast<std::size_t>(t)];
  return sum;
}

void check_same(const ScenarioResult& a, const ScenarioResult& b) {
  CHECK(a.spec.name() == b.spec.name());
  REQUIRE(a.households.size() == b.households.size());
  for (std::size_t i = 0; i < a.households.size(); ++i) {
    CHECK(a.households[i].schedule == b.households[i].schedule);
    CHECK(a.households[i].cost.objective() == b.households[i].cost.objective());
  }
  CHECK(a.community_net_kw == b.community_net_kw);
  CHECK(a.voltage.end_voltage_pu == b.voltage.end_voltage_pu);
  CHECK(a.metrics.total_loss_kwh == b.metrics.total_loss_kwh);
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kConfigInvalid;
}

}  // namespace

TEST_CASE("scenario names and validation") {
  CHECK(spec(16, 0.05, true).name() == "p16_pp5_pvon");
  CHECK(spec(0, 0.0, false).name() == "p0_pp0_pvoff");
  ScenarioSpec ref = spec(16, 0.0, true);
  ref.dsm = false;
  CHECK(ref.name() == "p16_pp0_pvon_nodsm");
  CHECK(code_of([] { spec(17, 0.0, false).validate(); }) == Errc::kInvalidScenario);
  CHECK(code_of([] { spec(-1, 0.0, false).validate(); }) == Errc::kInvalidScenario);
  CHECK(code_of([] { spec(4, -0.01, false).validate(); }) == Errc::kInvalidScenario);
  CHECK(parse_solver("heuristic") == SolverKind::kHeuristic);
  CHECK(to_string(SolverKind::kExact) == "exact");
  CHECK(code_of([] { parse_solver("greedy"); }) == Errc::kConfigInvalid);
}

TEST_CASE("reference run keeps every original schedule") {
  const auto& in = inputs();
  const ScenarioResult r = run_scenario(spec(0, 0.0, false), in);
  Series sum(48, 0.0);
  for (const auto& h : in.community.households) {
    const Series g = aggregate_power(Schedule::baseline(h), h);
    for (std::size_t t = 0; t < 48; ++t) sum[t] += g[t];
  }
  CHECK(r.community_gross_kw == sum);
  CHECK(r.community_net_kw == sum);
  for (const auto& o : r.households) {
    CHECK_FALSE(o.participating);
    CHECK_FALSE(o.pv);
    CHECK(o.cost.penalty_cost == 0.0);
    CHECK(o.billable_kw == o.gross_kw);
  }
  CHECK_FALSE(r.metrics.pv_utilization.has_value());
  CHECK(r.metrics.reverse_flow.empty());
  CHECK(r.flows.size() == 48);
}

TEST_CASE("full participation never costs more than the original schedules") {
  const ScenarioResult r = run_scenario(spec(16, 0.0, false, SolverKind::kExact), inputs(), 4);
  int participating = 0;
  for (const auto& o : r.households) {
    if (!o.participating) continue;
    ++participating;
    CHECK(o.cost.objective() <= o.baseline_objective + 1e-12);
    CHECK(o.cost.penalty_cost == 0.0);
  }
  CHECK(participating == 16);
}

TEST_CASE("PV homes with DSM draw less in the evening peak than the reference") {
  const auto& in = inputs();
  const ScenarioResult ref = run_scenario(spec(0, 0.0, false), in);
  const ScenarioResult r = run_scenario(spec(16, 0.0, true), in, 4);
  for (int t = kPeakWindowStart; t < kPeakWindowEnd; ++t) {
    CHECK(r.community_net_kw[static_cast<std::size_t>(t)] < ref.community_net_kw[static_cast<std::size_t>(t)]);
  }
  CHECK(window_sum(r.community_net_kw) < window_sum(ref.community_net_kw));
  REQUIRE(r.metrics.pv_utilization.has_value());
  CHECK(*r.metrics.pv_utilization > 0.9);
}

TEST_CASE("PV goes to participants only") {
  const ScenarioResult r = run_scenario(spec(4, 0.1, true), inputs());
  for (std::size_t i = 0; i < r.households.size(); ++i) {
    CHECK(r.households[i].pv == (i < 4));
    CHECK(r.households[i].participating == (i < 4));
  }
  ScenarioSpec off = spec(4, 0.1, true);
  off.dsm = false;
  const ScenarioResult n = run_scenario(off, inputs());
  for (std::size_t i = 0; i < n.households.size(); ++i) {
    CHECK(n.households[i].participating == (i < 4));
    CHECK(n.households[i].pv == (i < 4));
    CHECK(n.households[i].schedule == Schedule::baseline(inputs().community.households[i]));
  }
}

TEST_CASE("pv utilization examples") {
  PVProfile pv{Series{0.0, 2.0, 4.0, 2.0, 0.0}, 6.0};
  SUBCASE("full absorption") {
    const std::vector<Series> gross{{1.0, 3.0, 5.0, 2.0, 0.0}, {0.0, 2.5, 4.0, 9.0, 0.0}};
    CHECK(*pv_utilization(gross, pv) == 1.0);
  }
  SUBCASE("partial absorption") {
    // 10 kWh generated, 4 kWh absorbed.
    PVProfile flat{Series{5.0, 5.0, 5.0, 5.0}, 6.0};
    const std::vector<Series> gross{{2.0, 2.0, 2.0, 2.0}};
    CHECK(*pv_utilization(gross, flat) == doctest::Approx(0.4));
  }
  SUBCASE("no PV homes or no generation") {
    CHECK_FALSE(pv_utilization({}, pv).has_value());
    const std::vector<Series> gross{{1.0, 1.0}};
    CHECK_FALSE(pv_utilization(gross, PVProfile{Series{0.0, 0.0}, 6.0}).has_value());
  }
}

TEST_CASE("trend comparison edge cases") {
  const ScenarioResult r = run_scenario(spec(0, 0.0, false), inputs());
  CHECK(compare_scenarios(std::vector<ScenarioResult>{r}).empty());
  CHECK(compare_scenarios(std::vector<ScenarioResult>{}).empty());

  SUBCASE("identical metrics pass every monotone trend with equality") {
    std::vector<ScenarioResult> copies;
    for (int n : {0, 4, 8, 16}) {
      for (double pi : {0.0, 0.05, 0.1}) {
        for (bool pv : {false, true}) {
          ScenarioResult c = r;
          c.spec = spec(n, pi, pv);
          if (pv) c.metrics.pv_utilization = 0.5;
          copies.push_back(c);
        }
      }
    }
    ScenarioResult nodsm = r;
    nodsm.spec = spec(16, 0.0, true);
    nodsm.spec.dsm = false;
    copies.push_back(nodsm);
    const auto checks = compare_scenarios(copies);
    int monotone = 0;
    for (const auto& c : checks) {
      if (c.id == "T2") {
        // Strict reduction is required, so equal losses do not pass.
        CHECK_FALSE(c.passed);
      } else {
        CHECK(c.passed);
        ++monotone;
      }
    }
    CHECK(monotone == 2 + 4 + 1);
  }

  SUBCASE("mixed inputs are rejected") {
    ScenarioResult other = r;
    other.input_fingerprint ^= 1;
    CHECK(code_of([&] { compare_scenarios(std::vector<ScenarioResult>{r, other}); }) ==
          Errc::kIncomparableInputs);
  }
}

TEST_CASE("input fingerprint tracks the inputs") {
  ScenarioInputs a = ScenarioInputs::synthesize(SynthConfig{});
  const ScenarioInputs b = ScenarioInputs::synthesize(SynthConfig{});
  CHECK(a.fingerprint() == b.fingerprint());
  a.price.price_per_kwh[3] += 0.01;
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("grid results do not depend on order or thread count") {
  GridSpec grid;
  grid.participation = {0, 4};
  grid.penalty_prices = {0.0, 0.05};
  grid.pv_reference = false;
  grid.solver = SolverKind::kHeuristic;
  const auto serial = run_grid(grid, inputs(), 1);
  const auto parallel = run_grid(grid, inputs(), 6);
  REQUIRE(serial.size() == 8);
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) check_same(serial[i], parallel[i]);

  // Each cell on its own, in reverse order, reproduces the shared-cache grid.
  const auto cells = grid.cells();
  for (std::size_t i = cells.size(); i-- > 0;) {
    check_same(run_scenario(cells[i], inputs(), 3), serial[i]);
  }
}

TEST_CASE("grid spec validation") {
  GridSpec g;
  CHECK(g.cells().size() == 25);
  g.pv_reference = false;
  CHECK(g.cells().size() == 24);
  g.participation = {20};
  CHECK_THROWS_AS(g.validate(), Error);
  g = GridSpec{};
  g.penalty_prices = {};
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("participants respect their caps and objectives rise with the penalty") {
  const auto& in = inputs();
  std::vector<ScenarioResult> runs;
  for (double pi : {0.0, 0.05, 0.1}) runs.push_back(run_scenario(spec(8, pi, false, SolverKind::kExact), in, 4));
  for (std::size_t i = 0; i < 8; ++i) {
    const Household& h = in.community.households[i];
    for (const auto& r : runs) {
      const auto& o = r.households[i];
      CHECK(check_feasibility(o.schedule, h).feasible());
      CHECK(*std::max_element(o.gross_kw.begin(), o.gross_kw.end()) <= h.md_kw + 1e-9);
    }
    const bool all_optimal = std::all_of(runs.begin(), runs.end(), [&](const ScenarioResult& r) {
      return r.households[i].status == SolveStatus::kOptimal;
    });
    if (all_optimal) {
      CHECK(runs[0].households[i].cost.objective() <= runs[1].households[i].cost.objective() + 1e-9);
      CHECK(runs[1].households[i].cost.objective() <= runs[2].households[i].cost.objective() + 1e-9);
    }
  }
}

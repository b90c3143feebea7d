#include "doctest.h"

#include <sys/wait.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsm/cli.hpp"
#include "dsm/config.hpp"
#include "dsm/error.hpp"
#include "dsm/reports.hpp"

using namespace dsm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dsmsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dsmsim_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double number(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  REQUIRE(ec == std::errc{});
  REQUIRE(ptr == text.data() + text.size());
  return v;
}

const char* kReferenceGrid = R"({
  "grid": {"participation": [0], "penalty_price": [0.0], "pv": [false], "pv_reference": false}
})";

const char* kSmallGrid = R"({
  "grid": {"participation": [0, 4], "penalty_price": [0.0, 0.05], "pv": [false, true], "pv_reference": true},
  "solver": {"kind": "heuristic"}
})";

}  // namespace

TEST_CASE("missing config file is reported by path") {
  const fs::path missing = scratch("missing") / "nowhere.json";
  const Run r = cli({"--config", missing.string()});
  CHECK(r.code == kExitError);
  CHECK(r.err.find(missing.string()) != std::string::npos);
}

TEST_CASE("unknown keys are rejected by name") {
  const fs::path dir = scratch("unknown");
  const auto cfg = write_file(dir / "c.json", R"({"grid": {"participation": [0], "colour": 1}})");
  const Run r = cli({"--config", cfg.string(), "--out", (dir / "out").string()});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("grid.colour") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  try {
    parse_config(R"({"sinth": {}})");
    FAIL("expected ConfigInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kConfigInvalid);
    CHECK(std::string(e.what()).find("sinth") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"synth": {"pv_sunrise": "08:10"}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"kind": "magic"}})"), Error);
  CHECK_THROWS_AS(parse_config(R"({"grid": {"participation": "all"}})"), Error);
  CHECK_THROWS_AS(parse_config("{not json"), Error);
}

TEST_CASE("bad flags exit with an error") {
  CHECK(cli({"--solver", "quantum"}).code == kExitError);
  CHECK(cli({"--frobnicate"}).code == kExitError);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("feeder sections accept explicit branches") {
  const RunConfig c = parse_config(R"({"feeder": {"bus_count": 3,
      "branches": [{"from": 1, "to": 2, "r_pu": 0.01, "x_pu": 0.01},
                   {"from": 2, "to": 3, "r_pu": 0.01, "x_pu": 0.01}]}})");
  CHECK(c.feeder.bus_count == 3);
  CHECK(c.feeder.branches[1].from == 1);
  CHECK(c.feeder.branches[1].to == 2);
  try {
    parse_config(R"({"feeder": {"bus_count": 3, "branches": [{"from": 1, "to": 2, "r_pu": 0.01, "x_pu": 0.01},
        {"from": 2, "to": 1, "r_pu": 0.01, "x_pu": 0.01}]}})");
    FAIL("expected ConfigInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kConfigInvalid);
    CHECK(std::string(e.what()).find("feeder") != std::string::npos);
  }
}

TEST_CASE("shipped grid file reproduces the built-in defaults") {
  const RunConfig shipped = load_config(fs::path(DSM_DATA_DIR) / "default_grid.json");
  const RunConfig defaults;
  CHECK(shipped.inputs().fingerprint() == defaults.inputs().fingerprint());
  CHECK(shipped.grid.cells().size() == defaults.grid.cells().size());
  for (std::size_t i = 0; i < shipped.grid.cells().size(); ++i) {
    CHECK(shipped.grid.cells()[i].name() == defaults.grid.cells()[i].name());
  }
}

TEST_CASE("single reference cell writes one report set") {
  const fs::path dir = scratch("reference");
  const auto cfg = write_file(dir / "c.json", kReferenceGrid);
  const Run r = cli({"--config", cfg.string(), "--out", (dir / "out").string()});
  REQUIRE(r.code == kExitOk);
  const fs::path cell = dir / "out" / "p0_pp0_pvoff";
  for (const char* f : {"loads.csv", "voltages.csv", "flows.csv", "losses.csv", "costs.csv", "metrics.csv"}) {
    CHECK(fs::exists(cell / f));
  }
  CHECK(fs::exists(dir / "out" / "summary.csv"));

  const CsvTable loads = read_csv(cell / "loads.csv");
  CHECK(loads.header == std::vector<std::string>{"slot", "household", "gross_kw", "billable_kw"});
  CHECK(loads.rows.size() == 48 * 30);
  for (const auto& row : loads.rows) CHECK(row[2] == row[3]);

  const CsvTable losses = read_csv(cell / "losses.csv");
  CHECK(losses.header == std::vector<std::string>{"slot", "loss_kw"});
  CHECK(losses.rows.size() == 48);
  CHECK(losses.rows.front()[0] == "00:00");
  CHECK(losses.rows.back()[0] == "23:30");

  CHECK(read_csv(cell / "voltages.csv").header == std::vector<std::string>{"slot", "bus", "v_pu"});
  CHECK(read_csv(cell / "voltages.csv").rows.size() == 48 * 31);
  CHECK(read_csv(cell / "flows.csv").header == std::vector<std::string>{"slot", "branch", "p_kw", "q_kvar"});
  CHECK(read_csv(cell / "costs.csv").header ==
        std::vector<std::string>{"household", "C_e", "C_p", "objective", "\xCE\x94T_total"});
  CHECK(read_csv(cell / "metrics.csv").header == std::vector<std::string>{"name", "value"});
}

TEST_CASE("small grid: penalty column, determinism and round trip") {
  const fs::path dir = scratch("grid");
  const auto cfg = write_file(dir / "c.json", kSmallGrid);
  const Run a = cli({"--config", cfg.string(), "--out", (dir / "a").string()});
  const Run b = cli({"--config", cfg.string(), "--out", (dir / "b").string()});
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);

  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path twin = dir / "b" / fs::relative(e.path(), dir / "a");
    CHECK(slurp(e.path()) == slurp(twin));
  }
  CHECK(files == 9 * 6 + 2);

  for (const char* cell : {"p4_pp0_pvoff", "p4_pp0_pvon", "p0_pp0_pvoff"}) {
    const CsvTable costs = read_csv(dir / "a" / cell / "costs.csv");
    for (const auto& row : costs.rows) CHECK(row[2] == "0.0000");
  }

  // Re-parsed values land within half a unit of the last printed digit.
  const RunConfig config = load_config(cfg);
  ScenarioSpec spec = config.grid.cells()[7];
  REQUIRE(spec.name() == "p4_pp5_pvon");
  const ScenarioResult res = run_scenario(spec, config.inputs());
  const fs::path cell = dir / "a" / spec.name();

  const CsvTable loads = read_csv(cell / "loads.csv");
  for (std::size_t i = 0; i < loads.rows.size(); ++i) {
    const auto& h = res.households[i % 30];
    const std::size_t t = i / 30;
    CHECK(std::abs(number(loads.rows[i][2]) - h.gross_kw[t]) <= 0.5e-6);
    CHECK(std::abs(number(loads.rows[i][3]) - h.billable_kw[t]) <= 0.5e-6);
  }
  const CsvTable volts = read_csv(cell / "voltages.csv");
  for (std::size_t i = 0; i < volts.rows.size(); ++i) {
    CHECK(std::abs(number(volts.rows[i][2]) - res.flows[i / 31].v_mag_pu[i % 31]) <= 0.5e-6);
  }
  const CsvTable flows = read_csv(cell / "flows.csv");
  for (std::size_t i = 0; i < flows.rows.size(); ++i) {
    CHECK(std::abs(number(flows.rows[i][2]) - res.flows[i / 30].branch_p_kw[i % 30]) <= 0.5e-6);
    CHECK(std::abs(number(flows.rows[i][3]) - res.flows[i / 30].branch_q_kvar[i % 30]) <= 0.5e-6);
  }
  const CsvTable costs = read_csv(cell / "costs.csv");
  for (std::size_t i = 0; i < costs.rows.size(); ++i) {
    const auto& c = res.households[i].cost;
    CHECK(std::abs(number(costs.rows[i][1]) - c.electricity_cost) <= 0.5e-4);
    CHECK(std::abs(number(costs.rows[i][2]) - c.penalty_cost) <= 0.5e-4);
    CHECK(std::abs(number(costs.rows[i][3]) - c.objective()) <= 0.5e-4);
    CHECK(costs.rows[i][4] == std::to_string(c.total_shift()));
  }
  const CsvTable metrics = read_csv(cell / "metrics.csv");
  CHECK(number(metrics.rows[0][1]) == *res.metrics.pv_utilization);
  CHECK(number(metrics.rows[1][1]) == res.metrics.end_voltage_variance);
  CHECK(number(metrics.rows[4][1]) == res.metrics.total_loss_kwh);
}

TEST_CASE("trend checks drive the exit status") {
  const fs::path dir = scratch("trends");
  // Every appliance pinned to its original slots: DSM has nothing to move and
  // the strict loss reduction cannot hold.
  ApplianceCatalog pinned = default_catalog();
  for (auto& cls : pinned.classes) {
    int start = TimeGrid::slot_at(6);
    for (auto& e : cls.appliances) {
      e.window_start = start;
      e.window_end = start + e.duration_slots - 1;
      start = start + e.duration_slots;
      if (start + 6 > TimeGrid::kSlotsPerDay) start = TimeGrid::slot_at(6);
    }
  }
  write_file(dir / "pinned.json", catalog_to_json(pinned));
  const auto cfg = write_file(dir / "c.json", R"({
    "catalog": "pinned.json",
    "grid": {"participation": [0, 16], "penalty_price": [0.0], "pv": [false], "pv_reference": false}
  })");
  const Run plain = cli({"--config", cfg.string(), "--out", (dir / "a").string()});
  CHECK(plain.code == kExitOk);
  const Run checked = cli({"--config", cfg.string(), "--out", (dir / "b").string(), "--check-trends"});
  CHECK(checked.code == kExitTrendFailed);
  CHECK(checked.out.find("T2 FAIL") != std::string::npos);
  const CsvTable trends = read_csv(dir / "b" / "trends.csv");
  CHECK(trends.rows.size() == 2);

  const auto ok = write_file(dir / "ok.json", kSmallGrid);
  CHECK(cli({"--config", ok.string(), "--out", (dir / "c").string(), "--check-trends"}).code == kExitOk);
}

TEST_CASE("seed and solver flags override the file") {
  const fs::path dir = scratch("flags");
  const auto cfg = write_file(dir / "c.json", kReferenceGrid);
  const Run a = cli({"--config", cfg.string(), "--out", (dir / "a").string(), "--seed", "9"});
  const Run b = cli({"--config", cfg.string(), "--out", (dir / "b").string()});
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);
  CHECK(slurp(dir / "a" / "p0_pp0_pvoff" / "loads.csv") != slurp(dir / "b" / "p0_pp0_pvoff" / "loads.csv"));
  CHECK(cli({"--config", cfg.string(), "--out", (dir / "c").string(), "--solver", "heuristic"}).code == kExitOk);
  CHECK(read_csv(dir / "c" / "summary.csv").rows.at(0).at(5) == "heuristic");
}

TEST_CASE("catalog dump round-trips") {
  const fs::path dir = scratch("dump");
  const Run r = cli({"--dump-catalog", (dir / "cat.json").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(catalog_to_json(load_catalog(dir / "cat.json")) == catalog_to_json(default_catalog()));
}

TEST_CASE("unwritable output directory") {
  const fs::path dir = scratch("unwritable");
  write_file(dir / "blocker", "x");
  const auto cfg = write_file(dir / "c.json", kReferenceGrid);
  const Run r = cli({"--config", cfg.string(), "--out", (dir / "blocker" / "out").string()});
  CHECK(r.code == kExitError);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("number formatting") {
  CHECK(format_fixed(-0.0, 4) == "0.0000");
  CHECK(format_fixed(-1e-9, 4) == "0.0000");
  CHECK(format_fixed(1.23456789, 6) == "1.234568");
  CHECK(format_exact(0.1) == "0.1");
  for (double v : {1.0 / 3.0, 2.0e-17, 123456.789, -4.5}) CHECK(number(format_exact(v)) == v);
}

TEST_CASE("installed binary runs") {
  const fs::path dir = scratch("binary");
  const auto cfg = write_file(dir / "c.json", kReferenceGrid);
  const std::string cmd = std::string("\"") + DSMSIM_EXE + "\" --config \"" + cfg.string() + "\" --out \"" +
                          (dir / "out").string() + "\" > \"" + (dir / "log.txt").string() + "\" 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "p0_pp0_pvoff" / "metrics.csv"));
  const std::string missing = std::string("\"") + DSMSIM_EXE + "\" --config \"" + (dir / "nope.json").string() +
                              "\" > /dev/null 2>&1";
  const int status = std::system(missing.c_str());
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == kExitError);
}

#include "dsm/cli.hpp"

#include <chrono>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "dsm/config.hpp"
#include "dsm/error.hpp"
#include "dsm/reports.hpp"

namespace dsm {

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string solver;
  bool check_trends = false;
  std::string dump_catalog;
};

int execute(const Flags& flags, std::ostream& out) {
  RunConfig config = flags.config.empty() ? RunConfig{} : load_config(flags.config);
  if (flags.seed) {
    config.synth.seed = *flags.seed;
    config.grid.seed = *flags.seed;
  }
  if (!flags.solver.empty()) config.grid.solver = parse_solver(flags.solver);
  if (!flags.out.empty()) config.output_dir = flags.out;

  if (!flags.dump_catalog.empty()) {
    std::ofstream file(flags.dump_catalog, std::ios::binary);
    file << catalog_to_json(config.catalog);
    if (!file) throw Error(Errc::kOutputUnwritable, "cannot write '" + flags.dump_catalog + "'");
    out << "catalog written to " << flags.dump_catalog << "\n";
    return kExitOk;
  }

  const auto started = std::chrono::steady_clock::now();
  const ScenarioInputs inputs = config.inputs();
  const auto results = run_grid(config.grid, inputs, default_thread_count());
  const std::filesystem::path root(config.output_dir);
  for (const auto& r : results) emit_reports(r, root / r.spec.name());
  write_summary(results, root);
  const auto trends = compare_scenarios(results);
  write_trends(trends, root);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  int budget_hits = 0;
  for (const auto& r : results) {
    for (const auto& h : r.households) {
      if (h.participating && h.status == SolveStatus::kBudgetExhausted) ++budget_hits;
    }
  }
  out << results.size() << " scenarios written to " << root.string() << " in "
      << format_fixed(seconds, 1) << " s\n";
  if (budget_hits > 0) {
    out << budget_hits << " household solves stopped at the search budget (best schedule kept)\n";
  }
  bool all_passed = true;
  for (const auto& c : trends) {
    out << c.id << " " << (c.passed ? "pass" : "FAIL") << "  " << c.description << "  [" << c.detail
        << "]\n";
    all_passed = all_passed && c.passed;
  }
  return flags.check_trends && !all_passed ? kExitTrendFailed : kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Household demand-side management simulator on a radial feeder"};
  Flags flags;
  app.add_option("--config", flags.config, "JSON run configuration");
  app.add_option("--out", flags.out, "Output directory (overrides the configuration)");
  app.add_option("--seed", flags.seed, "Seed for data synthesis and the heuristic solver");
  app.add_option("--solver", flags.solver, "exact or heuristic")
      ->check(CLI::IsMember({"exact", "heuristic"}));
  app.add_flag("--check-trends", flags.check_trends, "Exit with status 2 when a trend check fails");
  app.add_option("--dump-catalog", flags.dump_catalog, "Write the appliance catalog as JSON and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }
  try {
    return execute(flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace dsm

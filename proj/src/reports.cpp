#include "dsm/reports.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dsm/error.hpp"

namespace dsm {

std::string format_fixed(double value, int decimals) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
  std::string text(buf, r.ptr);
  if (text.front() == '-' && text.find_first_not_of("-0.") == std::string::npos) text.erase(0, 1);
  return text;
}

std::string format_exact(double value) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, r.ptr);
}

namespace {

namespace fs = std::filesystem;

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::string& header) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error(Errc::kOutputUnwritable, "cannot open '" + path.string() + "'");
    out_ << header << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << fields, first = false), ...);
    out_ << '\n';
  }

  fs::path close() {
    out_.close();
    if (!out_) throw Error(Errc::kOutputUnwritable, "failed writing '" + path_.string() + "'");
    return path_;
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(Errc::kOutputUnwritable, "cannot create directory '" + dir.string() + "'");
  }
}

std::string kw(double x) { return format_fixed(x, kPowerDecimals); }
std::string money(double x) { return format_fixed(x, kMoneyDecimals); }
std::string pu(double x) { return format_fixed(x, kVoltageDecimals); }

}  // namespace

std::vector<fs::path> emit_reports(const ScenarioResult& r, const fs::path& dir) {
  ensure_dir(dir);
  std::vector<fs::path> paths;
  const std::size_t T = r.flows.size();

  CsvWriter loads(dir / "loads.csv", "slot,household,gross_kw,billable_kw");
  for (std::size_t t = 0; t < T; ++t) {
    const std::string slot = TimeGrid::label(static_cast<int>(t));
    for (const auto& h : r.households) {
      loads.row(slot, h.household, kw(h.gross_kw[t]), kw(h.billable_kw[t]));
    }
  }
  paths.push_back(loads.close());

  CsvWriter volts(dir / "voltages.csv", "slot,bus,v_pu");
  for (std::size_t t = 0; t < T; ++t) {
    const std::string slot = TimeGrid::label(static_cast<int>(t));
    const auto& v = r.flows[t].v_mag_pu;
    for (std::size_t b = 0; b < v.size(); ++b) volts.row(slot, b + 1, pu(v[b]));
  }
  paths.push_back(volts.close());

  CsvWriter flows(dir / "flows.csv", "slot,branch,p_kw,q_kvar");
  for (std::size_t t = 0; t < T; ++t) {
    const std::string slot = TimeGrid::label(static_cast<int>(t));
    const auto& f = r.flows[t];
    for (std::size_t k = 0; k < f.branch_p_kw.size(); ++k) {
      flows.row(slot, k + 1, kw(f.branch_p_kw[k]), kw(f.branch_q_kvar[k]));
    }
  }
  paths.push_back(flows.close());

  CsvWriter losses(dir / "losses.csv", "slot,loss_kw");
  for (std::size_t t = 0; t < T; ++t) {
    losses.row(TimeGrid::label(static_cast<int>(t)), kw(r.flows[t].total_loss_kw));
  }
  paths.push_back(losses.close());

  CsvWriter costs(dir / "costs.csv", "household,C_e,C_p,objective,\xCE\x94T_total");
  for (const auto& h : r.households) {
    costs.row(h.household, money(h.cost.electricity_cost), money(h.cost.penalty_cost),
              money(h.cost.objective()), h.cost.total_shift());
  }
  paths.push_back(costs.close());

  const auto& m = r.metrics;
  CsvWriter metrics(dir / "metrics.csv", "name,value");
  metrics.row("pv_utilization", m.pv_utilization ? format_exact(*m.pv_utilization) : std::string("NA"));
  metrics.row("end_voltage_variance", format_exact(m.end_voltage_variance));
  metrics.row("end_voltage_max_deviation_pu", format_exact(m.end_voltage_max_deviation_pu));
  metrics.row("min_voltage_pu", format_exact(m.min_voltage_pu));
  metrics.row("total_loss_kwh", format_exact(m.total_loss_kwh));
  metrics.row("peak_window_loss_kwh", format_exact(m.peak_window_loss_kwh));
  metrics.row("peak_community_kw", format_exact(m.peak_community_kw));
  metrics.row("max_head_reverse_kw", format_exact(m.max_head_reverse_kw));
  metrics.row("reverse_flow_events", m.reverse_flow.size());
  paths.push_back(metrics.close());
  return paths;
}

fs::path write_summary(std::span<const ScenarioResult> results, const fs::path& dir) {
  ensure_dir(dir);
  CsvWriter out(dir / "summary.csv",
                "scenario,participation,penalty_price,pv,dsm,solver,optimal_homes,total_objective,"
                "pv_utilization,end_voltage_variance,end_voltage_max_deviation_pu,total_loss_kwh,"
                "peak_window_loss_kwh,max_head_reverse_kw,reverse_flow_events");
  for (const auto& r : results) {
    int optimal = 0;
    double objective = 0.0;
    for (const auto& h : r.households) {
      if (h.participating && h.status == SolveStatus::kOptimal) ++optimal;
      objective += h.cost.objective();
    }
    const auto& m = r.metrics;
    out.row(r.spec.name(), r.spec.participation, format_exact(r.spec.penalty_price),
            r.spec.pv_enabled ? "on" : "off", r.spec.dsm ? "on" : "off", to_string(r.spec.solver),
            optimal, money(objective),
            m.pv_utilization ? format_exact(*m.pv_utilization) : std::string("NA"),
            format_exact(m.end_voltage_variance), format_exact(m.end_voltage_max_deviation_pu),
            format_exact(m.total_loss_kwh), format_exact(m.peak_window_loss_kwh),
            format_exact(m.max_head_reverse_kw), m.reverse_flow.size());
  }
  return out.close();
}

fs::path write_trends(std::span<const TrendCheck> checks, const fs::path& dir) {
  ensure_dir(dir);
  CsvWriter out(dir / "trends.csv", "id,passed,description,detail");
  for (const auto& c : checks) {
    out.row(c.id, c.passed ? "pass" : "fail", c.description, c.detail);
  }
  return out.close();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(Errc::kConfigInvalid, "no column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kConfigInvalid, "cannot read '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
  };
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) table.header = split(line);
  while (std::getline(in, line)) table.rows.push_back(split(line));
  return table;
}

}  // namespace dsm

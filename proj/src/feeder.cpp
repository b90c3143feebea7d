#include "dsm/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <queue>

#include "dsm/error.hpp"

namespace dsm {

namespace {

using Complex = std::complex<double>;

// Per-branch impedance of the default chain, in pu on 0.4 kV / 100 kVA.
constexpr double kDefaultBranchR = 0.0016;
constexpr double kDefaultBranchX = 0.0008;
constexpr int kDefaultBusCount = 31;

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    x = parent[static_cast<std::size_t>(x)];
  }
  return x;
}

}  // namespace

Feeder Feeder::build(const FeederSpec& spec) {
  const int n = spec.bus_count;
  if (n < 1) throw Error(Errc::kNotRadial, "feeder needs at least one bus");
  if (static_cast<int>(spec.branches.size()) != n - 1) {
    throw Error(Errc::kNotRadial, std::to_string(n) + " buses need " + std::to_string(n - 1) +
                                      " branches, got " + std::to_string(spec.branches.size()));
  }
  if (!(spec.base_kva > 0.0) || !(spec.base_kv > 0.0) || !(spec.slack_voltage_pu > 0.0)) {
    throw Error(Errc::kBadImpedance, "base values and slack voltage must be positive");
  }
  std::vector<int> uf(static_cast<std::size_t>(n));
  std::iota(uf.begin(), uf.end(), 0);
  std::vector<std::vector<std::pair<int, int>>> adjacent(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < spec.branches.size(); ++k) {
    const auto& b = spec.branches[k];
    const std::string where = "branch " + std::to_string(k);
    if (b.from < 0 || b.from >= n || b.to < 0 || b.to >= n || b.from == b.to) {
      throw Error(Errc::kNotRadial, where + " has invalid end buses");
    }
    if (!(b.r_pu >= 0.0) || !(b.x_pu >= 0.0) || !std::isfinite(b.r_pu) ||
        !std::isfinite(b.x_pu) || (b.r_pu == 0.0 && b.x_pu == 0.0)) {
      throw Error(Errc::kBadImpedance, where + " needs non-negative, non-zero impedance");
    }
    const int ra = find_root(uf, b.from);
    const int rb = find_root(uf, b.to);
    if (ra == rb) throw Error(Errc::kNotRadial, where + " closes a loop");
    uf[static_cast<std::size_t>(ra)] = rb;
    adjacent[static_cast<std::size_t>(b.from)].emplace_back(b.to, static_cast<int>(k));
    adjacent[static_cast<std::size_t>(b.to)].emplace_back(b.from, static_cast<int>(k));
  }

  Feeder f;
  f.bus_count_ = n;
  f.base_kv_ = spec.base_kv;
  f.base_kva_ = spec.base_kva;
  f.slack_voltage_pu_ = spec.slack_voltage_pu;
  f.branches_.resize(spec.branches.size());
  f.feeding_branch_.assign(static_cast<std::size_t>(n), -1);
  f.depth_.assign(static_cast<std::size_t>(n), -1);
  std::queue<int> frontier;
  frontier.push(0);
  f.depth_[0] = 0;
  while (!frontier.empty()) {
    const int bus = frontier.front();
    frontier.pop();
    f.order_.push_back(bus);
    for (auto [next, k] : adjacent[static_cast<std::size_t>(bus)]) {
      if (f.depth_[static_cast<std::size_t>(next)] >= 0) continue;
      f.depth_[static_cast<std::size_t>(next)] = f.depth_[static_cast<std::size_t>(bus)] + 1;
      f.feeding_branch_[static_cast<std::size_t>(next)] = k;
      const auto& b = spec.branches[static_cast<std::size_t>(k)];
      f.branches_[static_cast<std::size_t>(k)] = Branch{bus, next, b.r_pu, b.x_pu};
      frontier.push(next);
    }
  }
  if (static_cast<int>(f.order_.size()) != n) {
    throw Error(Errc::kNotRadial, "not every bus is reachable from the slack");
  }
  return f;
}

int Feeder::end_bus() const {
  int best = 0;
  for (int b = 0; b < bus_count_; ++b) {
    if (depth_[static_cast<std::size_t>(b)] >= depth_[static_cast<std::size_t>(best)]) best = b;
  }
  return best;
}

std::vector<int> Feeder::head_branches() const {
  std::vector<int> heads;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    if (branches_[k].upstream == 0) heads.push_back(static_cast<int>(k));
  }
  return heads;
}

FeederSpec default_feeder_spec() {
  FeederSpec spec;
  spec.bus_count = kDefaultBusCount;
  for (int b = 1; b < kDefaultBusCount; ++b) {
    spec.branches.push_back({b - 1, b, kDefaultBranchR, kDefaultBranchX});
  }
  return spec;
}

PowerFlowResult solve_power_flow(const Feeder& f, const InjectionFrame& frame,
                                 const PowerFlowOptions& options) {
  const int n = f.bus_count();
  if (static_cast<int>(frame.load_kw.size()) != n || static_cast<int>(frame.load_kvar.size()) != n) {
    throw Error(Errc::kDimensionMismatch, "injection frame does not cover " + std::to_string(n) +
                                              " buses");
  }
  if (frame.load_kw[0] != 0.0 || frame.load_kvar[0] != 0.0) {
    throw Error(Errc::kInvalidInjection, "the slack bus carries no specified injection");
  }
  if (!(options.tolerance_pu > 0.0) || options.max_iterations < 1) {
    throw Error(Errc::kInvalidInjection, "tolerance and iteration cap must be positive");
  }
  const auto& order = f.sweep_order();
  const auto& branches = f.branches();
  std::vector<Complex> load(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) {
    load[static_cast<std::size_t>(b)] =
        Complex(frame.load_kw[static_cast<std::size_t>(b)], frame.load_kvar[static_cast<std::size_t>(b)]) /
        f.base_kva();
  }
  std::vector<Complex> v(static_cast<std::size_t>(n), Complex(f.slack_voltage_pu(), 0.0));
  std::vector<Complex> current(branches.size());

  // Branch currents from load currents at the given voltages, leaves first.
  auto backward = [&](const std::vector<Complex>& volts) {
    std::vector<Complex> bus_current(static_cast<std::size_t>(n));
    for (int b = 1; b < n; ++b) {
      bus_current[static_cast<std::size_t>(b)] =
          std::conj(load[static_cast<std::size_t>(b)] / volts[static_cast<std::size_t>(b)]);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int bus = *it;
      const int k = f.feeding_branch(bus);
      if (k < 0) continue;
      current[static_cast<std::size_t>(k)] = bus_current[static_cast<std::size_t>(bus)];
      bus_current[static_cast<std::size_t>(branches[static_cast<std::size_t>(k)].upstream)] +=
          bus_current[static_cast<std::size_t>(bus)];
    }
  };

  PowerFlowResult out;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    backward(v);
    double change = 0.0;
    for (int bus : order) {
      const int k = f.feeding_branch(bus);
      if (k < 0) continue;
      const auto& br = branches[static_cast<std::size_t>(k)];
      const Complex updated = v[static_cast<std::size_t>(br.upstream)] -
                              Complex(br.r_pu, br.x_pu) * current[static_cast<std::size_t>(k)];
      change = std::max(change, std::abs(updated - v[static_cast<std::size_t>(bus)]));
      v[static_cast<std::size_t>(bus)] = updated;
      if (std::abs(updated) < 0.5) {
        throw Error(Errc::kVoltageCollapse, "bus " + std::to_string(bus + 1) + " fell to " +
                                                std::to_string(std::abs(updated)) + " pu");
      }
    }
    out.iterations = iter;
    if (change < options.tolerance_pu) {
      out.converged = true;
      break;
    }
  }

  backward(v);
  out.branch_p_kw.resize(branches.size());
  out.branch_q_kvar.resize(branches.size());
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const auto& br = branches[k];
    const Complex i = current[k];
    const double i2 = std::norm(i);
    const Complex sending = v[static_cast<std::size_t>(br.downstream)] * std::conj(i) +
                            Complex(br.r_pu, br.x_pu) * i2;
    out.branch_p_kw[k] = sending.real() * f.base_kva();
    out.branch_q_kvar[k] = sending.imag() * f.base_kva();
    out.total_loss_kw += br.r_pu * i2 * f.base_kva();
  }
  for (int k : f.head_branches()) {
    out.slack_p_kw += out.branch_p_kw[static_cast<std::size_t>(k)];
    out.slack_q_kvar += out.branch_q_kvar[static_cast<std::size_t>(k)];
  }
  out.v_mag_pu.resize(static_cast<std::size_t>(n));
  out.v_angle_rad.resize(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) {
    out.v_mag_pu[static_cast<std::size_t>(b)] = std::abs(v[static_cast<std::size_t>(b)]);
    out.v_angle_rad[static_cast<std::size_t>(b)] = std::arg(v[static_cast<std::size_t>(b)]);
  }
  return out;
}

std::vector<PowerFlowResult> solve_time_series(const Feeder& f,
                                               std::span<const InjectionFrame> frames,
                                               const PowerFlowOptions& options) {
  std::vector<PowerFlowResult> results;
  results.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    try {
      results.push_back(solve_power_flow(f, frames[t], options));
    } catch (const Error& e) {
      throw Error(e.code(), "slot " + std::to_string(t) + ": " + e.what());
    }
  }
  return results;
}

namespace {

void require_converged(std::span<const PowerFlowResult> results) {
  for (std::size_t t = 0; t < results.size(); ++t) {
    if (!results[t].converged) {
      throw Error(Errc::kUnconvergedInput, "power flow at slot " + std::to_string(t) +
                                               " did not converge");
    }
  }
}

}  // namespace

std::vector<ReverseFlowEvent> reverse_flow_report(std::span<const PowerFlowResult> results,
                                                  double epsilon_kw) {
  require_converged(results);
  std::vector<ReverseFlowEvent> events;
  for (std::size_t t = 0; t < results.size(); ++t) {
    const auto& flows = results[t].branch_p_kw;
    for (std::size_t k = 0; k < flows.size(); ++k) {
      if (flows[k] < -epsilon_kw) {
        events.push_back({static_cast<int>(t), static_cast<int>(k), flows[k]});
      }
    }
  }
  return events;
}

VoltageMetrics voltage_metrics(const Feeder& f, std::span<const PowerFlowResult> results) {
  require_converged(results);
  VoltageMetrics m;
  m.end_bus = f.end_bus();
  double mean = 0.0;
  for (std::size_t t = 0; t < results.size(); ++t) {
    const double v = results[t].v_mag_pu[static_cast<std::size_t>(m.end_bus)];
    m.end_voltage_pu.push_back(v);
    mean += v;
    const double dev = std::abs(v - 1.0);
    if (dev > m.max_deviation_pu) {
      m.max_deviation_pu = dev;
      m.max_deviation_slot = static_cast<int>(t);
    }
  }
  if (results.empty()) return m;
  mean /= static_cast<double>(results.size());
  for (double v : m.end_voltage_pu) m.variance += (v - mean) * (v - mean);
  m.variance /= static_cast<double>(results.size());
  return m;
}

}  // namespace dsm

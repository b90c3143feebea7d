#pragma once

#include <span>
#include <vector>

#include "dsm/model.hpp"

namespace dsm {

/// Branch between two 0-based bus indices, per-unit series impedance.
struct BranchSpec {
  int from = 0;
  int to = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
};

struct FeederSpec {
  int bus_count = 0;
  std::vector<BranchSpec> branches;
  double base_kv = 0.4;
  double base_kva = 100.0;
  double slack_voltage_pu = 1.0;
};

/// Branch oriented away from the slack: `upstream` is the slack-side end.
/// Branch indices follow the order of the input branch list.
struct Branch {
  int upstream = 0;
  int downstream = 0;
  double r_pu = 0.0;
  double x_pu = 0.0;
};

/// Radial feeder rooted at bus 0 (the substation slack bus).
class Feeder {
 public:
  /// Throws NotRadial (wrong branch count, cycle, unreachable bus) or
  /// BadImpedance.
  static Feeder build(const FeederSpec& spec);

  int bus_count() const { return bus_count_; }
  const std::vector<Branch>& branches() const { return branches_; }
  double base_kv() const { return base_kv_; }
  double base_kva() const { return base_kva_; }
  double slack_voltage_pu() const { return slack_voltage_pu_; }

  /// Index of the branch feeding a bus (-1 for the slack).
  int feeding_branch(int bus) const { return feeding_branch_[static_cast<std::size_t>(bus)]; }
  int depth(int bus) const { return depth_[static_cast<std::size_t>(bus)]; }
  /// Buses in breadth-first order from the slack.
  const std::vector<int>& sweep_order() const { return order_; }
  /// Deepest bus (largest index among ties): the end of the feeder.
  int end_bus() const;
  /// Branches leaving the slack bus.
  std::vector<int> head_branches() const;

 private:
  int bus_count_ = 0;
  std::vector<Branch> branches_;
  double base_kv_ = 0.0;
  double base_kva_ = 0.0;
  double slack_voltage_pu_ = 1.0;
  std::vector<int> feeding_branch_;
  std::vector<int> depth_;
  std::vector<int> order_;
};

/// 31-bus chain, bus 0 (bus number 1) is the substation; every branch has the
/// same impedance. At 0.4 kV / 100 kVA the default branch impedance puts the
/// end of the feeder roughly 5 % below the slack at the community's original
/// evening peak.
FeederSpec default_feeder_spec();

/// Per-bus load at one slot. Positive = consumption; negative P is net
/// generation. The slack entry must be zero.
struct InjectionFrame {
  Series load_kw;
  Series load_kvar;
};

struct PowerFlowResult {
  std::vector<double> v_mag_pu;
  std::vector<double> v_angle_rad;
  /// Sending-end (slack-side) flow of every branch, positive toward the leaves.
  std::vector<double> branch_p_kw;
  std::vector<double> branch_q_kvar;
  double total_loss_kw = 0.0;
  double slack_p_kw = 0.0;
  double slack_q_kvar = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct PowerFlowOptions {
  double tolerance_pu = 1e-6;
  int max_iterations = 100;
};

/// Backward/forward sweep with constant-power loads from a flat start.
/// Iterates until the largest voltage change is below the tolerance; branch
/// flows and losses are then evaluated from the final voltages so that the
/// slack injection balances loads plus losses. Returns the last iterate with
/// converged = false if the iteration cap is hit; throws VoltageCollapse if
/// any magnitude drops below 0.5 pu.
PowerFlowResult solve_power_flow(const Feeder& feeder, const InjectionFrame& frame,
                                 const PowerFlowOptions& options = {});

/// Independent per-slot solves; errors carry the slot index.
std::vector<PowerFlowResult> solve_time_series(const Feeder& feeder,
                                               std::span<const InjectionFrame> frames,
                                               const PowerFlowOptions& options = {});

struct ReverseFlowEvent {
  int slot = 0;
  int branch = 0;
  double p_kw = 0.0;
};

/// All (slot, branch) pairs whose sending-end real flow is below -epsilon,
/// sorted by slot then branch. Throws UnconvergedInput.
std::vector<ReverseFlowEvent> reverse_flow_report(std::span<const PowerFlowResult> results,
                                                  double epsilon_kw = 1e-6);

struct VoltageMetrics {
  int end_bus = 0;
  Series end_voltage_pu;
  double max_deviation_pu = 0.0;
  int max_deviation_slot = 0;
  double variance = 0.0;
};

/// End-of-feeder voltage series, its largest deviation from 1.0 pu, and its
/// population variance over the day. Throws UnconvergedInput.
VoltageMetrics voltage_metrics(const Feeder& feeder, std::span<const PowerFlowResult> results);

}  // namespace dsm

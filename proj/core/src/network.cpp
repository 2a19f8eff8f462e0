#include "sccovert/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sccovert {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::charge: return "charge";
    case Phase::dead: return "dead";
    case Phase::discharge: return "discharge";
  }
  return "unknown";
}

bool Branch::conducts_in(Phase phase) const {
  switch (conduction) {
    case Conduction::always: return true;
    case Conduction::charge: return phase == Phase::charge;
    case Conduction::discharge: return phase == Phase::discharge;
  }
  return false;
}

Phase PhaseSchedule::phase_at(int step_in_period) const {
  int edge = 0;
  for (const auto& interval : intervals) {
    edge += interval.steps;
    if (step_in_period < edge) return interval.phase;
  }
  throw std::out_of_range("step index outside switching period");
}

PhaseSchedule make_schedule(double dead_time_fraction, int steps_per_period) {
  if (steps_per_period < 4 || steps_per_period % 2 != 0)
    throw std::invalid_argument("steps_per_period must be an even integer >= 4");
  if (!(dead_time_fraction >= 0.0 && dead_time_fraction < 0.5))
    throw std::invalid_argument("dead_time_fraction must satisfy 0 <= fraction < 0.5");
  int dead = static_cast<int>(std::lround(dead_time_fraction * steps_per_period));
  if (dead_time_fraction > 0.0) dead = std::max(dead, 1);
  const int half = steps_per_period / 2;
  const int on = half - dead;
  if (on < 1) throw std::invalid_argument("dead time leaves no conduction steps");
  return PhaseSchedule{steps_per_period,
                       {{{Phase::charge, on}, {Phase::dead, dead},
                         {Phase::discharge, on}, {Phase::dead, dead}}}};
}

std::optional<int> SwitchedNetwork::find_node(std::string_view name) const {
  for (std::size_t i = 0; i < node_names_.size(); ++i)
    if (node_names_[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

std::vector<std::size_t> SwitchedNetwork::capacitor_branches() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < branches_.size(); ++i)
    if (branches_[i].kind == BranchKind::capacitor) out.push_back(i);
  return out;
}

int SwitchedNetwork::add_node(std::string name) {
  node_names_.push_back(std::move(name));
  return static_cast<int>(node_names_.size() - 1);
}

std::size_t SwitchedNetwork::add_branch(Branch branch) {
  branches_.push_back(std::move(branch));
  return branches_.size() - 1;
}

SwitchedNetwork build_ladder(const ConverterSpec& spec) {
  require_valid(spec);
  if (!(spec.r_switch > 0.0))
    throw SpecError(std::vector<ValidationIssue>{{"r_switch", "switch resistance must be positive for a switched network"}});

  SwitchedNetwork net;
  net.spec_ = spec;
  net.add_node("gnd");
  const int vin = net.add_node("vin");
  net.supply_branch_ =
      net.add_branch({BranchKind::voltage_source, spec.v_in, vin, 0, Conduction::always, "V_in"});

  // A zero-ohm segment is a short: the far end is the near node.
  auto segment = [&net](int from, double r, const std::string& node, const std::string& name) {
    if (r == 0.0) return from;
    const int to = net.add_node(node);
    net.add_branch({BranchKind::resistor, r, from, to, Conduction::always, name});
    return to;
  };

  int trunk = segment(vin, spec.r_offchip, "root", "R_offchip");
  const auto n = spec.n_stages;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string k = std::to_string(i + 1);
    trunk = segment(trunk, spec.r_trunk[i], "t" + k, "R_trunk" + k);
    StageNodes stage{};
    stage.tap = segment(trunk, spec.r_branch[i], "in" + k, "R_branch" + k);
    stage.fly_top = net.add_node("c" + k + "p");
    stage.fly_bottom = net.add_node("c" + k + "n");
    stage.out = net.add_node("out" + k);
    const double r = spec.r_switch;
    net.add_branch({BranchKind::resistor, r, stage.tap, stage.fly_top, Conduction::charge, "S" + k + "a"});
    net.add_branch({BranchKind::resistor, r, stage.fly_bottom, stage.out, Conduction::charge, "S" + k + "b"});
    net.add_branch({BranchKind::resistor, r, stage.out, stage.fly_top, Conduction::discharge, "S" + k + "c"});
    net.add_branch({BranchKind::resistor, r, stage.fly_bottom, 0, Conduction::discharge, "S" + k + "d"});
    stage.fly_cap = net.add_branch(
        {BranchKind::capacitor, spec.c_fly[i], stage.fly_top, stage.fly_bottom, Conduction::always, "C" + k});
    stage.out_cap = net.add_branch(
        {BranchKind::capacitor, spec.c_out[i], stage.out, 0, Conduction::always, "CO" + k});
    net.stages_.push_back(stage);
  }
  return net;
}

}  // namespace sccovert

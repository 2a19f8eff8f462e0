#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sccovert/converter.hpp"

namespace sccovert {

enum class BranchKind { resistor, capacitor, voltage_source, current_source };

// Charge: flying cap between input tap and output.
// Discharge: flying cap between output and ground.
// Dead: every switch open.
enum class Phase { charge, dead, discharge };

// When a resistor conducts. Switches are resistors gated by a phase.
enum class Conduction { always, charge, discharge };

std::string_view to_string(Phase phase);

// Node 0 is ground.
struct Branch {
  BranchKind kind;
  double value;  // ohm, farad or volt
  int a;         // positive terminal
  int b;
  Conduction conduction = Conduction::always;
  std::string name;

  bool conducts_in(Phase phase) const;
};

struct StageNodes {
  int tap;         // input node after the branch segment
  int fly_top;     // flying cap terminal switched to tap / output
  int fly_bottom;  // flying cap terminal switched to output / ground
  int out;
  std::size_t fly_cap;  // branch indices
  std::size_t out_cap;
};

struct PhaseInterval {
  Phase phase;
  int steps;
};

// Integer step layout of one switching period:
// [charge, dead, discharge, dead]. Dead intervals are quantized to whole
// steps so topology changes always land on step boundaries.
struct PhaseSchedule {
  int steps_per_period;
  std::array<PhaseInterval, 4> intervals;

  Phase phase_at(int step_in_period) const;
  int dead_steps() const { return intervals[1].steps; }
};

PhaseSchedule make_schedule(double dead_time_fraction, int steps_per_period);

class SwitchedNetwork {
 public:
  const ConverterSpec& spec() const { return spec_; }
  std::size_t node_count() const { return node_names_.size(); }  // including ground
  const std::string& node_name(int node) const { return node_names_.at(static_cast<std::size_t>(node)); }
  std::optional<int> find_node(std::string_view name) const;
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<StageNodes>& stages() const { return stages_; }
  std::size_t supply_branch() const { return supply_branch_; }
  double period() const { return spec_.period(); }

  // Capacitor branch indices in branch order; this is the simulation state layout.
  std::vector<std::size_t> capacitor_branches() const;

 private:
  friend SwitchedNetwork build_ladder(const ConverterSpec& spec);

  int add_node(std::string name);
  std::size_t add_branch(Branch branch);

  ConverterSpec spec_;
  std::vector<std::string> node_names_;
  std::vector<Branch> branches_;
  std::vector<StageNodes> stages_;
  std::size_t supply_branch_ = 0;
};

// Expands a spec into the explicit switched RC network. Zero-ohm parasitic
// segments merge their end nodes. Throws SpecError for an invalid spec, or when
// r_switch is zero (switch conductance must be finite for transient analysis).
SwitchedNetwork build_ladder(const ConverterSpec& spec);

}  // namespace sccovert

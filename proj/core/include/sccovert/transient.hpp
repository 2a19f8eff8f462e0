#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sccovert/network.hpp"

namespace sccovert {

// What hangs on an output port. Current sinks draw a fixed current out of
// the port; an open port draws nothing.
struct PortLoad {
  enum class Kind { open, resistor, current_sink };
  Kind kind = Kind::open;
  double value = 0.0;

  static PortLoad open() { return {}; }
  static PortLoad resistor(double ohms) { return {Kind::resistor, ohms}; }
  static PortLoad current_sink(double amps) { return {Kind::current_sink, amps}; }

  bool operator==(const PortLoad&) const = default;
};

using LoadSet = std::vector<PortLoad>;

LoadSet open_loads(std::size_t n);
LoadSet resistive_loads(const std::vector<double>& ohms);

class AssemblyError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double time, const std::string& what);
  double time() const { return time_; }

 private:
  double time_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, std::size_t periods);
  double residual() const { return residual_; }
  std::size_t periods() const { return periods_; }

 private:
  double residual_;
  std::size_t periods_;
};

// Modified nodal analysis of one phase topology. Unknowns are the non-ground
// node voltages followed by voltage-source currents. Capacitors appear only in
// `capacitance`; a backward-difference step solves
//   (G + C/h) x_{n+1} = b + (C/h) x_n.
// Islands with no path to ground (isolated flying capacitors during dead
// time) get one node pinned to 0 V; their rows in G, C and b are replaced by
// the pin equation v = 0, so `capacitance` is zero on those rows.
struct PhaseSystem {
  Eigen::MatrixXd conductance;
  Eigen::MatrixXd capacitance;
  Eigen::VectorXd sources;
  std::vector<int> pinned_nodes;
  std::size_t node_unknowns = 0;
};

// Throws AssemblyError if a node has no conducting, capacitive or source
// element attached in this phase, or if `loads` has the wrong size.
PhaseSystem assemble_phase_system(const SwitchedNetwork& network, Phase phase,
                                  const LoadSet& loads = {});

struct StepPolicy {
  int steps_per_period = 512;
};

enum class InitialCondition { ideal, zero };

struct SimState {
  Eigen::VectorXd node_voltages;        // indexed by node id, ground included
  Eigen::VectorXd capacitor_voltages;   // SwitchedNetwork::capacitor_branches() order
  double time = 0.0;
  long long step = 0;
  Phase phase = Phase::charge;          // topology of the most recent step
};

struct PeriodMeans {
  Eigen::VectorXd node_voltages;
  double supply_current = 0.0;  // A delivered by V_in
  double load_power = 0.0;      // W absorbed by all port loads
};

// Fixed-step backward-Euler simulator. Each phase topology is factorized once
// per load set; stepping is a triangular solve.
class TransientSimulator {
 public:
  TransientSimulator(SwitchedNetwork network, LoadSet loads, StepPolicy policy = {},
                     InitialCondition initial = InitialCondition::ideal);

  const SwitchedNetwork& network() const { return network_; }
  const PhaseSchedule& schedule() const { return schedule_; }
  const LoadSet& loads() const { return loads_; }
  void set_loads(LoadSet loads);

  void step();
  void run_steps(long long count);
  // Requires a period boundary; returns means over the period.
  PeriodMeans run_period();
  // Jumps to the periodic steady state for the current loads by solving the
  // affine one-period map of the capacitor voltages. Requires a period
  // boundary. Costs (capacitors + 1) simulated periods.
  void settle_periodic();

  double time() const { return time_; }
  long long step_index() const { return step_; }
  int steps_per_period() const { return schedule_.steps_per_period; }
  double step_size() const { return h_; }
  bool at_period_boundary() const { return step_ % schedule_.steps_per_period == 0; }
  Phase phase() const { return phase_; }

  const Eigen::VectorXd& node_voltages() const { return node_voltages_; }
  double node_voltage(int node) const { return node_voltages_[node]; }
  const Eigen::VectorXd& capacitor_voltages() const { return cap_voltages_; }
  // Currents into the positive terminal of each capacitor over the last step.
  const Eigen::VectorXd& capacitor_currents() const { return cap_currents_; }
  double supply_current() const { return supply_current_; }
  double load_power() const;

  SimState state() const;
  void restore(const SimState& state);
  void set_capacitor_voltages(const Eigen::VectorXd& voltages);

 private:
  struct Factored {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::VectorXd sources;
    std::vector<int> pinned_rows;
  };
  void factorize();
  const Factored& system_for(Phase phase) const;

  SwitchedNetwork network_;
  LoadSet loads_;
  PhaseSchedule schedule_;
  double h_;
  std::vector<std::size_t> cap_branches_;
  Eigen::VectorXd cap_values_;
  std::size_t node_unknowns_ = 0;
  std::size_t unknowns_ = 0;
  Factored charge_, dead_, discharge_;

  Eigen::VectorXd node_voltages_;
  Eigen::VectorXd cap_voltages_;
  Eigen::VectorXd cap_currents_;
  Eigen::VectorXd rhs_, solution_;
  double supply_current_ = 0.0;
  double time_ = 0.0;
  long long step_ = 0;
  Phase phase_ = Phase::charge;
};

// Uniformly sampled signals. Output voltages are named "out<k>", input taps
// "in<k>", the supply current "i_supply" and flying capacitor currents
// "i_c<k>" (k is 1-based).
struct TransientTrace {
  double start_time = 0.0;      // time stamp of sample 0
  double sample_period = 0.0;
  int samples_per_period = 0;   // samples per switching period
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [signal][sample]
  std::vector<std::size_t> period_markers;  // first sample of each switching period

  std::size_t size() const { return values.empty() ? 0 : values.front().size(); }
  double time_at(std::size_t sample) const { return start_time + sample * sample_period; }
  std::size_t signal_index(std::string_view name) const;
  const std::vector<double>& signal(std::string_view name) const;
};

enum class RecordMode {
  every_step,   // one sample per integration step
  period_mean,  // one sample per switching period, the mean over that period
};

// Collects a trace from a running simulator. Call sample() after each step.
class TraceRecorder {
 public:
  TraceRecorder(const TransientSimulator& sim, RecordMode mode);
  void sample(const TransientSimulator& sim);
  const TransientTrace& trace() const { return trace_; }
  TransientTrace take() { return std::move(trace_); }

 private:
  RecordMode mode_;
  std::vector<int> voltage_nodes_;
  std::vector<std::size_t> cap_index_;
  std::vector<double> accum_;
  int count_ = 0;
  bool started_ = false;
  TransientTrace trace_;
};

struct TraceOptions {
  RecordMode mode = RecordMode::every_step;
  InitialCondition initial = InitialCondition::ideal;
};

// Simulates from t = 0 for `duration` (rounded to whole steps). Zero duration
// yields an empty trace; a duration shorter than one switching period is
// rejected.
TransientTrace run_transient(const SwitchedNetwork& network, const LoadSet& loads,
                             double duration, StepPolicy policy = {},
                             TraceOptions options = {});

struct SampleWindow {
  std::size_t first = 0;
  std::size_t count = 0;
};

// Mean of every signal over the window. The window must start on a period
// marker and span whole switching periods (std::invalid_argument otherwise).
std::vector<double> periodic_average(const TransientTrace& trace, SampleWindow window);

struct SteadyStateOptions {
  double tolerance = 10e-6;        // V, change of per-period output mean
  std::size_t max_periods = 20000;
  bool accelerate = false;         // start from the periodic fixed point
  StepPolicy policy;
  InitialCondition initial = InitialCondition::ideal;
};

struct SteadyStateResult {
  SimState state;
  std::size_t periods = 0;          // simulated periods, probe periods excluded
  double residual = 0.0;
  std::vector<double> residual_history;
  PeriodMeans last_period;
};

// Runs whole periods until every output's period mean moves by less than the
// tolerance. Throws ConvergenceError past max_periods.
SteadyStateResult settle(TransientSimulator& sim, const SteadyStateOptions& options);
SteadyStateResult detect_steady_state(const SwitchedNetwork& network, const LoadSet& loads,
                                      const SteadyStateOptions& options = {});

// CSV with header `time_s,<signal names>`, shortest round-trip doubles.
void write_trace_csv(std::ostream& out, const TransientTrace& trace);

}  // namespace sccovert

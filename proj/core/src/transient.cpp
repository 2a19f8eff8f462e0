#include "sccovert/transient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sccovert/csv.hpp"

namespace sccovert {

LoadSet open_loads(std::size_t n) { return LoadSet(n, PortLoad::open()); }

LoadSet resistive_loads(const std::vector<double>& ohms) {
  LoadSet loads;
  loads.reserve(ohms.size());
  for (double r : ohms) loads.push_back(PortLoad::resistor(r));
  return loads;
}

DivergenceError::DivergenceError(double time, const std::string& what)
    : std::runtime_error(what), time_(time) {}

ConvergenceError::ConvergenceError(double residual, std::size_t periods)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "steady state not reached after " << periods
            << " periods (residual " << residual << " V)";
        return msg.str();
      }()),
      residual_(residual),
      periods_(periods) {}

namespace {

struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

void stamp_pair(Eigen::MatrixXd& m, int a, int b, double value) {
  if (a > 0) m(a - 1, a - 1) += value;
  if (b > 0) m(b - 1, b - 1) += value;
  if (a > 0 && b > 0) {
    m(a - 1, b - 1) -= value;
    m(b - 1, a - 1) -= value;
  }
}

}  // namespace

PhaseSystem assemble_phase_system(const SwitchedNetwork& network, Phase phase,
                                  const LoadSet& loads) {
  const auto& stages = network.stages();
  if (!loads.empty() && loads.size() != stages.size())
    throw AssemblyError("load set size does not match the number of stages");

  const std::size_t nodes = network.node_count();
  const std::size_t nu = nodes - 1;
  std::size_t vsources = 0;
  for (const auto& br : network.branches())
    if (br.kind == BranchKind::voltage_source) ++vsources;

  PhaseSystem sys;
  sys.node_unknowns = nu;
  const auto dim = static_cast<Eigen::Index>(nu + vsources);
  sys.conductance = Eigen::MatrixXd::Zero(dim, dim);
  sys.capacitance = Eigen::MatrixXd::Zero(dim, dim);
  sys.sources = Eigen::VectorXd::Zero(dim);

  DisjointSet islands(nodes);
  std::vector<int> incident(nodes, 0);
  auto connect = [&](int a, int b) {
    islands.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    ++incident[static_cast<std::size_t>(a)];
    ++incident[static_cast<std::size_t>(b)];
  };

  std::size_t vs_index = 0;
  for (const auto& br : network.branches()) {
    switch (br.kind) {
      case BranchKind::resistor:
        if (!br.conducts_in(phase)) break;
        stamp_pair(sys.conductance, br.a, br.b, 1.0 / br.value);
        connect(br.a, br.b);
        break;
      case BranchKind::capacitor:
        stamp_pair(sys.capacitance, br.a, br.b, br.value);
        connect(br.a, br.b);
        break;
      case BranchKind::voltage_source: {
        const auto k = static_cast<Eigen::Index>(nu + vs_index++);
        if (br.a > 0) {
          sys.conductance(br.a - 1, k) += 1.0;
          sys.conductance(k, br.a - 1) += 1.0;
        }
        if (br.b > 0) {
          sys.conductance(br.b - 1, k) -= 1.0;
          sys.conductance(k, br.b - 1) -= 1.0;
        }
        sys.sources[k] = br.value;
        connect(br.a, br.b);
        break;
      }
      case BranchKind::current_source:
        if (br.a > 0) sys.sources[br.a - 1] -= br.value;
        if (br.b > 0) sys.sources[br.b - 1] += br.value;
        break;
    }
  }

  for (std::size_t i = 0; i < loads.size(); ++i) {
    const int out = stages[i].out;
    switch (loads[i].kind) {
      case PortLoad::Kind::open: break;
      case PortLoad::Kind::resistor:
        if (!(loads[i].value > 0.0)) throw AssemblyError("load resistance must be positive");
        stamp_pair(sys.conductance, out, 0, 1.0 / loads[i].value);
        connect(out, 0);
        break;
      case PortLoad::Kind::current_sink:
        sys.sources[out - 1] -= loads[i].value;
        break;
    }
  }

  for (std::size_t n = 1; n < nodes; ++n) {
    if (incident[n] == 0) {
      throw AssemblyError("node '" + network.node_name(static_cast<int>(n)) +
                          "' has no conducting or capacitive path in " +
                          std::string(to_string(phase)) + " phase");
    }
  }

  // One reference per island that cannot reach ground.
  const std::size_t ground_root = islands.find(0);
  std::vector<bool> seen(nodes, false);
  for (std::size_t n = 1; n < nodes; ++n) {
    const std::size_t root = islands.find(n);
    if (root == ground_root || seen[root]) continue;
    seen[root] = true;
    const auto row = static_cast<Eigen::Index>(n - 1);
    sys.conductance.row(row).setZero();
    sys.conductance(row, row) = 1.0;
    sys.capacitance.row(row).setZero();
    sys.sources[row] = 0.0;
    sys.pinned_nodes.push_back(static_cast<int>(n));
  }
  return sys;
}

TransientSimulator::TransientSimulator(SwitchedNetwork network, LoadSet loads, StepPolicy policy,
                                       InitialCondition initial)
    : network_(std::move(network)),
      loads_(std::move(loads)),
      schedule_(make_schedule(network_.spec().dead_time_fraction, policy.steps_per_period)),
      h_(network_.period() / policy.steps_per_period),
      cap_branches_(network_.capacitor_branches()) {
  if (loads_.empty()) loads_ = open_loads(network_.stages().size());
  if (loads_.size() != network_.stages().size())
    throw std::invalid_argument("load set size does not match the number of stages");

  node_unknowns_ = network_.node_count() - 1;
  unknowns_ = node_unknowns_;
  for (const auto& br : network_.branches())
    if (br.kind == BranchKind::voltage_source) ++unknowns_;

  const auto m = static_cast<Eigen::Index>(cap_branches_.size());
  cap_values_.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) cap_values_[j] = network_.branches()[cap_branches_[j]].value;

  cap_voltages_ = Eigen::VectorXd::Zero(m);
  cap_currents_ = Eigen::VectorXd::Zero(m);
  if (initial == InitialCondition::ideal) {
    const double half = 0.5 * network_.spec().v_in;
    for (const auto& stage : network_.stages()) {
      for (Eigen::Index j = 0; j < m; ++j) {
        if (cap_branches_[j] == stage.fly_cap || cap_branches_[j] == stage.out_cap)
          cap_voltages_[j] = half;
      }
    }
  }
  node_voltages_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(network_.node_count()));
  rhs_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknowns_));
  solution_ = rhs_;
  factorize();
}

void TransientSimulator::factorize() {
  auto build = [&](Phase phase) {
    PhaseSystem sys = assemble_phase_system(network_, phase, loads_);
    Factored f;
    f.lu.compute(sys.conductance + sys.capacitance / h_);
    f.sources = std::move(sys.sources);
    for (int node : sys.pinned_nodes) f.pinned_rows.push_back(node - 1);
    return f;
  };
  charge_ = build(Phase::charge);
  dead_ = build(Phase::dead);
  discharge_ = build(Phase::discharge);
}

const TransientSimulator::Factored& TransientSimulator::system_for(Phase phase) const {
  switch (phase) {
    case Phase::charge: return charge_;
    case Phase::dead: return dead_;
    case Phase::discharge: return discharge_;
  }
  return dead_;
}

void TransientSimulator::set_loads(LoadSet loads) {
  if (loads.size() != network_.stages().size())
    throw std::invalid_argument("load set size does not match the number of stages");
  if (loads == loads_) return;
  loads_ = std::move(loads);
  factorize();
}

void TransientSimulator::step() {
  const int k = static_cast<int>(step_ % schedule_.steps_per_period);
  const Phase phase = schedule_.phase_at(k);
  const Factored& sys = system_for(phase);

  rhs_ = sys.sources;
  const auto& branches = network_.branches();
  for (Eigen::Index j = 0; j < cap_voltages_.size(); ++j) {
    const Branch& br = branches[cap_branches_[j]];
    const double hist = cap_values_[j] / h_ * cap_voltages_[j];
    if (br.a > 0) rhs_[br.a - 1] += hist;
    if (br.b > 0) rhs_[br.b - 1] -= hist;
  }
  for (int row : sys.pinned_rows) rhs_[row] = 0.0;

  solution_ = sys.lu.solve(rhs_);
  if (!solution_.allFinite())
    throw DivergenceError(time_ + h_, "non-finite state at t = " + format_double(time_ + h_) + " s");

  node_voltages_[0] = 0.0;
  node_voltages_.tail(static_cast<Eigen::Index>(node_unknowns_)) =
      solution_.head(static_cast<Eigen::Index>(node_unknowns_));
  for (Eigen::Index j = 0; j < cap_voltages_.size(); ++j) {
    const Branch& br = branches[cap_branches_[j]];
    const double v = node_voltages_[br.a] - node_voltages_[br.b];
    cap_currents_[j] = cap_values_[j] / h_ * (v - cap_voltages_[j]);
    cap_voltages_[j] = v;
  }
  // The supply is the first voltage source.
  supply_current_ = -solution_[static_cast<Eigen::Index>(node_unknowns_)];

  ++step_;
  time_ = static_cast<double>(step_) * h_;
  phase_ = phase;
}

void TransientSimulator::run_steps(long long count) {
  for (long long i = 0; i < count; ++i) step();
}

double TransientSimulator::load_power() const {
  double p = 0.0;
  const auto& stages = network_.stages();
  for (std::size_t i = 0; i < loads_.size(); ++i) {
    const double v = node_voltages_[stages[i].out];
    if (loads_[i].kind == PortLoad::Kind::resistor) p += v * v / loads_[i].value;
    if (loads_[i].kind == PortLoad::Kind::current_sink) p += v * loads_[i].value;
  }
  return p;
}

PeriodMeans TransientSimulator::run_period() {
  if (!at_period_boundary()) throw std::logic_error("run_period requires a period boundary");
  PeriodMeans means;
  means.node_voltages = Eigen::VectorXd::Zero(node_voltages_.size());
  const int n = schedule_.steps_per_period;
  for (int i = 0; i < n; ++i) {
    step();
    means.node_voltages += node_voltages_;
    means.supply_current += supply_current_;
    means.load_power += load_power();
  }
  means.node_voltages /= n;
  means.supply_current /= n;
  means.load_power /= n;
  return means;
}

void TransientSimulator::settle_periodic() {
  if (!at_period_boundary()) throw std::logic_error("settle_periodic requires a period boundary");
  const auto m = cap_voltages_.size();
  TransientSimulator probe = *this;
  const int n = schedule_.steps_per_period;

  probe.set_capacitor_voltages(Eigen::VectorXd::Zero(m));
  probe.run_steps(n);
  const Eigen::VectorXd offset = probe.cap_voltages_;

  Eigen::MatrixXd map(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    probe.step_ = step_;
    probe.set_capacitor_voltages(Eigen::VectorXd::Unit(m, j));
    probe.run_steps(n);
    map.col(j) = probe.cap_voltages_ - offset;
  }
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m) - map;
  Eigen::VectorXd fixed = lhs.fullPivLu().solve(offset);
  if (!fixed.allFinite()) throw DivergenceError(time_, "periodic steady state is not unique");
  set_capacitor_voltages(fixed);
}

SimState TransientSimulator::state() const {
  return SimState{node_voltages_, cap_voltages_, time_, step_, phase_};
}

void TransientSimulator::restore(const SimState& state) {
  if (state.capacitor_voltages.size() != cap_voltages_.size() ||
      state.node_voltages.size() != node_voltages_.size())
    throw std::invalid_argument("state does not match this network");
  node_voltages_ = state.node_voltages;
  cap_voltages_ = state.capacitor_voltages;
  time_ = state.time;
  step_ = state.step;
  phase_ = state.phase;
}

void TransientSimulator::set_capacitor_voltages(const Eigen::VectorXd& voltages) {
  if (voltages.size() != cap_voltages_.size())
    throw std::invalid_argument("capacitor voltage vector has the wrong size");
  cap_voltages_ = voltages;
}

std::size_t TransientTrace::signal_index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::out_of_range("trace has no signal '" + std::string(name) + "'");
}

const std::vector<double>& TransientTrace::signal(std::string_view name) const {
  return values[signal_index(name)];
}

TraceRecorder::TraceRecorder(const TransientSimulator& sim, RecordMode mode) : mode_(mode) {
  const auto& net = sim.network();
  const auto& stages = net.stages();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    trace_.names.push_back("out" + std::to_string(i + 1));
    voltage_nodes_.push_back(stages[i].out);
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    trace_.names.push_back("in" + std::to_string(i + 1));
    voltage_nodes_.push_back(stages[i].tap);
  }
  trace_.names.push_back("i_supply");
  const auto caps = net.capacitor_branches();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    trace_.names.push_back("i_c" + std::to_string(i + 1));
    const auto it = std::find(caps.begin(), caps.end(), stages[i].fly_cap);
    cap_index_.push_back(static_cast<std::size_t>(it - caps.begin()));
  }
  trace_.values.resize(trace_.names.size());
  accum_.assign(trace_.names.size(), 0.0);

  const int spp = sim.steps_per_period();
  if (mode_ == RecordMode::every_step) {
    trace_.sample_period = sim.step_size();
    trace_.samples_per_period = spp;
    trace_.start_time = sim.time() + sim.step_size();
  } else {
    if (!sim.at_period_boundary())
      throw std::logic_error("period-mean recording must start on a period boundary");
    trace_.sample_period = sim.network().period();
    trace_.samples_per_period = 1;
    trace_.start_time = sim.time();
  }
}

void TraceRecorder::sample(const TransientSimulator& sim) {
  const std::size_t nv = voltage_nodes_.size();
  auto value = [&](std::size_t s) {
    if (s < nv) return sim.node_voltage(voltage_nodes_[s]);
    if (s == nv) return sim.supply_current();
    return sim.capacitor_currents()[static_cast<Eigen::Index>(cap_index_[s - nv - 1])];
  };

  if (mode_ == RecordMode::every_step) {
    if ((sim.step_index() - 1) % sim.steps_per_period() == 0)
      trace_.period_markers.push_back(trace_.size());
    for (std::size_t s = 0; s < accum_.size(); ++s) trace_.values[s].push_back(value(s));
    return;
  }
  for (std::size_t s = 0; s < accum_.size(); ++s) accum_[s] += value(s);
  if (++count_ == sim.steps_per_period()) {
    trace_.period_markers.push_back(trace_.size());
    for (std::size_t s = 0; s < accum_.size(); ++s) {
      trace_.values[s].push_back(accum_[s] / count_);
      accum_[s] = 0.0;
    }
    count_ = 0;
  }
}

TransientTrace run_transient(const SwitchedNetwork& network, const LoadSet& loads, double duration,
                             StepPolicy policy, TraceOptions options) {
  if (!(duration >= 0.0) || !std::isfinite(duration))
    throw std::invalid_argument("duration must be finite and non-negative");
  TransientSimulator sim(network, loads, policy, options.initial);
  TraceRecorder recorder(sim, options.mode);
  const auto steps = static_cast<long long>(std::llround(duration / sim.step_size()));
  if (steps == 0) return recorder.take();
  if (steps < sim.steps_per_period())
    throw std::invalid_argument("duration must cover at least one switching period");
  for (long long i = 0; i < steps; ++i) {
    sim.step();
    recorder.sample(sim);
  }
  return recorder.take();
}

std::vector<double> periodic_average(const TransientTrace& trace, SampleWindow window) {
  if (trace.samples_per_period <= 0) throw std::invalid_argument("trace has no period information");
  if (window.count == 0 || window.first + window.count > trace.size())
    throw std::invalid_argument("averaging window lies outside the trace");
  if (!std::binary_search(trace.period_markers.begin(), trace.period_markers.end(), window.first) ||
      window.count % static_cast<std::size_t>(trace.samples_per_period) != 0)
    throw std::invalid_argument("averaging window is not aligned to whole switching periods");

  std::vector<double> means;
  means.reserve(trace.values.size());
  for (const auto& series : trace.values) {
    const auto begin = series.begin() + static_cast<std::ptrdiff_t>(window.first);
    const double sum = std::accumulate(begin, begin + static_cast<std::ptrdiff_t>(window.count), 0.0);
    means.push_back(sum / static_cast<double>(window.count));
  }
  return means;
}

SteadyStateResult settle(TransientSimulator& sim, const SteadyStateOptions& options) {
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("steady-state tolerance must be positive");
  while (!sim.at_period_boundary()) sim.step();
  if (options.accelerate) sim.settle_periodic();

  const auto& stages = sim.network().stages();
  SteadyStateResult result;
  PeriodMeans prev = sim.run_period();
  result.periods = 1;
  while (true) {
    PeriodMeans cur = sim.run_period();
    ++result.periods;
    double residual = 0.0;
    for (const auto& stage : stages)
      residual = std::max(residual, std::abs(cur.node_voltages[stage.out] - prev.node_voltages[stage.out]));
    result.residual = residual;
    result.residual_history.push_back(residual);
    prev = std::move(cur);
    if (residual < options.tolerance) break;
    if (result.periods >= options.max_periods) throw ConvergenceError(residual, result.periods);
  }
  result.state = sim.state();
  result.last_period = std::move(prev);
  return result;
}

SteadyStateResult detect_steady_state(const SwitchedNetwork& network, const LoadSet& loads,
                                      const SteadyStateOptions& options) {
  if (!(options.tolerance > 0.0)) throw std::invalid_argument("steady-state tolerance must be positive");
  TransientSimulator sim(network, loads, options.policy, options.initial);
  return settle(sim, options);
}

void write_trace_csv(std::ostream& out, const TransientTrace& trace) {
  out << "time_s";
  for (const auto& name : trace.names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << format_double(trace.time_at(i));
    for (const auto& series : trace.values) out << ',' << format_double(series[i]);
    out << '\n';
  }
}

}  // namespace sccovert

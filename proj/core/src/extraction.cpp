#include "sccovert/extraction.hpp"

#include <sstream>
#include <stdexcept>

#include "sccovert/parallel.hpp"

namespace sccovert {

std::string to_string(ExtractionMode mode) {
  return mode == ExtractionMode::current_source ? "current" : "resistor";
}

Eigen::VectorXd measure_outputs(const SwitchedNetwork& network, const LoadSet& loads,
                                const ExtractionOptions& options) {
  if (options.window_periods < 1) throw std::invalid_argument("averaging window must span at least one period");
  TransientSimulator sim(network, loads, options.policy);
  SteadyStateOptions ss;
  ss.tolerance = options.tolerance;
  ss.max_periods = options.max_periods;
  ss.accelerate = options.accelerate;
  ss.policy = options.policy;
  settle(sim, ss);

  const auto& stages = network.stages();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(stages.size()));
  for (int p = 0; p < options.window_periods; ++p) {
    const PeriodMeans means = sim.run_period();
    for (std::size_t i = 0; i < stages.size(); ++i)
      sum[static_cast<Eigen::Index>(i)] += means.node_voltages[stages[i].out];
  }
  return sum / options.window_periods;
}

Eigen::VectorXd extract_targets(const SwitchedNetwork& network, const ExtractionOptions& options) {
  return measure_outputs(network, open_loads(network.stages().size()), options);
}

namespace {

bool collapsed(const Eigen::VectorXd& v_out, const Eigen::VectorXd& v_tr) {
  return ((v_out.array() - 0.1 * v_tr.array()) < 0.0).any();
}

std::string nonlinear_warning(std::size_t port) {
  std::ostringstream msg;
  msg << "port " << port + 1 << " excitation drove an output below 10% of its target: "
      << "nonlinear region, result flagged";
  return msg.str();
}

}  // namespace

ColumnExtraction extract_r_column(const SwitchedNetwork& network, std::size_t port,
                                  const ExtractionOptions& options, std::optional<Eigen::VectorXd> v_tr) {
  const std::size_t n = network.stages().size();
  if (port >= n) throw std::out_of_range("port index out of range");
  if (!(options.i_test != 0.0)) throw std::invalid_argument("test current must be non-zero");
  if (!v_tr) v_tr = extract_targets(network, options);

  LoadSet loads(n, PortLoad::current_sink(0.0));
  loads[port] = PortLoad::current_sink(options.i_test);
  const Eigen::VectorXd v_out = measure_outputs(network, loads, options);

  const double injected = -options.i_test;
  return ColumnExtraction{(v_out - *v_tr) / injected, collapsed(v_out, *v_tr)};
}

ExtractionResult extract_r_matrix(const SwitchedNetwork& network, const ExtractionOptions& options) {
  const std::size_t n = network.stages().size();
  ExtractionResult result;
  result.mode = ExtractionMode::current_source;
  result.f_sw = network.spec().f_sw;
  result.i_test = options.i_test;
  result.window_periods = options.window_periods;
  result.r.v_tr = extract_targets(network, options);
  result.r.r.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  std::vector<ColumnExtraction> columns(n);
  parallel_for(n, options.jobs, [&](std::size_t j) {
    columns[j] = extract_r_column(network, j, options, result.r.v_tr);
  });
  for (std::size_t j = 0; j < n; ++j) {
    result.r.r.col(static_cast<Eigen::Index>(j)) = columns[j].column;
    if (columns[j].nonlinear) result.warnings.push_back(nonlinear_warning(j));
  }
  return result;
}

ExtractionResult extract_with_resistors(const SwitchedNetwork& network, double r_fixed, double r_open,
                                        const ExtractionOptions& options) {
  if (!(r_fixed > 0.0)) throw std::invalid_argument("fixed test resistance must be positive");
  if (!(r_open >= 1e4 * r_fixed))
    throw std::invalid_argument("open-port resistance must be at least 1e4 times the fixed resistance");

  const std::size_t n = network.stages().size();
  ExtractionResult result;
  result.mode = ExtractionMode::resistor;
  result.f_sw = network.spec().f_sw;
  result.r_fixed = r_fixed;
  result.r_open = r_open;
  result.window_periods = options.window_periods;

  const LoadSet idle(n, PortLoad::resistor(r_open));
  result.r.v_tr = measure_outputs(network, idle, options);
  result.r.r.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));

  std::vector<Eigen::VectorXd> outputs(n);
  parallel_for(n, options.jobs, [&](std::size_t j) {
    LoadSet loads = idle;
    loads[j] = PortLoad::resistor(r_fixed);
    outputs[j] = measure_outputs(network, loads, options);
  });
  for (std::size_t j = 0; j < n; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const double injected = -outputs[j][col] / r_fixed;
    result.r.r.col(col) = (outputs[j] - result.r.v_tr) / injected;
    if (collapsed(outputs[j], result.r.v_tr)) result.warnings.push_back(nonlinear_warning(j));
  }
  return result;
}

}  // namespace sccovert

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sccovert/analytical.hpp"
#include "sccovert/network.hpp"
#include "sccovert/transient.hpp"

namespace sccovert {

// Measures R-parameters on the switched network the way a circuit simulator
// user would: input supply connected, filter capacitors present, one port
// excited at a time.
//
// Sign convention: `i_test` is the current drawn out of the excited port. The
// injected current of the measurement relation V_out = V_tr + R * I_S is
// therefore I_S = -i_test, and R_ij = (V_tr,i - V_out,i) / i_test > 0.

enum class ExtractionMode { current_source, resistor };

struct ExtractionOptions {
  double i_test = 10e-3;          // A drawn from the excited port
  StepPolicy policy;
  double tolerance = 10e-6;       // V per period
  int window_periods = 8;
  std::size_t max_periods = 20000;
  bool accelerate = true;         // periodic fixed-point jump before checking
  unsigned jobs = 1;
};

struct ColumnExtraction {
  Eigen::VectorXd column;
  bool nonlinear = false;  // some output fell below 10% of its target
};

struct ExtractionResult {
  RMatrix r;
  ExtractionMode mode = ExtractionMode::current_source;
  double f_sw = 0.0;
  double i_test = 0.0;   // current-source mode
  double r_fixed = 0.0;  // resistor mode
  double r_open = 0.0;
  int window_periods = 0;
  std::vector<std::string> warnings;

  bool flagged() const { return !warnings.empty(); }
};

// Mean output voltages over the averaging window after steady state.
Eigen::VectorXd measure_outputs(const SwitchedNetwork& network, const LoadSet& loads,
                                const ExtractionOptions& options);

// No-load output voltages (all port currents zero).
Eigen::VectorXd extract_targets(const SwitchedNetwork& network, const ExtractionOptions& options = {});

// Column j (0-based) from a current sink of options.i_test on port j. When
// v_tr is not supplied it is measured first.
ColumnExtraction extract_r_column(const SwitchedNetwork& network, std::size_t port,
                                  const ExtractionOptions& options = {},
                                  std::optional<Eigen::VectorXd> v_tr = std::nullopt);

// Targets plus N columns: N + 1 steady-state simulations.
ExtractionResult extract_r_matrix(const SwitchedNetwork& network, const ExtractionOptions& options = {});

// Resistor emulation: r_open stands in for a zero-current port and r_fixed
// for the test source; the measured V_j / r_fixed is the test current.
// Requires r_open >= 1e4 * r_fixed.
ExtractionResult extract_with_resistors(const SwitchedNetwork& network, double r_fixed, double r_open,
                                        const ExtractionOptions& options = {});

std::string to_string(ExtractionMode mode);

}  // namespace sccovert

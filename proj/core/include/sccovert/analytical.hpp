#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "sccovert/converter.hpp"

namespace sccovert {

enum class Regime { fsl, ssl };

// Multi-port resistance parameters: V_out = V_tr - R * I_out.
struct RMatrix {
  Eigen::MatrixXd r;     // ohm
  Eigen::VectorXd v_tr;  // V, no-load output voltages

  Eigen::Index order() const { return r.rows(); }
  // max |R_ij - R_ji| / max |R|
  double asymmetry() const;
};

// I_out = -Y * V_s with the input supply shorted.
struct YMatrix {
  Eigen::MatrixXd y;  // siemens
};

class SingularSystemError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Average branch currents of each stage over its two half periods, positive
// when flowing from the port source into the converter, plus the flying
// capacitor voltages. In the slow switching limit the capacitor voltage swings
// symmetrically and cap_voltage holds its mean (zero).
struct PhaseCurrents {
  Eigen::VectorXd charge;
  Eigen::VectorXd discharge;
  Eigen::VectorXd cap_voltage;
};

// Resistance shared by the supply paths of stages i and j (off-chip, common
// trunk segments, and the branch segment on the diagonal).
Eigen::MatrixXd shared_resistance(const ConverterSpec& spec);

// Fast switching limit with the supply shorted and source V_s[k] on port k.
// Solves, for every stage k, the charge-phase loop
//   2 r i_k + sum_j P_kj i_j - V_Ck = V_Sk,
// the discharge-phase loop 2 r i'_k + V_Ck = V_Sk, and charge balance
// i_k = i'_k. Throws SingularSystemError when the loop system is degenerate.
PhaseCurrents fsl_currents(const ConverterSpec& spec, const Eigen::VectorXd& v_s);

// Slow switching limit: the flying capacitor swings from -V_S to +V_S each
// half period, so i = i' = 4 C V_S / T.
PhaseCurrents ssl_currents(const ConverterSpec& spec, const Eigen::VectorXd& v_s);

// I_out,k = -(1/T)(integral of i_k + integral of i'_k) over the two halves.
Eigen::VectorXd average_port_currents(const PhaseCurrents& currents);

// Column j from a 1 V source on port j with every other port at 0 V.
YMatrix y_matrix(const ConverterSpec& spec, Regime regime);

// R = Y^-1 with V_tr from target_voltages().
RMatrix r_matrix(const ConverterSpec& spec, Regime regime);

// Approximate finite-frequency estimate R_FSL + R_SSL. Not exact in the
// transition region; the transient engine is the reference there.
RMatrix combined_r_matrix(const ConverterSpec& spec);

// V_in / 2 on every port.
Eigen::VectorXd target_voltages(const ConverterSpec& spec);

// Closed-form three-stage FSL matrix for equal parasitic segments with an
// off-chip resistor in series with the supply.
Eigen::MatrixXd fsl_closed_form_three_stage(double r_switch, double r_par, double r_offchip = 0.0);

// diag(1 / (4 C_i f)).
Eigen::MatrixXd ssl_closed_form(const ConverterSpec& spec);

// Largest relative deviation of r_matrix(FSL) from the three-stage closed
// form, or a negative value when the spec is not a three-stage equal-segment
// ladder.
double fsl_closed_form_deviation(const ConverterSpec& spec);

}  // namespace sccovert

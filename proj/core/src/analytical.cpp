#include "sccovert/analytical.hpp"

#include <algorithm>
#include <cmath>

namespace sccovert {

double RMatrix::asymmetry() const {
  const double scale = r.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (r - r.transpose()).cwiseAbs().maxCoeff() / scale;
}

Eigen::MatrixXd shared_resistance(const ConverterSpec& spec) {
  require_valid(spec);
  const auto n = static_cast<Eigen::Index>(spec.n_stages);
  Eigen::MatrixXd p(n, n);
  // Prefix sums of the trunk: resistance from the supply to trunk node k.
  Eigen::VectorXd depth(n);
  double acc = spec.r_offchip;
  for (Eigen::Index k = 0; k < n; ++k) {
    acc += spec.r_trunk[static_cast<std::size_t>(k)];
    depth[k] = acc;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) p(i, j) = depth[std::min(i, j)];
  for (Eigen::Index i = 0; i < n; ++i) p(i, i) += spec.r_branch[static_cast<std::size_t>(i)];
  return p;
}

PhaseCurrents fsl_currents(const ConverterSpec& spec, const Eigen::VectorXd& v_s) {
  const auto n = static_cast<Eigen::Index>(spec.n_stages);
  const Eigen::MatrixXd p = shared_resistance(spec);
  if (v_s.size() != n) throw std::invalid_argument("excitation vector size does not match stages");

  // Unknowns: [i (charge), i' (discharge), V_C].
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3 * n);
  const double r2 = 2.0 * spec.r_switch;
  for (Eigen::Index k = 0; k < n; ++k) {
    a.block(k, 0, 1, n) = p.row(k);
    a(k, k) += r2;
    a(k, 2 * n + k) = -1.0;
    b[k] = v_s[k];

    a(n + k, n + k) = r2;
    a(n + k, 2 * n + k) = 1.0;
    b[n + k] = v_s[k];

    a(2 * n + k, k) = 1.0;
    a(2 * n + k, n + k) = -1.0;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) {
    if (spec.r_switch == 0.0 && p.isZero(0.0))
      throw SingularSystemError("FSL loop system is singular: all switch and parasitic resistances are zero");
    throw SingularSystemError("FSL loop system is singular");
  }
  const Eigen::VectorXd x = lu.solve(b);
  return PhaseCurrents{x.segment(0, n), x.segment(n, n), x.segment(2 * n, n)};
}

PhaseCurrents ssl_currents(const ConverterSpec& spec, const Eigen::VectorXd& v_s) {
  require_valid(spec);
  const auto n = static_cast<Eigen::Index>(spec.n_stages);
  if (v_s.size() != n) throw std::invalid_argument("excitation vector size does not match stages");
  PhaseCurrents pc{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double i = 4.0 * spec.c_fly[static_cast<std::size_t>(k)] * v_s[k] / spec.period();
    pc.charge[k] = i;
    pc.discharge[k] = i;
  }
  return pc;
}

Eigen::VectorXd average_port_currents(const PhaseCurrents& currents) {
  // Each average current flows for T/2.
  return -0.5 * (currents.charge + currents.discharge);
}

YMatrix y_matrix(const ConverterSpec& spec, Regime regime) {
  const auto n = static_cast<Eigen::Index>(spec.n_stages);
  YMatrix y{Eigen::MatrixXd(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd v_s = Eigen::VectorXd::Unit(n, j);
    const PhaseCurrents pc = regime == Regime::fsl ? fsl_currents(spec, v_s) : ssl_currents(spec, v_s);
    y.y.col(j) = -average_port_currents(pc);
  }
  return y;
}

RMatrix r_matrix(const ConverterSpec& spec, Regime regime) {
  const YMatrix y = y_matrix(spec, regime);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(y.y);
  if (!lu.isInvertible()) throw SingularSystemError("Y-parameter matrix is singular");
  return RMatrix{lu.inverse(), target_voltages(spec)};
}

RMatrix combined_r_matrix(const ConverterSpec& spec) {
  RMatrix fsl = r_matrix(spec, Regime::fsl);
  fsl.r += ssl_closed_form(spec);
  return fsl;
}

Eigen::VectorXd target_voltages(const ConverterSpec& spec) {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(spec.n_stages), 0.5 * spec.v_in);
}

Eigen::MatrixXd fsl_closed_form_three_stage(double r_switch, double r_par, double r_offchip) {
  const double r = r_switch;
  const double p = r_par;
  Eigen::Matrix3d m;
  m << p + 2 * r, p / 2, p / 2,
       p / 2, 3 * p / 2 + 2 * r, p,
       p / 2, p, 2 * p + 2 * r;
  m.array() += r_offchip / 2;
  return m;
}

Eigen::MatrixXd ssl_closed_form(const ConverterSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.n_stages);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    m(k, k) = 1.0 / (4.0 * spec.c_fly[static_cast<std::size_t>(k)] * spec.f_sw);
  return m;
}

double fsl_closed_form_deviation(const ConverterSpec& spec) {
  if (spec.n_stages != 3 || !spec.has_equal_segments()) return -1.0;
  const Eigen::MatrixXd expected =
      fsl_closed_form_three_stage(spec.r_switch, spec.r_trunk.front(), spec.r_offchip);
  const Eigen::MatrixXd got = r_matrix(spec, Regime::fsl).r;
  return (got - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff();
}

}  // namespace sccovert

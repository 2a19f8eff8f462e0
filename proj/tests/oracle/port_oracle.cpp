#include "port_oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

namespace {

struct Resistor {
  int a, b;
  double ohms;
};

struct Source {
  int plus, minus;  // v(plus) - v(minus) = volts
  double volts;
};

// Dense MNA over nodes 1..n-1; returns the currents flowing out of each
// source's plus terminal into the network.
std::vector<double> solve_sources(int nodes, const std::vector<Resistor>& resistors,
                                  const std::vector<Source>& sources) {
  const int nv = nodes - 1;
  const int m = nv + static_cast<int>(sources.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  auto idx = [](int node) { return node - 1; };
  for (const auto& r : resistors) {
    const double g = 1.0 / r.ohms;
    if (r.a) a(idx(r.a), idx(r.a)) += g;
    if (r.b) a(idx(r.b), idx(r.b)) += g;
    if (r.a && r.b) {
      a(idx(r.a), idx(r.b)) -= g;
      a(idx(r.b), idx(r.a)) -= g;
    }
  }
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const int row = nv + static_cast<int>(k);
    const auto& s = sources[k];
    // Unknown: current through the source from minus to plus inside it.
    if (s.plus) { a(idx(s.plus), row) -= 1.0; a(row, idx(s.plus)) += 1.0; }
    if (s.minus) { a(idx(s.minus), row) += 1.0; a(row, idx(s.minus)) -= 1.0; }
    rhs[row] = s.volts;
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(rhs);
  std::vector<double> out;
  for (std::size_t k = 0; k < sources.size(); ++k) out.push_back(x[nv + static_cast<int>(k)]);
  return out;
}

struct Ladder {
  int nodes = 1;
  std::vector<Resistor> fixed;
  std::vector<int> top, bottom, out, tap;
};

// Supply shorted to ground. Zero-ohm segments merge their end nodes.
Ladder wire(const sccovert::ConverterSpec& s) {
  Ladder l;
  auto node = [&l] { return l.nodes++; };
  auto segment = [&](int from, double ohms) {
    if (ohms == 0.0) return from;
    const int to = node();
    l.fixed.push_back({from, to, ohms});
    return to;
  };
  int trunk = segment(0, s.r_offchip);
  for (std::size_t i = 0; i < s.n_stages; ++i) {
    trunk = segment(trunk, s.r_trunk[i]);
    l.tap.push_back(segment(trunk, s.r_branch[i]));
    l.top.push_back(node());
    l.bottom.push_back(node());
    l.out.push_back(node());
  }
  return l;
}

struct PhaseResult {
  Eigen::VectorXd cap_current;   // into the top plate
  Eigen::VectorXd port_current;  // delivered by each port source
};

PhaseResult solve_phase(const Ladder& l, const sccovert::ConverterSpec& s, bool charge,
                        const Eigen::VectorXd& v_port, const Eigen::VectorXd& v_cap) {
  const auto n = s.n_stages;
  std::vector<Resistor> res = l.fixed;
  for (std::size_t i = 0; i < n; ++i) {
    if (charge) {
      res.push_back({l.tap[i], l.top[i], s.r_switch});
      res.push_back({l.bottom[i], l.out[i], s.r_switch});
    } else {
      res.push_back({l.out[i], l.top[i], s.r_switch});
      res.push_back({l.bottom[i], 0, s.r_switch});
    }
  }
  std::vector<Source> src;
  for (std::size_t i = 0; i < n; ++i) src.push_back({l.out[i], 0, v_port[static_cast<Eigen::Index>(i)]});
  for (std::size_t i = 0; i < n; ++i) src.push_back({l.top[i], l.bottom[i], v_cap[static_cast<Eigen::Index>(i)]});
  const auto currents = solve_sources(l.nodes, res, src);
  PhaseResult r{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (std::size_t i = 0; i < n; ++i) {
    r.port_current[static_cast<Eigen::Index>(i)] = currents[i];
    // The source pushes current out of its plus terminal (top) into the
    // network, so the plate receives the opposite.
    r.cap_current[static_cast<Eigen::Index>(i)] = -currents[n + i];
  }
  return r;
}

}  // namespace

Eigen::MatrixXd fsl_y(const sccovert::ConverterSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.n_stages);
  const Ladder l = wire(spec);
  Eigen::MatrixXd y(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd vs = Eigen::VectorXd::Zero(n);
    vs[j] = 1.0;
    // Net capacitor charge per period is affine in the capacitor voltages;
    // probe it column by column.
    auto net = [&](const Eigen::VectorXd& vc) -> Eigen::VectorXd {
      return solve_phase(l, spec, true, vs, vc).cap_current + solve_phase(l, spec, false, vs, vc).cap_current;
    };
    const Eigen::VectorXd base = net(Eigen::VectorXd::Zero(n));
    Eigen::MatrixXd jac(n, n);
    for (Eigen::Index k = 0; k < n; ++k) jac.col(k) = net(Eigen::VectorXd::Unit(n, k)) - base;
    const Eigen::VectorXd vc = jac.fullPivLu().solve(-base);
    const Eigen::VectorXd i_port =
        0.5 * (solve_phase(l, spec, true, vs, vc).port_current + solve_phase(l, spec, false, vs, vc).port_current);
    y.col(j) = i_port;
  }
  return y;
}

Eigen::MatrixXd fsl_r(const sccovert::ConverterSpec& spec) { return fsl_y(spec).inverse(); }

Eigen::VectorXd loaded_outputs(const Eigen::MatrixXd& r, const Eigen::VectorXd& v_tr, const Eigen::VectorXd& loads) {
  Eigen::VectorXd v = v_tr;
  for (int it = 0; it < 100000; ++it) {
    const Eigen::VectorXd next = v_tr - r * v.cwiseQuotient(loads);
    if ((next - v).cwiseAbs().maxCoeff() < 1e-15) return next;
    v = next;
  }
  throw std::runtime_error("fixed-point iteration did not converge");
}

}  // namespace oracle

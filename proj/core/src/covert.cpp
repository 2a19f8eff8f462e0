#include "sccovert/covert.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sccovert/csv.hpp"
#include "sccovert/parallel.hpp"

namespace sccovert {

std::vector<std::string> validate(const ChannelConfig& cfg, const ConverterSpec& spec) {
  std::vector<std::string> errors;
  const std::size_t n = spec.n_stages;
  if (cfg.source >= n) errors.push_back("source stage out of range");
  for (std::size_t s : cfg.sinks) {
    if (s >= n) errors.push_back("sink stage " + std::to_string(s + 1) + " out of range");
    if (s == cfg.source) errors.push_back("sink stage " + std::to_string(s + 1) + " equals the source");
  }
  auto sorted = cfg.sinks;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    errors.push_back("sink stages must be distinct");
  if (!(cfg.r_heavy > 0.0 && cfg.r_light > 0.0 && cfg.r_idle > 0.0))
    errors.push_back("load resistances must be positive");
  if (cfg.r_heavy > cfg.r_light) errors.push_back("r_heavy must not exceed r_light");
  if (!(cfg.bit_period >= 2.0 / spec.f_sw)) errors.push_back("bit period must span at least two switching periods");
  if (cfg.bits.find_first_not_of("01") != std::string::npos) errors.push_back("bit pattern may only contain 0 and 1");
  return errors;
}

const LoadSet& LoadProfile::at(double time) const {
  for (const auto& seg : segments)
    if (time >= seg.start && time < seg.end) return seg.loads;
  return idle;
}

LoadProfile encode_schedule(const ChannelConfig& cfg, std::size_t n_stages) {
  if (cfg.source >= n_stages) throw std::invalid_argument("source stage out of range");
  LoadProfile profile;
  profile.idle = LoadSet(n_stages, PortLoad::resistor(cfg.r_idle));
  for (std::size_t k = 0; k < cfg.bits.size(); ++k) {
    LoadSet loads = profile.idle;
    loads[cfg.source] = PortLoad::resistor(cfg.bits[k] == '1' ? cfg.r_light : cfg.r_heavy);
    profile.segments.push_back({static_cast<double>(k) * cfg.bit_period,
                                static_cast<double>(k + 1) * cfg.bit_period, std::move(loads)});
  }
  return profile;
}

const NodeDelta& ChannelReport::delta(std::string_view node) const {
  for (const auto& d : deltas)
    if (d.node == node) return d;
  throw std::out_of_range("report has no node '" + std::string(node) + "'");
}

const NodeDelta& SweepPoint::delta(std::string_view node) const {
  for (const auto& d : deltas)
    if (d.node == node) return d;
  throw std::out_of_range("sweep point has no node '" + std::string(node) + "'");
}

long long steps_per_bit(const ChannelConfig& cfg, const ConverterSpec& spec) {
  const double h = spec.period() / cfg.policy.steps_per_period;
  return std::max(1LL, std::llround(cfg.bit_period / h));
}

std::vector<BitWindow> bit_windows(const ChannelConfig& cfg, const ConverterSpec& spec) {
  const long long per_bit = steps_per_bit(cfg, spec);
  const long long per_period = cfg.policy.steps_per_period;
  std::vector<BitWindow> windows;
  for (std::size_t k = 0; k < cfg.bits.size(); ++k) {
    const long long start = static_cast<long long>(k) * per_bit;
    const long long end = start + per_bit;
    const long long half = start + (per_bit + 1) / 2;
    const long long first_period = (half + per_period - 1) / per_period;
    const long long end_period = end / per_period;
    if (end_period > first_period) {
      windows.push_back({first_period * per_period, (end_period - first_period) * per_period, true});
    } else {
      windows.push_back({half, end - half, false});
    }
  }
  return windows;
}

namespace {

struct Levels {
  double one = 0.0;
  double zero = 0.0;
  bool has_one = false;
  bool has_zero = false;
};

Levels class_means(const std::vector<double>& values, const std::string& bits, std::size_t skip,
                   const std::vector<bool>& usable) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t k = skip; k < bits.size(); ++k) {
    if (!usable[k]) continue;
    if (bits[k] == '1') { s1 += values[k]; ++n1; }
    else { s0 += values[k]; ++n0; }
  }
  Levels lv;
  lv.has_one = n1 > 0;
  lv.has_zero = n0 > 0;
  if (lv.has_one) lv.one = s1 / static_cast<double>(n1);
  if (lv.has_zero) lv.zero = s0 / static_cast<double>(n0);
  return lv;
}

// Shared by decode() and the report of transmit().
DecodeResult decide(const std::vector<double>& readings, const std::vector<bool>& usable,
                    const std::string& bits, const DecodeOptions& options) {
  std::vector<double> q = readings;
  if (options.resolution > 0.0)
    for (double& v : q) v = std::floor(v / options.resolution) * options.resolution;

  DecodeResult result;
  if (options.threshold) {
    result.threshold = *options.threshold;
  } else if (bits.size() >= 2 && bits[0] != bits[1] && usable[0] && usable[1]) {
    result.threshold = 0.5 * (q[0] + q[1]);
  } else {
    const Levels lv = class_means(q, bits, 0, usable);
    if (!lv.has_one || !lv.has_zero) throw std::invalid_argument("cannot train a decision threshold on this pattern");
    result.threshold = 0.5 * (lv.one + lv.zero);
  }

  for (std::size_t k = 0; k < bits.size(); ++k) {
    const char c = usable[k] ? (q[k] > result.threshold ? '1' : '0') : '?';
    result.bits.push_back(c);
    if (c != bits[k]) ++result.errors;
  }
  result.ber = bits.empty() ? 0.0 : static_cast<double>(result.errors) / static_cast<double>(bits.size());
  return result;
}

}  // namespace

Transmission transmit(const SwitchedNetwork& network, const ChannelConfig& cfg) {
  const ConverterSpec& spec = network.spec();
  if (auto errors = validate(cfg, spec); !errors.empty()) {
    std::string msg = "invalid channel config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  const std::size_t n = spec.n_stages;
  const LoadProfile profile = encode_schedule(cfg, n);

  std::vector<int> probes;
  Transmission tx;
  ChannelReport& report = tx.report;
  for (std::size_t i = 0; i < n; ++i) {
    report.nodes.push_back("out" + std::to_string(i + 1));
    probes.push_back(network.stages()[i].out);
  }
  for (std::size_t i = 0; i < n; ++i) {
    report.nodes.push_back("in" + std::to_string(i + 1));
    probes.push_back(network.stages()[i].tap);
  }

  TransientSimulator sim(network, profile.segments.empty() ? profile.idle : profile.segments.front().loads,
                         cfg.policy);
  sim.settle_periodic();
  TraceRecorder recorder(sim, RecordMode::period_mean);

  report.windows = bit_windows(cfg, spec);
  const long long per_bit = steps_per_bit(cfg, spec);
  for (std::size_t k = 0; k < cfg.bits.size(); ++k) {
    sim.set_loads(profile.segments[k].loads);
    const BitWindow& w = report.windows[k];
    std::vector<double> sums(probes.size(), 0.0);
    const long long start = static_cast<long long>(k) * per_bit;
    for (long long s = start; s < start + per_bit; ++s) {
      sim.step();
      recorder.sample(sim);
      if (s >= w.first_step && s < w.first_step + w.step_count)
        for (std::size_t p = 0; p < probes.size(); ++p) sums[p] += sim.node_voltage(probes[p]);
    }
    for (double& v : sums) v /= static_cast<double>(w.step_count);
    report.bit_means.push_back(std::move(sums));
    if (!w.settled) {
      report.warnings.push_back("bit " + std::to_string(k) +
                                ": no whole switching period in the final half-bit; trailing half-bit used");
    }
  }
  tx.trace = recorder.take();

  std::vector<bool> all_usable(cfg.bits.size(), true);
  for (std::size_t p = 0; p < probes.size(); ++p) {
    std::vector<double> values;
    for (const auto& row : report.bit_means) values.push_back(row[p]);
    const Levels lv = class_means(values, cfg.bits, cfg.skip_bits, all_usable);
    NodeDelta d{report.nodes[p], 0.0, lv.one, lv.zero};
    if (lv.has_one && lv.has_zero) d.delta_v = std::abs(lv.one - lv.zero);
    report.deltas.push_back(d);
  }

  if (!cfg.sinks.empty() && !cfg.bits.empty()) {
    const std::size_t column = cfg.sinks.front();
    std::vector<double> readings;
    std::vector<bool> usable;
    for (std::size_t k = 0; k < cfg.bits.size(); ++k) {
      readings.push_back(report.bit_means[k][column]);
      usable.push_back(report.windows[k].settled);
    }
    try {
      const DecodeResult dec = decide(readings, usable, cfg.bits, {});
      report.decoded = dec.bits;
      report.bit_errors = dec.errors;
    } catch (const std::invalid_argument& e) {
      report.warnings.push_back(std::string("decoder not trained: ") + e.what());
    }
  }
  return tx;
}

Eigen::VectorXd predict_delta_v(const RMatrix& r, const ChannelConfig& cfg) {
  const auto n = r.order();
  if (static_cast<Eigen::Index>(cfg.source) >= n) throw std::invalid_argument("source stage out of range");
  auto solve = [&](double r_source) {
    Eigen::VectorXd conductance = Eigen::VectorXd::Constant(n, 1.0 / cfg.r_idle);
    conductance[static_cast<Eigen::Index>(cfg.source)] = 1.0 / r_source;
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) + r.r * conductance.asDiagonal();
    const Eigen::VectorXd v = a.partialPivLu().solve(r.v_tr);
    if ((v.array() < 0.0).any()) throw std::domain_error("load model has a negative-voltage solution");
    return v;
  };
  return (solve(cfg.r_light) - solve(cfg.r_heavy)).cwiseAbs();
}

DecodeResult decode(const TransientTrace& trace, const ChannelConfig& cfg, const ConverterSpec& spec,
                    std::string_view node, const DecodeOptions& options) {
  const long long per_period = cfg.policy.steps_per_period;
  if (trace.samples_per_period <= 0 || per_period % trace.samples_per_period != 0)
    throw std::invalid_argument("trace sampling does not match the channel step policy");
  const long long per_sample = per_period / trace.samples_per_period;
  const auto& series = trace.signal(node);
  const auto windows = bit_windows(cfg, spec);

  std::vector<double> readings;
  std::vector<bool> usable;
  for (const auto& w : windows) {
    const bool aligned = w.settled && w.first_step % per_sample == 0 && w.step_count % per_sample == 0;
    const auto first = static_cast<std::size_t>(w.first_step / per_sample);
    const auto count = static_cast<std::size_t>(w.step_count / per_sample);
    if (!aligned || count == 0 || first + count > series.size()) {
      readings.push_back(0.0);
      usable.push_back(false);
      continue;
    }
    const auto begin = series.begin() + static_cast<std::ptrdiff_t>(first);
    readings.push_back(std::accumulate(begin, begin + static_cast<std::ptrdiff_t>(count), 0.0) /
                       static_cast<double>(count));
    usable.push_back(true);
  }
  return decide(readings, usable, cfg.bits, options);
}

namespace {

template <class Mutate>
std::vector<SweepPoint> run_sweep(const std::vector<double>& values, unsigned jobs, Mutate&& mutate) {
  std::vector<SweepPoint> points(values.size());
  parallel_for(values.size(), jobs, [&](std::size_t i) {
    auto [spec, cfg] = mutate(values[i]);
    const SwitchedNetwork net = build_ladder(spec);
    points[i] = SweepPoint{values[i], transmit(net, cfg).report.deltas};
  });
  std::stable_sort(points.begin(), points.end(),
                   [](const SweepPoint& a, const SweepPoint& b) { return a.value < b.value; });
  return points;
}

}  // namespace

std::vector<SweepPoint> sweep_switching_frequency(const ConverterSpec& spec, const ChannelConfig& cfg,
                                                  const std::vector<double>& frequencies,
                                                  const SweepOptions& options) {
  return run_sweep(frequencies, options.jobs, [&](double f) {
    ConverterSpec s = spec;
    s.f_sw = f;
    ChannelConfig c = cfg;
    c.bit_period = std::max(cfg.bit_period, options.min_periods_per_bit / f);
    return std::pair{s, c};
  });
}

std::vector<SweepPoint> sweep_bit_rate(const ConverterSpec& spec, const ChannelConfig& cfg,
                                       const std::vector<double>& rates, const SweepOptions& options) {
  return run_sweep(rates, options.jobs, [&](double rate) {
    ChannelConfig c = cfg;
    c.bit_period = 1.0 / rate;
    return std::pair{spec, c};
  });
}

std::vector<SweepPoint> sweep_offchip(const ConverterSpec& spec, const ChannelConfig& cfg,
                                      const std::vector<double>& r_offchip, const SweepOptions& options) {
  return run_sweep(r_offchip, options.jobs, [&](double r) {
    ConverterSpec s = spec;
    s.r_offchip = r;
    return std::pair{s, cfg};
  });
}

std::optional<double> bandwidth(const std::vector<SweepPoint>& rate_curve, std::string_view node,
                                double resolution) {
  if (rate_curve.empty()) return std::nullopt;
  const double first = rate_curve.front().delta(node).delta_v;
  if (first < resolution) return std::nullopt;
  for (std::size_t k = 1; k < rate_curve.size(); ++k) {
    const double d1 = rate_curve[k].delta(node).delta_v;
    if (d1 >= resolution) continue;
    const double d0 = rate_curve[k - 1].delta(node).delta_v;
    const double r0 = rate_curve[k - 1].value;
    const double r1 = rate_curve[k].value;
    return r0 + (d0 - resolution) / (d0 - d1) * (r1 - r0);
  }
  return rate_curve.back().value;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs two or more points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("line fit needs distinct x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i)
    fit.max_residual = std::max(fit.max_residual, std::abs(y[i] - (fit.intercept + fit.slope * x[i])));
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  fit.residual_fraction = range > 0.0 ? fit.max_residual / range : 0.0;
  return fit;
}

void write_curve_csv(std::ostream& out, const std::vector<SweepPoint>& curve) {
  out << "sweep_value,node,delta_v_volts\n";
  for (const auto& point : curve)
    for (const auto& d : point.deltas)
      out << format_double(point.value) << ',' << d.node << ',' << format_double(d.delta_v) << '\n';
}

void write_report(std::ostream& out, const ChannelReport& report, const ChannelConfig& cfg) {
  out << "source stage: " << cfg.source + 1 << "\nsink stages:";
  for (std::size_t s : cfg.sinks) out << ' ' << s + 1;
  out << "\nbits sent:    " << cfg.bits << "\nbits decoded: " << report.decoded
      << "\nbit errors:   " << report.bit_errors;
  if (!cfg.bits.empty())
    out << " (BER " << format_double(static_cast<double>(report.bit_errors) / static_cast<double>(cfg.bits.size()))
        << ")";
  out << "\n\n" << std::left << std::setw(8) << "node" << std::right << std::setw(16) << "delta_v [mV]"
      << std::setw(16) << "'1' level [V]" << std::setw(16) << "'0' level [V]" << '\n';
  out << std::fixed;
  for (const auto& d : report.deltas) {
    out << std::left << std::setw(8) << d.node << std::right << std::setprecision(4) << std::setw(16)
        << d.delta_v * 1e3 << std::setprecision(6) << std::setw(16) << d.mean_one << std::setw(16) << d.mean_zero
        << '\n';
  }
  out << std::defaultfloat;
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
}

}  // namespace sccovert

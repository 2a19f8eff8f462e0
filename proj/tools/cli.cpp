#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sccovert/analytical.hpp"
#include "sccovert/config.hpp"
#include "sccovert/covert.hpp"
#include "sccovert/csv.hpp"
#include "sccovert/extraction.hpp"
#include "sccovert/network.hpp"
#include "sccovert/si_units.hpp"
#include "sccovert/transient.hpp"

namespace sccovert::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string out_dir = ".";
  unsigned jobs = 1;
  std::optional<long long> seed;  // accepted for script compatibility; runs are deterministic
};

// Raised for bad option values that CLI11 cannot check by itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double si_option(const std::string& name, const std::string& text) {
  try {
    return parse_si(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError("--" + name + ": " + e.what());
  }
}

std::vector<double> si_list(const std::string& name, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(si_option(name, item));
  if (out.empty()) throw UsageError("--" + name + ": empty list");
  return out;
}

fs::path output_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

void write_file(const Globals& g, const std::string& name, const std::string& text, std::ostream& out) {
  const fs::path path = output_path(g, name);
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << text;
  out << "wrote " << path.string() << '\n';
}

void print_matrix(std::ostream& out, const std::string& title, const Eigen::MatrixXd& r, const Eigen::VectorXd& v_tr) {
  out << title << " [mOhm]\n";
  out << std::fixed << std::setprecision(4);
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    out << "  ";
    for (Eigen::Index j = 0; j < r.cols(); ++j) out << std::setw(12) << r(i, j) * 1e3;
    out << '\n';
  }
  out << "V_tr [V]\n  ";
  for (Eigen::Index i = 0; i < v_tr.size(); ++i) out << std::setw(12) << v_tr[i];
  out << '\n' << std::defaultfloat;
}

std::string matrix_csv(const RMatrix& m) {
  std::ostringstream s;
  write_matrix_csv(s, m.r, m.v_tr);
  return s.str();
}

std::string config_text(const Config& cfg) {
  std::ostringstream s;
  write_config(s, cfg);
  return s.str();
}

// analyze -------------------------------------------------------------------

struct AnalyzeArgs {
  std::string config;
  bool fsl = false;
  bool ssl = false;
  bool combined = false;
  std::string freq;
};

int cmd_analyze(const AnalyzeArgs& a, const Globals& g, std::ostream& out) {
  Config cfg = load_config(a.config);
  if (!a.freq.empty()) cfg.converter.f_sw = si_option("freq", a.freq);
  require_valid(cfg.converter);

  std::vector<std::pair<std::string, RMatrix>> results;
  const bool any = a.fsl || a.ssl || a.combined;
  if (a.fsl || !any) results.emplace_back("fsl", r_matrix(cfg.converter, Regime::fsl));
  if (a.ssl) results.emplace_back("ssl", r_matrix(cfg.converter, Regime::ssl));
  if (a.combined) results.emplace_back("combined", combined_r_matrix(cfg.converter));

  out << "f_sw = " << format_si(cfg.converter.f_sw) << "Hz, " << cfg.converter.n_stages << " stages\n";
  for (const auto& [name, m] : results) {
    print_matrix(out, name + " R-matrix", m.r, m.v_tr);
    write_file(g, "r_" + name + ".csv", matrix_csv(m), out);
  }
  if (a.fsl || !any) {
    const double dev = fsl_closed_form_deviation(cfg.converter);
    if (dev < 0.0)
      out << "closed-form check: not applicable (needs 3 stages with equal parasitic segments)\n";
    else
      out << "closed-form check: " << (dev <= 1e-9 ? "PASS" : "FAIL") << " (max relative deviation "
          << format_double(dev) << ")\n";
  }
  return ok;
}

// extract -------------------------------------------------------------------

struct ExtractArgs {
  std::string config;
  std::string freq;
  std::string mode = "current";
  std::string i_test;
  std::string r_fixed;
  std::string r_open;
};

int cmd_extract(const ExtractArgs& a, const Globals& g, std::ostream& out) {
  Config cfg = load_config(a.config);
  if (!a.freq.empty()) cfg.converter.f_sw = si_option("freq", a.freq);
  if (!a.i_test.empty()) cfg.simulation.i_test = si_option("i-test", a.i_test);
  if (!a.r_fixed.empty()) cfg.simulation.r_fixed = si_option("r-fixed", a.r_fixed);
  if (!a.r_open.empty()) cfg.simulation.r_open = si_option("r-open", a.r_open);
  const SwitchedNetwork net = build_ladder(cfg.converter);
  const ExtractionOptions opts = cfg.simulation.extraction(g.jobs);

  const ExtractionResult res = a.mode == "resistor"
                                   ? extract_with_resistors(net, cfg.simulation.r_fixed, cfg.simulation.r_open, opts)
                                   : extract_r_matrix(net, opts);
  const RMatrix fsl = r_matrix(cfg.converter, Regime::fsl);
  const RMatrix comb = combined_r_matrix(cfg.converter);

  out << "f_sw = " << format_si(res.f_sw) << "Hz, mode = " << to_string(res.mode) << '\n';
  print_matrix(out, "extracted R-matrix", res.r.r, res.r.v_tr);
  out << "\n" << std::left << std::setw(7) << "entry" << std::right << std::setw(14) << "extracted" << std::setw(14)
      << "fsl" << std::setw(11) << "err" << std::setw(14) << "fsl+ssl" << std::setw(11) << "err" << "\n";
  out << std::fixed;
  const auto n = res.r.order();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double x = res.r.r(i, j);
      auto rel = [x](double ref) { return ref != 0.0 ? (x - ref) / ref * 100.0 : 0.0; };
      std::ostringstream entry;
      entry << 'R' << i + 1 << j + 1;
      out << std::left << std::setw(7) << entry.str() << std::right << std::setprecision(4) << std::setw(14)
          << x * 1e3 << std::setw(14) << fsl.r(i, j) * 1e3 << std::setprecision(2) << std::setw(10) << rel(fsl.r(i, j))
          << '%' << std::setprecision(4) << std::setw(14) << comb.r(i, j) * 1e3 << std::setprecision(2)
          << std::setw(10) << rel(comb.r(i, j)) << "%\n";
    }
  }
  out << std::defaultfloat << "(values in mOhm)\n";
  for (const auto& w : res.warnings) out << "warning: " << w << '\n';

  nlohmann::ordered_json side;
  side["mode"] = to_string(res.mode);
  side["f_sw_hz"] = res.f_sw;
  if (res.mode == ExtractionMode::current_source) {
    side["i_test_a"] = res.i_test;
  } else {
    side["r_fixed_ohm"] = res.r_fixed;
    side["r_open_ohm"] = res.r_open;
  }
  side["steps_per_period"] = cfg.simulation.policy.steps_per_period;
  side["dead_time_fraction"] = cfg.converter.dead_time_fraction;
  side["tolerance_v"] = cfg.simulation.tolerance;
  side["window_periods"] = res.window_periods;
  side["warnings"] = res.warnings;
  side["config"] = config_text(cfg);
  write_file(g, "r_extracted.csv", matrix_csv(res.r), out);
  write_file(g, "r_extracted.json", side.dump(2) + "\n", out);
  return ok;
}

// transient -----------------------------------------------------------------

struct TransientArgs {
  std::string config;
  std::string duration;
  std::string loads;
  bool period_mean = false;
};

LoadSet parse_loads(const std::string& text, std::size_t n) {
  if (text.empty()) return open_loads(n);
  LoadSet loads;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "open") loads.push_back(PortLoad::open());
    else loads.push_back(PortLoad::resistor(si_option("loads", item)));
  }
  if (loads.size() == 1) loads.assign(n, loads.front());
  if (loads.size() != n) throw UsageError("--loads: expected 1 or " + std::to_string(n) + " entries");
  return loads;
}

int cmd_transient(const TransientArgs& a, const Globals& g, std::ostream& out) {
  const Config cfg = load_config(a.config);
  const SwitchedNetwork net = build_ladder(cfg.converter);
  const double duration = si_option("duration", a.duration);
  const LoadSet loads = parse_loads(a.loads, cfg.converter.n_stages);
  TraceOptions opts;
  opts.mode = a.period_mean ? RecordMode::period_mean : RecordMode::every_step;
  const TransientTrace trace = run_transient(net, loads, duration, cfg.simulation.policy, opts);

  out << "simulated " << format_si(duration) << "s, " << trace.size() << " samples\n";
  if (trace.period_markers.size() >= 2) {
    const std::size_t first = trace.period_markers[trace.period_markers.size() - 2];
    const auto mean = periodic_average(trace, {first, trace.period_markers.back() - first});
    out << "last full period means:\n";
    for (std::size_t k = 0; k < trace.names.size(); ++k)
      out << "  " << std::left << std::setw(10) << trace.names[k] << format_double(mean[k]) << '\n';
  }
  std::ostringstream csv;
  write_trace_csv(csv, trace);
  write_file(g, "trace.csv", csv.str(), out);
  return ok;
}

// covert --------------------------------------------------------------------

struct CovertArgs {
  std::string config;
  std::string channel;
  std::string sweep;
  std::string values;
  std::string bits;
  std::string rate;
  std::string resolution = "2m";
  std::optional<std::size_t> source;
  std::string sinks;
  std::optional<std::size_t> skip_bits;
};

std::vector<double> default_sweep(const std::string& kind) {
  if (kind == "freq") return {100e3, 200e3, 500e3, 1e6, 2e6, 5e6, 10e6};
  if (kind == "rate")
    return {10e3, 20e3, 40e3, 60e3, 80e3, 100e3, 120e3, 140e3, 160e3, 200e3, 250e3, 300e3, 400e3, 500e3};
  return {0.0, 0.025, 0.05, 0.075, 0.1};
}

std::vector<std::string> sink_nodes(const ChannelConfig& ch) {
  std::vector<std::string> nodes;
  for (std::size_t s : ch.sinks) nodes.push_back("out" + std::to_string(s + 1));
  for (std::size_t s : ch.sinks) nodes.push_back("in" + std::to_string(s + 1));
  return nodes;
}

int cmd_covert(const CovertArgs& a, const Globals& g, std::ostream& out) {
  Config cfg = load_config(a.config);
  if (!a.channel.empty()) apply_config_file(a.channel, cfg);
  ChannelConfig& ch = cfg.channel;
  if (!a.bits.empty()) ch.bits = a.bits;
  if (!a.rate.empty()) {
    const double rate = si_option("rate", a.rate);
    if (!(rate > 0.0)) throw UsageError("--rate must be positive");
    ch.bit_period = 1.0 / rate;
  }
  if (a.source) {
    if (*a.source < 1) throw UsageError("--source: stages are numbered from 1");
    ch.source = *a.source - 1;
  }
  if (!a.sinks.empty()) {
    ch.sinks.clear();
    for (double v : si_list("sinks", a.sinks)) {
      if (v < 1.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw UsageError("--sinks: stages are numbered from 1");
      ch.sinks.push_back(static_cast<std::size_t>(v) - 1);
    }
  }
  if (a.skip_bits) ch.skip_bits = *a.skip_bits;
  require_valid(cfg.converter);
  if (auto errors = validate(ch, cfg.converter); !errors.empty()) {
    std::string msg = "invalid channel:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw UsageError(msg);
  }

  const std::string resolved = config_text(cfg);
  out << "# resolved configuration\n" << resolved << '\n';
  write_file(g, "resolved.cfg", resolved, out);

  std::ostringstream report;
  if (a.sweep.empty()) {
    const SwitchedNetwork net = build_ladder(cfg.converter);
    const Transmission tx = transmit(net, ch);
    write_report(report, tx.report, ch);
    report << "\nper-node decoding:\n";
    for (const auto& node : sink_nodes(ch)) {
      try {
        const DecodeResult d = decode(tx.trace, ch, cfg.converter, node);
        report << "  " << std::left << std::setw(6) << node << std::right << d.bits << "  errors " << d.errors
               << "  BER " << format_double(d.ber) << '\n';
      } catch (const std::invalid_argument& e) {
        report << "  " << node << ": " << e.what() << '\n';
      }
    }
    std::ostringstream csv;
    write_trace_csv(csv, tx.trace);
    write_file(g, "covert_trace.csv", csv.str(), out);
  } else {
    if (a.sweep != "freq" && a.sweep != "rate" && a.sweep != "offchip")
      throw UsageError("--sweep must be one of freq, rate, offchip");
    const std::vector<double> values = a.values.empty() ? default_sweep(a.sweep) : si_list("values", a.values);
    SweepOptions opts;
    opts.jobs = g.jobs;
    std::vector<SweepPoint> curve;
    if (a.sweep == "freq") curve = sweep_switching_frequency(cfg.converter, ch, values, opts);
    else if (a.sweep == "rate") curve = sweep_bit_rate(cfg.converter, ch, values, opts);
    else curve = sweep_offchip(cfg.converter, ch, values, opts);

    std::ostringstream csv;
    write_curve_csv(csv, curve);
    write_file(g, "sweep_" + a.sweep + ".csv", csv.str(), out);

    const auto nodes = sink_nodes(ch);
    report << "sweep " << a.sweep << ", delta_v [mV] at sink nodes\n" << std::setw(12) << "value";
    for (const auto& n : nodes) report << std::setw(12) << n;
    report << '\n' << std::fixed << std::setprecision(4);
    for (const auto& p : curve) {
      report << std::setw(12) << format_si(p.value);
      for (const auto& n : nodes) report << std::setw(12) << p.delta(n).delta_v * 1e3;
      report << '\n';
    }
    report << std::defaultfloat;
    if (a.sweep == "rate") {
      report << "\nbandwidth [kbit/s]\n";
      for (double res : si_list("resolution", a.resolution)) {
        for (const auto& n : nodes) {
          const auto bw = bandwidth(curve, n, res);
          report << "  resolution " << format_si(res) << "V  " << std::left << std::setw(6) << n << std::right;
          if (bw)
            report << std::fixed << std::setprecision(1) << *bw / 1e3 << std::defaultfloat << '\n';
          else
            report << "below resolution\n";
        }
      }
    }
    if (a.sweep == "offchip" && curve.size() >= 2) {
      report << "\nlinear fit of delta_v vs r_offchip\n";
      std::vector<double> x;
      for (const auto& p : curve) x.push_back(p.value);
      for (const auto& n : nodes) {
        std::vector<double> y;
        for (const auto& p : curve) y.push_back(p.delta(n).delta_v);
        const LineFit fit = fit_line(x, y);
        report << "  " << std::left << std::setw(6) << n << std::right << "slope " << format_double(fit.slope)
               << " V/ohm, max residual " << format_double(fit.residual_fraction * 100.0) << "% of range\n";
      }
    }
  }
  out << report.str();
  write_file(g, "report.txt", report.str(), out);
  return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-port model, extraction and covert-channel simulation of switched-capacitor converters",
               "sccovert"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--out", g.out_dir, "Directory for CSV and report files")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Parallel sweep points / extraction columns")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Reserved; simulations are deterministic");

  AnalyzeArgs analyze;
  auto* an = app.add_subcommand("analyze", "Analytical R-matrices");
  an->add_option("config", analyze.config, "Config file")->required();
  an->add_flag("--fsl", analyze.fsl, "Fast switching limit (default)");
  an->add_flag("--ssl", analyze.ssl, "Slow switching limit");
  an->add_flag("--combined", analyze.combined, "FSL + SSL estimate");
  an->add_option("--freq", analyze.freq, "Override the switching frequency");

  ExtractArgs extract;
  auto* ex = app.add_subcommand("extract", "R-parameters from transient simulation");
  ex->add_option("config", extract.config, "Config file")->required();
  ex->add_option("--freq", extract.freq, "Override the switching frequency");
  ex->add_option("--mode", extract.mode, "current or resistor")
      ->check(CLI::IsMember({"current", "resistor"}))
      ->capture_default_str();
  ex->add_option("--i-test", extract.i_test, "Test current drawn from each port");
  ex->add_option("--r-fixed", extract.r_fixed, "Resistor-mode test load");
  ex->add_option("--r-open", extract.r_open, "Resistor-mode idle load");

  TransientArgs transient;
  auto* tr = app.add_subcommand("transient", "Raw transient waveforms");
  tr->add_option("config", transient.config, "Config file")->required();
  tr->add_option("--duration", transient.duration, "Simulated time, e.g. 20u")->required();
  tr->add_option("--loads", transient.loads, "Per-port load resistances or 'open', comma separated");
  tr->add_flag("--period-mean", transient.period_mean, "Record one mean sample per switching period");

  CovertArgs covert;
  auto* cv = app.add_subcommand("covert", "Covert-channel transmission and sweeps");
  cv->add_option("config", covert.config, "Config file")->required();
  cv->add_option("--channel", covert.channel, "Extra config file with a [channel] section");
  cv->add_option("--sweep", covert.sweep, "freq, rate or offchip")->check(CLI::IsMember({"freq", "rate", "offchip"}));
  cv->add_option("--values", covert.values, "Sweep points, comma separated");
  cv->add_option("--bits", covert.bits, "Bit pattern");
  cv->add_option("--rate", covert.rate, "Bit rate, e.g. 40k");
  cv->add_option("--resolution", covert.resolution, "Sensor resolution(s) for bandwidth, comma separated")
      ->capture_default_str();
  cv->add_option("--source", covert.source, "Source stage (1-based)");
  cv->add_option("--sinks", covert.sinks, "Sink stages (1-based), comma separated");
  cv->add_option("--skip-bits", covert.skip_bits, "Leading bits left out of the statistics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  }

  try {
    if (*an) return cmd_analyze(analyze, g, out);
    if (*ex) return cmd_extract(extract, g, out);
    if (*tr) return cmd_transient(transient, g, out);
    if (*cv) return cmd_covert(covert, g, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return no_convergence;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return no_convergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return internal_error;
  }
  return usage_error;
}

}  // namespace sccovert::cli

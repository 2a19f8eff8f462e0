#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sccovert/analytical.hpp"
#include "sccovert/converter.hpp"
#include "sccovert/network.hpp"
#include "sccovert/transient.hpp"

namespace sccovert {

// Load-modulation channel between converter stages. The source toggles its
// load between r_light (bit '1') and r_heavy (bit '0'); every other stage
// carries r_idle. Stage indices are 0-based.
struct ChannelConfig {
  std::size_t source = 0;
  std::vector<std::size_t> sinks{1, 2};
  double r_heavy = 1.0;
  double r_light = 100.0;
  double r_idle = 100.0;
  double bit_period = 25e-6;
  std::string bits = "1010";
  // Leading bits left out of the level statistics (e.g. a training preamble).
  std::size_t skip_bits = 0;
  StepPolicy policy;
};

std::vector<std::string> validate(const ChannelConfig& cfg, const ConverterSpec& spec);

struct LoadSegment {
  double start = 0.0;
  double end = 0.0;
  LoadSet loads;
};

struct LoadProfile {
  LoadSet idle;                       // before and after the pattern
  std::vector<LoadSegment> segments;  // one per bit

  const LoadSet& at(double time) const;
};

LoadProfile encode_schedule(const ChannelConfig& cfg, std::size_t n_stages);

// Steady part of one bit: the whole switching periods inside its final half.
// When none fits the window covers the trailing half-bit and settled = false.
struct BitWindow {
  long long first_step = 0;  // relative to the start of the pattern
  long long step_count = 0;
  bool settled = true;
};

struct NodeDelta {
  std::string node;   // "out<k>" or "in<k>"
  double delta_v = 0.0;
  double mean_one = 0.0;
  double mean_zero = 0.0;
};

struct ChannelReport {
  std::vector<NodeDelta> deltas;       // every output, then every input tap
  std::vector<std::string> nodes;      // column order of bit_means
  std::vector<std::vector<double>> bit_means;  // [bit][node] window means
  std::vector<BitWindow> windows;
  std::string decoded;
  std::size_t bit_errors = 0;
  std::vector<std::string> warnings;

  const NodeDelta& delta(std::string_view node) const;
};

struct Transmission {
  TransientTrace trace;  // period means from the start of the pattern
  ChannelReport report;
};

// Bit boundaries land on the nearest integration step.
long long steps_per_bit(const ChannelConfig& cfg, const ConverterSpec& spec);
std::vector<BitWindow> bit_windows(const ChannelConfig& cfg, const ConverterSpec& spec);

// Pre-rolls to the periodic steady state of the first bit's loading, then
// plays the pattern. delta_v per node is |mean over '1' windows - mean over
// '0' windows| (zero when the pattern lacks one of the symbols).
Transmission transmit(const SwitchedNetwork& network, const ChannelConfig& cfg);

// Solves V = V_tr - R diag(1/R_load) V for both source load levels and
// returns |V('1') - V('0')| per port. Throws std::domain_error if either
// solution has a negative voltage.
Eigen::VectorXd predict_delta_v(const RMatrix& r, const ChannelConfig& cfg);

struct DecodeOptions {
  std::optional<double> threshold;  // default: trained on the first two bits
  double resolution = 0.0;          // sensor LSB in volts; 0 = ideal
};

struct DecodeResult {
  std::string bits;  // '?' for windows that cannot be decided
  std::size_t errors = 0;
  double ber = 0.0;
  double threshold = 0.0;
};

// Thresholds each bit's steady-window mean at `node`. Readings above the
// threshold decode as '1' (light load). Works on every-step and period-mean
// traces that start at the beginning of the pattern.
DecodeResult decode(const TransientTrace& trace, const ChannelConfig& cfg, const ConverterSpec& spec,
                    std::string_view node, const DecodeOptions& options = {});

struct SweepPoint {
  double value = 0.0;
  std::vector<NodeDelta> deltas;

  const NodeDelta& delta(std::string_view node) const;
};

struct SweepOptions {
  unsigned jobs = 1;
  // Frequency sweep: bits are stretched to at least this many switching
  // periods so every point reaches its steady levels.
  double min_periods_per_bit = 200.0;
};

std::vector<SweepPoint> sweep_switching_frequency(const ConverterSpec& spec, const ChannelConfig& cfg,
                                                  const std::vector<double>& frequencies,
                                                  const SweepOptions& options = {});

std::vector<SweepPoint> sweep_bit_rate(const ConverterSpec& spec, const ChannelConfig& cfg,
                                       const std::vector<double>& rates, const SweepOptions& options = {});

std::vector<SweepPoint> sweep_offchip(const ConverterSpec& spec, const ChannelConfig& cfg,
                                      const std::vector<double>& r_offchip, const SweepOptions& options = {});

// Highest rate whose delta_v at `node` still reaches `resolution`,
// interpolated linearly between the bracketing sweep points. Empty when even
// the slowest rate falls short.
std::optional<double> bandwidth(const std::vector<SweepPoint>& rate_curve, std::string_view node,
                                double resolution);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  double residual_fraction = 0.0;  // max |residual| / (max y - min y)
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// `sweep_value,node,delta_v_volts`, rows ordered by sweep value then node.
void write_curve_csv(std::ostream& out, const std::vector<SweepPoint>& curve);

void write_report(std::ostream& out, const ChannelReport& report, const ChannelConfig& cfg);

}  // namespace sccovert

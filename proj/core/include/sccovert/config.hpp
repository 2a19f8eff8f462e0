#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sccovert/converter.hpp"
#include "sccovert/covert.hpp"
#include "sccovert/extraction.hpp"
#include "sccovert/transient.hpp"

namespace sccovert {

// Run settings shared by the extraction and transient commands.
struct SimulationSettings {
  StepPolicy policy;
  double i_test = 10e-3;
  double tolerance = 10e-6;
  int window_periods = 8;
  std::size_t max_periods = 20000;
  double r_fixed = 50.0;
  double r_open = 1e6;

  ExtractionOptions extraction(unsigned jobs = 1) const;
};

// Unset keys keep the three-stage reference design and the default channel.
struct Config {
  ConverterSpec converter = three_stage_reference();
  ChannelConfig channel;
  SimulationSettings simulation;
};

// Line 0 means the problem is not tied to a single line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, const std::string& message);
  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

// Text format:
//
//   # comment
//   [converter]
//   n_stages = 3
//   c_fly = 1u            # one value is broadcast to every stage
//   r_par_trunk = 10m, 10m, 10m
//
// Sections: converter, channel, simulation. Stage numbers in [channel] are
// 1-based. Values accept SI prefixes. Unknown keys, repeated keys and bad
// values are errors. The converter section is validated after parsing.
void apply_config(std::istream& in, Config& config, std::string_view source = "<input>");
Config parse_config(std::istream& in, std::string_view source = "<input>");
void apply_config_file(const std::filesystem::path& path, Config& config);
Config load_config(const std::filesystem::path& path);

// Writes every resolved key in the same format; parsing the output gives back
// the same Config.
void write_config(std::ostream& out, const Config& config);

}  // namespace sccovert

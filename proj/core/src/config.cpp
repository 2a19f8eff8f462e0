#include "sccovert/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sccovert/si_units.hpp"

namespace sccovert {

ExtractionOptions SimulationSettings::extraction(unsigned jobs) const {
  ExtractionOptions opts;
  opts.i_test = i_test;
  opts.policy = policy;
  opts.tolerance = tolerance;
  opts.window_periods = window_periods;
  opts.max_periods = max_periods;
  opts.jobs = jobs;
  return opts;
}

namespace {

std::string describe(const std::string& source, int line, const std::string& message) {
  std::ostringstream out;
  out << source;
  if (line > 0) out << ':' << line;
  out << ": " << message;
  return out.str();
}

}  // namespace

ConfigError::ConfigError(std::string source, int line, const std::string& message)
    : std::runtime_error(describe(source, line, message)), source_(std::move(source)), line_(line) {}

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const std::map<std::string, std::vector<std::string>, std::less<>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> keys{
      {"converter",
       {"n_stages", "v_in", "r_switch", "c_fly", "c_out", "r_par", "r_par_trunk", "r_par_branch", "r_offchip",
        "f_sw", "dead_time_fraction"}},
      {"channel", {"source", "sinks", "r_heavy", "r_light", "r_idle", "bit_period", "bit_rate", "bits", "skip_bits"}},
      {"simulation",
       {"steps_per_period", "i_test", "tolerance", "window_periods", "max_periods", "r_fixed", "r_open"}},
  };
  return keys;
}

class Resolver {
 public:
  Resolver(std::string source, std::map<std::string, Entry> entries)
      : source_(std::move(source)), entries_(std::move(entries)) {}

  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const Entry* e = find(key);
    throw ConfigError(source_, e ? e->line : 0, key + ": " + message);
  }

  double number(const std::string& key, std::string_view text) const {
    try {
      const double v = parse_si(text);
      if (!std::isfinite(v)) fail(key, "value must be finite");
      return v;
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

  void real(const std::string& key, double& target) const {
    if (const Entry* e = find(key)) target = number(key, e->value);
  }

  template <class Int>
  void integer(const std::string& key, Int& target, long long min) const {
    const Entry* e = find(key);
    if (!e) return;
    long long v = 0;
    const auto* end = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail(key, "expected an integer, got '" + e->value + "'");
    if (v < min) fail(key, "must be at least " + std::to_string(min));
    target = static_cast<Int>(v);
  }

  std::vector<std::string> items(const std::string& key) const {
    std::string_view text = trim(find(key)->value);
    if (text.size() >= 2 && text.front() == '[' && text.back() == ']') text = trim(text.substr(1, text.size() - 2));
    std::vector<std::string> out;
    if (text.empty()) fail(key, "empty list");
    std::size_t pos = 0;
    while (true) {
      const auto comma = text.find(',', pos);
      const auto item = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
      if (item.empty()) fail(key, "empty list item");
      out.emplace_back(item);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return out;
  }

  // A single value is broadcast to n entries.
  std::vector<double> real_list(const std::string& key, std::size_t n) const {
    std::vector<double> out;
    for (const auto& item : items(key)) out.push_back(number(key, item));
    if (out.size() == 1) out.assign(n, out.front());
    if (out.size() != n)
      fail(key, "expected 1 or " + std::to_string(n) + " values, got " + std::to_string(out.size()));
    return out;
  }

  std::vector<std::size_t> stage_list(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : items(key)) out.push_back(stage(key, item));
    return out;
  }

  std::size_t stage(const std::string& key, std::string_view text) const {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || v < 1)
      fail(key, "expected a stage number >= 1, got '" + std::string(text) + "'");
    return static_cast<std::size_t>(v - 1);
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

// Stage-indexed arrays follow a change of n_stages when they are uniform.
void resize_uniform(std::vector<double>& values, std::size_t n, const Resolver& r, const std::string& key) {
  if (values.size() == n) return;
  if (!values.empty() && std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    values.assign(n, values.front());
    return;
  }
  r.fail("converter.n_stages", "changes the stage count but " + key + " is not given");
}

void resolve_converter(const Resolver& r, ConverterSpec& spec) {
  r.integer("converter.n_stages", spec.n_stages, 1);
  const std::size_t n = spec.n_stages;
  r.real("converter.v_in", spec.v_in);
  r.real("converter.r_switch", spec.r_switch);
  r.real("converter.r_offchip", spec.r_offchip);
  r.real("converter.f_sw", spec.f_sw);
  r.real("converter.dead_time_fraction", spec.dead_time_fraction);

  auto list = [&](const char* key, std::vector<double>& target, const char* name) {
    if (r.find(key)) target = r.real_list(key, n);
    else resize_uniform(target, n, r, name);
  };
  list("converter.c_fly", spec.c_fly, "c_fly");
  list("converter.c_out", spec.c_out, "c_out");
  if (r.find("converter.r_par")) {
    if (r.find("converter.r_par_trunk") || r.find("converter.r_par_branch"))
      r.fail("converter.r_par", "cannot be combined with r_par_trunk or r_par_branch");
    spec.r_trunk = r.real_list("converter.r_par", n);
    spec.r_branch = spec.r_trunk;
  } else {
    list("converter.r_par_trunk", spec.r_trunk, "r_par_trunk");
    list("converter.r_par_branch", spec.r_branch, "r_par_branch");
  }

  static const std::map<std::string, std::string, std::less<>> field_keys{
      {"n_stages", "converter.n_stages"}, {"v_in", "converter.v_in"},
      {"r_switch", "converter.r_switch"}, {"r_offchip", "converter.r_offchip"},
      {"f_sw", "converter.f_sw"},         {"dead_time_fraction", "converter.dead_time_fraction"},
      {"c_fly", "converter.c_fly"},       {"c_out", "converter.c_out"},
      {"r_trunk", "converter.r_par_trunk"}, {"r_branch", "converter.r_par_branch"},
  };
  const auto issues = validate(spec);
  if (issues.empty()) return;
  const auto& issue = issues.front();
  std::string field = issue.field.substr(0, issue.field.find('['));
  auto key = field_keys.find(field);
  std::string config_key = key == field_keys.end() ? "converter." + field : key->second;
  if ((field == "r_trunk" || field == "r_branch") && r.find("converter.r_par")) config_key = "converter.r_par";
  const Entry* e = r.find(config_key);
  throw ConfigError(r.source(), e ? e->line : 0, issue.field + ": " + issue.message);
}

void resolve_channel(const Resolver& r, ChannelConfig& ch) {
  if (const Entry* e = r.find("channel.source")) ch.source = r.stage("channel.source", e->value);
  if (const Entry* e = r.find("channel.sinks"))
    ch.sinks = e->value.empty() ? std::vector<std::size_t>{} : r.stage_list("channel.sinks");
  r.real("channel.r_heavy", ch.r_heavy);
  r.real("channel.r_light", ch.r_light);
  r.real("channel.r_idle", ch.r_idle);
  if (r.find("channel.bit_period") && r.find("channel.bit_rate"))
    r.fail("channel.bit_rate", "give either bit_period or bit_rate, not both");
  r.real("channel.bit_period", ch.bit_period);
  if (const Entry* e = r.find("channel.bit_rate")) {
    const double rate = r.number("channel.bit_rate", e->value);
    if (!(rate > 0.0)) r.fail("channel.bit_rate", "must be positive");
    ch.bit_period = 1.0 / rate;
  }
  if (const Entry* e = r.find("channel.bits")) {
    if (e->value.find_first_not_of("01") != std::string::npos) r.fail("channel.bits", "only 0 and 1 are allowed");
    ch.bits = e->value;
  }
  r.integer("channel.skip_bits", ch.skip_bits, 0);
}

void resolve_simulation(const Resolver& r, SimulationSettings& sim) {
  r.integer("simulation.steps_per_period", sim.policy.steps_per_period, 4);
  if (sim.policy.steps_per_period % 2 != 0) r.fail("simulation.steps_per_period", "must be even");
  r.real("simulation.i_test", sim.i_test);
  r.real("simulation.tolerance", sim.tolerance);
  if (!(sim.tolerance > 0.0)) r.fail("simulation.tolerance", "must be positive");
  r.integer("simulation.window_periods", sim.window_periods, 1);
  r.integer("simulation.max_periods", sim.max_periods, 1);
  r.real("simulation.r_fixed", sim.r_fixed);
  r.real("simulation.r_open", sim.r_open);
}

}  // namespace

void apply_config(std::istream& in, Config& config, std::string_view source) {
  const std::string src(source);
  std::map<std::string, Entry> entries;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(src, line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_keys().contains(section)) throw ConfigError(src, line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(src, line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (section.empty()) throw ConfigError(src, line_no, "key '" + key + "' outside a section");
    const auto& allowed = known_keys().find(section)->second;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(src, line_no, "unknown key '" + key + "' in [" + section + "]");
    if (value.empty() && key != "bits" && key != "sinks")
      throw ConfigError(src, line_no, "missing value for '" + key + "'");
    const std::string full = section + "." + key;
    if (entries.contains(full)) throw ConfigError(src, line_no, "duplicate key '" + key + "'");
    entries.emplace(full, Entry{value, line_no});
  }

  Resolver resolver(src, std::move(entries));
  resolve_converter(resolver, config.converter);
  resolve_channel(resolver, config.channel);
  resolve_simulation(resolver, config.simulation);
}

Config parse_config(std::istream& in, std::string_view source) {
  Config config;
  apply_config(in, config, source);
  return config;
}

void apply_config_file(const std::filesystem::path& path, Config& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  apply_config(in, config, path.string());
}

Config load_config(const std::filesystem::path& path) {
  Config config;
  apply_config_file(path, config);
  return config;
}

namespace {

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_si(values[i]);
  }
  return out;
}

}  // namespace

void write_config(std::ostream& out, const Config& config) {
  const ConverterSpec& s = config.converter;
  out << "[converter]\n"
      << "n_stages = " << s.n_stages << '\n'
      << "v_in = " << format_si(s.v_in) << '\n'
      << "r_switch = " << format_si(s.r_switch) << '\n'
      << "c_fly = " << join(s.c_fly) << '\n'
      << "c_out = " << join(s.c_out) << '\n'
      << "r_par_trunk = " << join(s.r_trunk) << '\n'
      << "r_par_branch = " << join(s.r_branch) << '\n'
      << "r_offchip = " << format_si(s.r_offchip) << '\n'
      << "f_sw = " << format_si(s.f_sw) << '\n'
      << "dead_time_fraction = " << format_si(s.dead_time_fraction) << '\n';

  const ChannelConfig& c = config.channel;
  out << "\n[channel]\n"
      << "source = " << c.source + 1 << '\n'
      << "sinks = ";
  for (std::size_t i = 0; i < c.sinks.size(); ++i) out << (i ? ", " : "") << c.sinks[i] + 1;
  out << '\n'
      << "r_heavy = " << format_si(c.r_heavy) << '\n'
      << "r_light = " << format_si(c.r_light) << '\n'
      << "r_idle = " << format_si(c.r_idle) << '\n'
      << "bit_period = " << format_si(c.bit_period) << '\n';
  out << "bits = " << c.bits << '\n';
  out << "skip_bits = " << c.skip_bits << '\n';

  const SimulationSettings& m = config.simulation;
  out << "\n[simulation]\n"
      << "steps_per_period = " << m.policy.steps_per_period << '\n'
      << "i_test = " << format_si(m.i_test) << '\n'
      << "tolerance = " << format_si(m.tolerance) << '\n'
      << "window_periods = " << m.window_periods << '\n'
      << "max_periods = " << m.max_periods << '\n'
      << "r_fixed = " << format_si(m.r_fixed) << '\n'
      << "r_open = " << format_si(m.r_open) << '\n';
}

}  // namespace sccovert

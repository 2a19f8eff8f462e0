#include "sccovert/converter.hpp"

#include <cmath>
#include <sstream>

namespace sccovert {

ConverterSpec ConverterSpec::uniform(std::size_t n_stages, double v_in, double r_switch,
                                     double c_fly, double c_out, double r_par,
                                     double f_sw) {
  ConverterSpec spec;
  spec.n_stages = n_stages;
  spec.v_in = v_in;
  spec.r_switch = r_switch;
  spec.c_fly.assign(n_stages, c_fly);
  spec.c_out.assign(n_stages, c_out);
  spec.r_trunk.assign(n_stages, r_par);
  spec.r_branch.assign(n_stages, r_par);
  spec.f_sw = f_sw;
  return spec;
}

bool ConverterSpec::has_equal_segments() const {
  if (r_trunk.empty()) return false;
  const double ref = r_trunk.front();
  for (double v : r_trunk)
    if (v != ref) return false;
  for (double v : r_branch)
    if (v != ref) return false;
  return true;
}

ConverterSpec three_stage_reference() {
  return ConverterSpec::uniform(3, 1.0, 0.1, 1e-6, 10e-6, 0.01, 10e6);
}

namespace {

void check_list(std::vector<ValidationIssue>& out, const std::string& name,
                const std::vector<double>& values, std::size_t n, bool strictly_positive) {
  if (values.size() != n) {
    std::ostringstream msg;
    msg << "expected " << n << " entries, got " << values.size();
    out.push_back({name, msg.str()});
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const std::string field = name + "[" + std::to_string(i) + "]";
    if (!std::isfinite(v)) {
      out.push_back({field, "value must be finite"});
    } else if (strictly_positive && !(v > 0.0)) {
      out.push_back({field, "capacitance must be positive"});
    } else if (!strictly_positive && v < 0.0) {
      out.push_back({field, "resistance must be non-negative"});
    }
  }
}

}  // namespace

std::vector<ValidationIssue> validate(const ConverterSpec& spec) {
  std::vector<ValidationIssue> issues;
  if (spec.n_stages == 0) issues.push_back({"n_stages", "must be a positive integer"});
  if (!std::isfinite(spec.v_in)) issues.push_back({"v_in", "value must be finite"});
  if (!std::isfinite(spec.r_switch) || spec.r_switch < 0.0)
    issues.push_back({"r_switch", "resistance must be non-negative"});
  if (!std::isfinite(spec.r_offchip) || spec.r_offchip < 0.0)
    issues.push_back({"r_offchip", "resistance must be non-negative"});
  if (!std::isfinite(spec.f_sw) || !(spec.f_sw > 0.0))
    issues.push_back({"f_sw", "switching frequency must be positive"});
  if (!(spec.dead_time_fraction >= 0.0 && spec.dead_time_fraction < 0.5))
    issues.push_back({"dead_time_fraction", "must satisfy 0 <= fraction < 0.5"});
  check_list(issues, "c_fly", spec.c_fly, spec.n_stages, true);
  check_list(issues, "c_out", spec.c_out, spec.n_stages, true);
  check_list(issues, "r_trunk", spec.r_trunk, spec.n_stages, false);
  check_list(issues, "r_branch", spec.r_branch, spec.n_stages, false);
  return issues;
}

SpecError::SpecError(std::vector<ValidationIssue> issues)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "invalid converter spec:";
        for (const auto& issue : issues) msg << "\n  " << issue.field << ": " << issue.message;
        return msg.str();
      }()),
      issues_(std::move(issues)) {}

void require_valid(const ConverterSpec& spec) {
  auto issues = validate(spec);
  if (!issues.empty()) throw SpecError(std::move(issues));
}

}  // namespace sccovert

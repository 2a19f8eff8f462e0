#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sccovert {

// Parameterization of an N-stage 2:1 switched-capacitor ladder.
//
// The supply reaches the stages through a resistive tree: an optional
// off-chip resistor, then N trunk segments in series, with stage i tapping
// off the end of trunk segment i through its own branch segment. Trunk
// segment k therefore carries the input current of stages k..N.
struct ConverterSpec {
  std::size_t n_stages = 3;
  double v_in = 1.0;       // V
  double r_switch = 0.1;   // ohm, every switch
  std::vector<double> c_fly;     // F, one per stage
  std::vector<double> c_out;     // F, one per stage
  std::vector<double> r_trunk;   // ohm, shared supply segments
  std::vector<double> r_branch;  // ohm, per-stage tap segments
  double r_offchip = 0.0;        // ohm, in series with the supply
  double f_sw = 10e6;            // Hz
  double dead_time_fraction = 0.02;  // of T, per phase transition

  double period() const { return 1.0 / f_sw; }

  // N identical stages with every parasitic segment equal to r_par.
  static ConverterSpec uniform(std::size_t n_stages, double v_in, double r_switch,
                               double c_fly, double c_out, double r_par,
                               double f_sw);

  // True when every trunk and branch segment has the same value.
  bool has_equal_segments() const;
};

// Three stages, 1 V input, 1 uF flying, 10 uF output, 0.1 ohm switches,
// 10 mOhm segments, 10 MHz.
ConverterSpec three_stage_reference();

struct ValidationIssue {
  std::string field;
  std::string message;
};

// Reports every violated invariant; never throws.
std::vector<ValidationIssue> validate(const ConverterSpec& spec);

class SpecError : public std::runtime_error {
 public:
  explicit SpecError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

// Throws SpecError listing all issues when the spec is invalid.
void require_valid(const ConverterSpec& spec);

}  // namespace sccovert

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "sccovert/analytical.hpp"
#include "sccovert/covert.hpp"
#include "sccovert/extraction.hpp"

using namespace sccovert;

namespace {

ChannelConfig channel(std::size_t source, std::vector<std::size_t> sinks, std::string bits = "1010") {
  ChannelConfig c;
  c.source = source;
  c.sinks = std::move(sinks);
  c.bits = std::move(bits);
  return c;
}

const SwitchedNetwork& reference_net() {
  static const SwitchedNetwork net = build_ladder(three_stage_reference());
  return net;
}

const RMatrix& extracted() {
  static const RMatrix r = extract_r_matrix(reference_net()).r;
  return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(ChannelValidate, Defaults) { EXPECT_TRUE(validate(ChannelConfig{}, three_stage_reference()).empty()); }

TEST(ChannelValidate, Problems) {
  const auto spec = three_stage_reference();
  auto bad = [&](auto mutate) {
    ChannelConfig c;
    mutate(c);
    return !validate(c, spec).empty();
  };
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.source = 3; }));
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.sinks = {0}; }));
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.sinks = {1, 1}; }));
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.sinks = {5}; }));
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.bit_period = 1.9e-7; }));
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.bits = "10x1"; }));
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.r_heavy = 200.0; }));
  EXPECT_TRUE(bad([](ChannelConfig& c) { c.r_idle = 0.0; }));
  EXPECT_FALSE(bad([](ChannelConfig& c) { c.bit_period = 2e-7; }));
  EXPECT_FALSE(bad([](ChannelConfig& c) { c.r_heavy = c.r_light; }));
}

TEST(EncodeSchedule, AlternatingPattern) {
  ChannelConfig c;
  c.bits = "1010";
  c.bit_period = 25e-6;
  const LoadProfile p = encode_schedule(c, 3);
  ASSERT_EQ(p.segments.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& s = p.segments[k];
    EXPECT_DOUBLE_EQ(s.start, k * 25e-6);
    EXPECT_DOUBLE_EQ(s.end, (k + 1) * 25e-6);
    EXPECT_EQ(s.loads[0].kind, PortLoad::Kind::resistor);
    EXPECT_DOUBLE_EQ(s.loads[0].value, k % 2 == 0 ? 100.0 : 1.0);
    EXPECT_DOUBLE_EQ(s.loads[1].value, 100.0);
    EXPECT_DOUBLE_EQ(s.loads[2].value, 100.0);
  }
  EXPECT_DOUBLE_EQ(p.at(30e-6)[0].value, 1.0);
  EXPECT_DOUBLE_EQ(p.at(1.0)[0].value, 100.0);
}

TEST(EncodeSchedule, EmptyAndConstantPatterns) {
  ChannelConfig c;
  c.bits = "";
  const LoadProfile empty = encode_schedule(c, 3);
  EXPECT_TRUE(empty.segments.empty());
  EXPECT_DOUBLE_EQ(empty.at(0.0)[0].value, c.r_idle);
  c.bits = "1111";
  for (const auto& s : encode_schedule(c, 3).segments) EXPECT_DOUBLE_EQ(s.loads[0].value, c.r_light);
}

TEST(BitWindows, FinalHalfAlignedToPeriods) {
  const auto spec = three_stage_reference();
  ChannelConfig c;
  EXPECT_EQ(steps_per_bit(c, spec), 128000);
  const auto w = bit_windows(c, spec);
  ASSERT_EQ(w.size(), 4u);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const long long start = static_cast<long long>(k) * 128000;
    EXPECT_TRUE(w[k].settled);
    EXPECT_EQ(w[k].first_step % 512, 0);
    EXPECT_EQ(w[k].step_count % 512, 0);
    EXPECT_GE(w[k].first_step, start + 64000);
    EXPECT_EQ(w[k].first_step + w[k].step_count, start + 128000);
  }
}

TEST(Transmit, SourceOneAtReference) {
  const Transmission tx = transmit(reference_net(), channel(0, {1, 2}));
  const auto& r = tx.report;
  EXPECT_EQ(r.decoded, "1010");
  EXPECT_EQ(r.bit_errors, 0u);
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.nodes, (std::vector<std::string>{"out1", "out2", "out3", "in1", "in2", "in3"}));
  for (const auto& d : r.deltas) EXPECT_GE(d.delta_v, 0.0);
  // Ratio law against the extracted matrix.
  const auto& m = extracted().r;
  EXPECT_LT(rel(r.delta("out2").delta_v / r.delta("out1").delta_v, m(1, 0) / m(0, 0)), 0.05);
  EXPECT_LT(rel(r.delta("out3").delta_v / r.delta("out1").delta_v, m(2, 0) / m(0, 0)), 0.05);
  EXPECT_LT(rel(r.delta("out2").delta_v, r.delta("out3").delta_v), 0.01);
  // Light load ('1') sits higher at the source.
  EXPECT_GT(r.delta("out1").mean_one, r.delta("out1").mean_zero);
  EXPECT_EQ(tx.trace.size(), 4u * 250u);
  EXPECT_EQ(tx.trace.samples_per_period, 1);
}

TEST(Transmit, SourceTwoDoublesTowardsStageThree) {
  const auto r = transmit(reference_net(), channel(1, {0, 2})).report;
  EXPECT_LT(rel(r.delta("out3").delta_v, 2 * r.delta("out1").delta_v), 0.05);
  EXPECT_LT(rel(r.delta("in3").delta_v, 2 * r.delta("in1").delta_v), 0.05);
}

TEST(Transmit, EqualLevelsGiveNoSignal) {
  auto c = channel(0, {1, 2});
  c.r_heavy = c.r_light;
  for (const auto& d : transmit(reference_net(), c).report.deltas) EXPECT_LT(d.delta_v, 1e-12);
}

TEST(Transmit, SymbolMissingGivesZero) {
  auto c = channel(0, {1, 2}, "111");
  const auto r = transmit(reference_net(), c).report;
  for (const auto& d : r.deltas) EXPECT_EQ(d.delta_v, 0.0);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Transmit, ShortBitsAreFlaggedUnsettled) {
  auto c = channel(0, {1, 2});
  c.bit_period = 2.5e-7;
  const auto r = transmit(reference_net(), c).report;
  ASSERT_EQ(r.windows.size(), 4u);
  // 2.5 periods per bit: only every other bit holds a whole period in its second half.
  EXPECT_FALSE(r.windows[0].settled);
  EXPECT_EQ(r.windows[0].first_step, 640);
  EXPECT_EQ(r.windows[0].step_count, 640);
  EXPECT_TRUE(r.windows[1].settled);
  EXPECT_EQ(r.windows[1].first_step, 2048);
  EXPECT_EQ(r.windows[1].step_count, 512);
  EXPECT_FALSE(r.windows[2].settled);
  EXPECT_GE(r.warnings.size(), 2u);
  EXPECT_GT(r.delta("out1").delta_v, 0.0);
}

TEST(Transmit, Deterministic) {
  const auto a = transmit(reference_net(), channel(2, {0, 1}));
  const auto b = transmit(reference_net(), channel(2, {0, 1}));
  ASSERT_EQ(a.report.deltas.size(), b.report.deltas.size());
  for (std::size_t k = 0; k < a.report.deltas.size(); ++k)
    EXPECT_EQ(a.report.deltas[k].delta_v, b.report.deltas[k].delta_v);
  EXPECT_EQ(a.trace.values, b.trace.values);
  std::ostringstream ra, rb;
  write_report(ra, a.report, channel(2, {0, 1}));
  write_report(rb, b.report, channel(2, {0, 1}));
  EXPECT_EQ(ra.str(), rb.str());
}

TEST(Transmit, ChannelIsReciprocal) {
  const double forward = transmit(reference_net(), channel(0, {1})).report.delta("out2").delta_v;
  const double backward = transmit(reference_net(), channel(1, {0})).report.delta("out1").delta_v;
  EXPECT_LT(rel(forward, backward), 0.01);
}

TEST(Transmit, RejectsInvalidChannel) {
  EXPECT_THROW(transmit(reference_net(), channel(0, {0})), std::invalid_argument);
}

TEST(PredictDeltaV, NoLoadChangeNoSignal) {
  auto c = channel(0, {1, 2});
  c.r_heavy = c.r_light;
  EXPECT_EQ(predict_delta_v(extracted(), c).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PredictDeltaV, MatchesTransient) {
  const auto c = channel(0, {1, 2});
  const Eigen::VectorXd p = predict_delta_v(extracted(), c);
  const auto r = transmit(reference_net(), c).report;
  EXPECT_LT(rel(p[0], r.delta("out1").delta_v), 0.01);
  EXPECT_LT(rel(p[1], r.delta("out2").delta_v), 0.05);
  EXPECT_LT(rel(p[1] / p[0], extracted().r(1, 0) / extracted().r(0, 0)), 0.05);
}

TEST(PredictDeltaV, GrowsWithResistance) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.001, 0.3);
  for (int k = 0; k < 50; ++k) {
    auto spec = ConverterSpec::uniform(3, 1.0, u(rng), 1e-6, 1e-5, u(rng) / 10, 1e7);
    spec.r_offchip = u(rng) / 5;
    RMatrix r = r_matrix(spec, Regime::fsl);
    const auto c = channel(static_cast<std::size_t>(k % 3), {});
    const Eigen::VectorXd base = predict_delta_v(r, c);
    r.r *= 2.0;
    const Eigen::VectorXd doubled = predict_delta_v(r, c);
    for (int i = 0; i < 3; ++i) EXPECT_GT(doubled[i], base[i]) << k;
  }
}

TEST(PredictDeltaV, RejectsNegativeSolution) {
  RMatrix r;
  r.r = Eigen::Matrix2d{{0.2, -5.0}, {-5.0, 0.2}};
  r.v_tr = Eigen::Vector2d(0.5, 0.5);
  ChannelConfig c;
  c.source = 0;
  c.sinks = {1};
  c.r_idle = 1.0;
  EXPECT_THROW(predict_delta_v(r, c), std::domain_error);
}

TEST(Sweeps, BitRateCurveSortedAndParallelSafe) {
  auto c = channel(1, {2}, "10101010");
  c.skip_bits = 2;
  const std::vector<double> rates{200e3, 20e3, 100e3};
  const auto serial = sweep_bit_rate(three_stage_reference(), c, rates);
  SweepOptions par;
  par.jobs = 3;
  const auto parallel = sweep_bit_rate(three_stage_reference(), c, rates, par);
  ASSERT_EQ(serial.size(), 3u);
  EXPECT_EQ(serial[0].value, 20e3);
  EXPECT_EQ(serial[2].value, 200e3);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t n = 0; n < serial[k].deltas.size(); ++n)
      EXPECT_EQ(serial[k].deltas[n].delta_v, parallel[k].deltas[n].delta_v);
  EXPECT_GT(serial[0].delta("out3").delta_v, serial[2].delta("out3").delta_v);
}

TEST(Sweeps, SlowRateReachesSteadyAmplitude) {
  auto c = channel(1, {2}, "10101010");
  c.skip_bits = 2;
  const auto curve = sweep_bit_rate(three_stage_reference(), c, {5e3, 10e3});
  EXPECT_LT(rel(curve[0].delta("out3").delta_v, curve[1].delta("out3").delta_v), 0.005);
  const double settled = predict_delta_v(extracted(), c)[2];
  EXPECT_LT(rel(curve[0].delta("out3").delta_v, settled), 0.05);
}

// Equal shared resistance from stage 1 to stages 2 and 3 near the fast switching limit.
TEST(Sweeps, FrequencySweepKeepsSinksEqual) {
  const auto curve = sweep_switching_frequency(three_stage_reference(), channel(0, {1, 2}), {5e6, 10e6});
  for (const auto& p : curve) EXPECT_LT(rel(p.delta("out2").delta_v, p.delta("out3").delta_v), 0.01) << p.value;
}

TEST(Sweeps, OffchipBaselineAndSlope) {
  const auto c = channel(0, {1, 2});
  const auto curve = sweep_offchip(three_stage_reference(), c, {0.0, 0.05, 0.1});
  const auto base = transmit(reference_net(), c).report;
  EXPECT_EQ(curve[0].delta("out2").delta_v, base.delta("out2").delta_v);

  std::vector<double> x, y, model;
  for (const auto& p : curve) {
    x.push_back(p.value);
    y.push_back(p.delta("out2").delta_v);
    auto spec = three_stage_reference();
    spec.r_offchip = p.value;
    model.push_back(predict_delta_v(r_matrix(spec, Regime::fsl), c)[1]);
  }
  EXPECT_LT(rel(fit_line(x, y).slope, fit_line(x, model).slope), 0.10);
}

TEST(Bandwidth, InterpolatesCrossing) {
  auto point = [](double v, double d) { return SweepPoint{v, {NodeDelta{"out3", d, 0, 0}}}; };
  const std::vector<SweepPoint> curve{point(10e3, 5e-3), point(50e3, 3e-3), point(100e3, 1e-3)};
  EXPECT_DOUBLE_EQ(*bandwidth(curve, "out3", 2e-3), 75e3);
  EXPECT_DOUBLE_EQ(*bandwidth(curve, "out3", 3e-3), 50e3);
  EXPECT_DOUBLE_EQ(*bandwidth(curve, "out3", 0.5e-3), 100e3);
  EXPECT_FALSE(bandwidth(curve, "out3", 6e-3).has_value());
  EXPECT_FALSE(bandwidth({}, "out3", 1e-3).has_value());
  EXPECT_THROW(bandwidth(curve, "in9", 1e-3), std::out_of_range);
}

TEST(FitLine, ExactAndNoisy) {
  const auto exact = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_DOUBLE_EQ(exact.slope, 2.0);
  EXPECT_DOUBLE_EQ(exact.intercept, 1.0);
  EXPECT_NEAR(exact.max_residual, 0.0, 1e-15);
  const auto bent = fit_line({0, 1, 2}, {0, 1, 4});
  EXPECT_GT(bent.residual_fraction, 0.05);
  EXPECT_THROW(fit_line({1}, {1}), std::invalid_argument);
  EXPECT_THROW(fit_line({1, 1}, {1, 2}), std::invalid_argument);
}

TEST(CurveCsv, Layout) {
  const std::vector<SweepPoint> curve{{1e6, {NodeDelta{"out1", 1e-3, 0, 0}, NodeDelta{"in1", 2e-3, 0, 0}}}};
  std::ostringstream out;
  write_curve_csv(out, curve);
  EXPECT_EQ(out.str(), "sweep_value,node,delta_v_volts\n1e+06,out1,0.001\n1e+06,in1,0.002\n");
}

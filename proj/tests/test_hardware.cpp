#include "qwnpol/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

using namespace qwnpol;

TEST_CASE("actuation time: QWP half turn costs 12 s plus the LCR switch") {
  const RotationStage qwp{0, 15, 360}, hwp{0, 15, 180};
  CHECK(actuation_time(qwp, hwp, {0, 0, 0}, {180, 0, 0}) == doctest::Approx(12.4));
  CHECK(actuation_time(qwp, hwp, {10, 20, 1}, {10, 20, 2}) == doctest::Approx(0.4));
  CHECK(actuation_time(qwp, hwp, {350, 0, 0}, {10, 0, 0}) == doctest::Approx(20.0 / 15 + 0.4));
  CHECK(actuation_time(qwp, hwp, {0, 170, 0}, {0, 5, 0}) == doctest::Approx(15.0 / 15 + 0.4));
  CHECK(actuation_time(qwp, hwp, {0, 0, 0}, {180, 90, 0}) == doctest::Approx(18.4));
}

TEST_CASE("actuation time bounds") {
  const RotationStage qwp{0, 15, 360}, hwp{0, 15, 180};
  Rng rng = make_rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const CompensatorSettings a{360 * u(rng), 180 * u(rng), 0}, b{360 * u(rng), 180 * u(rng), 0};
    const double t = actuation_time(qwp, hwp, a, b);
    REQUIRE(t >= 0.4);
    REQUIRE(t <= (180.0 + 90.0) / 15 + 0.4 + 1e-12);
  }
}

TEST_CASE("shortest move is invariant under a full element period") {
  const RotationStage qwp{0, 15, 360}, hwp{0, 15, 180};
  Rng rng = make_rng(42);
  std::uniform_real_distribution<double> u(0, 360);
  for (int i = 0; i < 10000; ++i) {
    const CompensatorSettings a{u(rng), u(rng) / 2, 0}, b{u(rng), u(rng) / 2, 0};
    const double t = actuation_time(qwp, hwp, a, b);
    REQUIRE(actuation_time(qwp, hwp, a, {b.theta_qwp_deg + 360, b.theta_hwp_deg, 0}) == doctest::Approx(t));
    REQUIRE(actuation_time(qwp, hwp, a, {b.theta_qwp_deg, b.theta_hwp_deg + 180, 0}) == doctest::Approx(t));
    REQUIRE(actuation_time(qwp, hwp, {a.theta_qwp_deg - 360, a.theta_hwp_deg + 180, 0}, b) == doctest::Approx(t));
  }
}

TEST_CASE("rotation stage keeps its angle in range") {
  RotationStage s{350, 15, 360};
  CHECK(s.move_to(370) == doctest::Approx(20.0 / 15));
  CHECK(s.current_angle_deg == doctest::Approx(10));
}

TEST_CASE("LCR table construction") {
  CHECK_THROWS_AS(LcrLookupTable(std::vector<LcrEntry>{}), std::invalid_argument);
  CHECK_THROWS_AS(LcrLookupTable({{0, 1.0}, {1, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(LcrLookupTable({{0, 2 * kPi}}), std::invalid_argument);
  const auto u = LcrLookupTable::uniform(1000);
  CHECK(u.entries().size() == 1000);
  CHECK(u.max_gap() == doctest::Approx(2 * kPi / 1000));
  const auto g = LcrLookupTable::with_wrap_gap(1000, 0.5);
  CHECK(g.max_gap() >= 0.5);
  CHECK(g.max_gap() < 0.5 + 2 * 2 * kPi / 1000);
  for (const auto& e : g.entries()) REQUIRE(std::min(e.phase, 2 * kPi - e.phase) >= 0.25);
  const auto c = LcrLookupTable::with_wrap_gap(1000, 0.5, 2.0);
  for (const auto& e : c.entries()) REQUIRE(std::abs(e.phase - 2.0) >= 0.25);
}

TEST_CASE("LCR quantization") {
  const auto u = LcrLookupTable::uniform(1000);
  const double step = 2 * kPi / 1000;
  CHECK(lcr_quantize(17 * step, u).index == 17);
  CHECK(lcr_quantize(17 * step, u).applied == doctest::Approx(17 * step));
  CHECK(lcr_quantize(2 * kPi - 0.1 * step, u).index == 0);
  CHECK(lcr_quantize(-0.1 * step, u).index == 0);
  // Exact tie between entries 3 and 4 goes to the lower index.
  const LcrLookupTable t({{0, 0.0}, {1, 1.0}, {2, 2.0}, {3, 3.0}, {4, 4.0}});
  CHECK(lcr_quantize(3.5, t).index == 3);

  Rng rng = make_rng(43);
  std::uniform_real_distribution<double> r(0, 2 * kPi);
  double worst = 0;
  for (int i = 0; i < 100000; ++i) {
    const double q = r(rng);
    const double d = std::abs(std::remainder(lcr_quantize(q, u).applied - q, 2 * kPi));
    worst = std::max(worst, d);
    REQUIRE(d <= u.max_gap() / 2 + 1e-12);
  }
  CHECK(worst == doctest::Approx(kPi / 1000).epsilon(0.01));

  const auto gap = LcrLookupTable::with_wrap_gap(1000, 0.6);
  for (int i = 0; i < 100000; ++i) {
    const double q = r(rng);
    REQUIRE(std::abs(std::remainder(lcr_quantize(q, gap).applied - q, 2 * kPi)) <= gap.max_gap() / 2 + 1e-12);
  }
  // Requested at the centre of the wrap gap: error is at least half the gap.
  CHECK(std::abs(std::remainder(lcr_quantize(0.0, gap).applied, 2 * kPi)) >= 0.3);
}

TEST_CASE("polarimeter noise scaling") {
  PolarimeterModel m;
  CHECK(m.sigma_at(m.reference_power_dbm) == doctest::Approx(0.003));
  CHECK(m.sigma_at(m.reference_power_dbm - 20) == doctest::Approx(0.03));
  CHECK(m.sigma_at(m.reference_power_dbm - 20) / m.sigma_at(m.reference_power_dbm) == doctest::Approx(10.0));
  Rng rng = make_rng(44);
  CHECK_THROWS_AS(measure_stokes(StokesVector::vertical(), -41, m, rng), SignalBelowFloor);
  CHECK_NOTHROW(measure_stokes(StokesVector::vertical(), -21, m, rng));
  m.noise_sigma0 = 0;
  const StokesVector s(0.2, -0.3, 0.9);
  CHECK(measure_stokes(s, -30, m, rng).vec() == s.vec());
}

TEST_CASE("polarimeter noise statistics") {
  PolarimeterModel m;
  const StokesVector truth(0.1, -0.7, 0.5);
  Rng rng = make_rng(45), oracle_rng = make_rng(46);
  std::normal_distribution<double> n(0, m.noise_sigma0);
  double sq = 0, sq_oracle = 0;
  const int count = 100000;
  for (int i = 0; i < count; ++i) {
    const StokesVector s = measure_stokes(truth, m.reference_power_dbm, m, rng);
    REQUIRE(std::abs(s.vec().norm() - 1) < 1e-12);
    sq += std::pow(angular_distance(s, truth), 2);
    Eigen::Vector3d v = truth.vec() + Eigen::Vector3d(n(oracle_rng), n(oracle_rng), n(oracle_rng));
    sq_oracle += std::pow(std::acos(std::clamp(v.normalized().dot(truth.vec()), -1.0, 1.0)), 2);
  }
  const double rms = std::sqrt(sq / count), rms_oracle = std::sqrt(sq_oracle / count);
  CHECK(rms == doctest::Approx(rms_oracle).epsilon(0.10));
  // Two tangent components of sigma each.
  CHECK(rms == doctest::Approx(m.noise_sigma0 * std::sqrt(2.0)).epsilon(0.10));
}

TEST_CASE("polarimeter noise is deterministic under a seed") {
  PolarimeterModel m;
  Rng a = make_rng(47), b = make_rng(47);
  for (int i = 0; i < 1000; ++i) {
    REQUIRE(measure_stokes(StokesVector::diagonal(), -25, m, a).vec() ==
            measure_stokes(StokesVector::diagonal(), -25, m, b).vec());
  }
}

TEST_CASE("header preparation") {
  const HeaderSchedule sched;
  const HeaderPrep v = prepare_header(HeaderParity::V, sched), d = prepare_header(HeaderParity::D, sched);
  CHECK(v.ideal.vec() == StokesVector::vertical().vec());
  CHECK(d.ideal.vec() == StokesVector::diagonal().vec());
  CHECK(v.elapsed == doctest::Approx(0.3825));
  CHECK(d.elapsed == doctest::Approx(0.3825));
  CHECK(v.elapsed + d.elapsed == doctest::Approx(0.765));
  HeaderSchedule fast;
  fast.lcr_settle = 0;
  CHECK(prepare_header(HeaderParity::V, fast).elapsed == doctest::Approx(fast.measure_window));
  // The LCR prepares the states it claims.
  const StokesVector pv = apply(header_lcr_rotation(HeaderParity::V), StokesVector::vertical());
  const StokesVector pd = apply(header_lcr_rotation(HeaderParity::D), StokesVector::vertical());
  CHECK((pv.vec() - v.ideal.vec()).norm() < 1e-12);
  CHECK((pd.vec() - d.ideal.vec()).norm() < 1e-12);
  HeaderSchedule bad;
  bad.measure_window = 1e-4;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("compensator hardware") {
  CompensatorHardware hw;
  const Actuation a = hw.actuate({180, 0, 1.0001});
  CHECK(a.seconds == doctest::Approx(12.4));
  CHECK(a.applied.theta_qwp_deg == doctest::Approx(180));
  const double step = 2 * kPi / 1000;
  CHECK(std::abs(a.applied.gamma_lcr - 1.0001) <= step / 2);
  CHECK(a.applied == hw.applied());
  CHECK((hw.true_rotation(a.applied).matrix() - compensator_rotation(a.applied).matrix()).norm() < 1e-12);
  hw.quantize_lcr = false;
  CHECK(hw.actuate({180, 0, 1.0001}).applied.gamma_lcr == 1.0001);
  hw.lcr_axis_offset_deg = 3;
  CHECK((hw.true_rotation(hw.applied()).matrix() - compensator_rotation(hw.applied()).matrix()).norm() > 1e-3);
}

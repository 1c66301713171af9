#include "qwnpol/channel.hpp"
#include "qwnpol/batch.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace qwnpol;

namespace {

double matrix_diff(const PoincareRotation& a, const PoincareRotation& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

// Independent DGD oracle: the DGD at which the 0.42 limit lands on 0.7 nm at 1310 nm.
double dgd_oracle_ps() {
  const double lambda = 1310e-9, dlambda = 0.7e-9;
  const double df = kSpeedOfLight * dlambda / (lambda * lambda);
  return 0.42 / (2 * kPi * df) * 1e12;
}

}  // namespace

TEST_CASE("paddle map endpoints") {
  CHECK(paddle_retardance(1) == 0.0);
  CHECK(paddle_retardance(999) == kPi);
  CHECK(paddle_retardance(500) == doctest::Approx(kPi * 499.0 / 998.0));
  CHECK(matrix_diff(paddle_rotation(PaddleState{}), PoincareRotation::identity()) == 0.0);
  CHECK(matrix_diff(paddle_rotation(PaddleState{{999, 1, 1, 1}}), retarder_rotation(0, kPi)) < 1e-15);
  CHECK(matrix_diff(paddle_rotation(PaddleState{{1, 999, 1, 1}}), retarder_rotation(kPi / 4, kPi)) < 1e-15);
  CHECK_THROWS_AS((PaddleState{{0, 1, 1, 1}}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PaddleState{{1, 1, 1, 1000}}.validate()), std::invalid_argument);
}

TEST_CASE("paddle composition order") {
  const PaddleState p{{200, 400, 600, 800}};
  PoincareRotation expect;
  const double axes[4] = {0, kPi / 4, 0, kPi / 4};
  for (int i = 0; i < 4; ++i) expect = compose(retarder_rotation(axes[i], kPi * (p.n[i] - 1) / 998.0), expect);
  CHECK(matrix_diff(paddle_rotation(p), expect) < 1e-12);
}

TEST_CASE("random paddles cover SO(3) without bias") {
  // Haar-uniform mean rotation angle: pi/2 + 2/pi.
  const double uniform_mean_deg = rad_to_deg(kPi / 2 + 2 / kPi);
  CHECK(uniform_mean_deg == doctest::Approx(126.47).epsilon(1e-4));
  Rng rng = make_rng(31);
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const PaddleState p = PaddleState::random(rng);
    for (int v : p.n) REQUIRE((v >= 1 && v <= 999));
    sum += paddle_rotation(p).angle();
  }
  CHECK(std::abs(rad_to_deg(sum / n) - uniform_mean_deg) < 2.0);
}

TEST_CASE("drift: zero magnitude is the identity") {
  DriftProcess d(0.02, 0.0, 5);
  for (int i = 0; i < 100; ++i) REQUIRE(matrix_diff(step_drift(d, 3.0), PoincareRotation::identity()) == 0.0);
}

TEST_CASE("drift: argument validation") {
  CHECK_THROWS_AS(DriftProcess(0.0, 0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(DriftProcess(0.02, -0.1, 1), std::invalid_argument);
}

TEST_CASE("drift: determinism") {
  DriftProcess a(0.02, 0.15, 99), b(0.02, 0.15, 99), c(0.02, 0.15, 100);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto ra = step_drift(a, 0.7), rb = step_drift(b, 0.7), rc = step_drift(c, 0.7);
    REQUIRE(ra.matrix() == rb.matrix());
    differs = differs || ra.matrix() != rc.matrix();
  }
  CHECK(differs);
}

TEST_CASE("drift: stationary RMS equals the magnitude") {
  const double mag = 0.15;
  DriftProcess d(0.02, mag, 7);
  Eigen::Vector3d sq = Eigen::Vector3d::Zero();
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    d.advance(5.0);
    sq += d.generator().cwiseAbs2();
  }
  for (int k = 0; k < 3; ++k) CHECK(std::sqrt(sq[k] / n) == doctest::Approx(mag).epsilon(0.05));
}

TEST_CASE("drift: statistics do not depend on step subdivision") {
  DriftProcess d(0.02, 0.15, 8);
  double sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 10; ++k) d.advance(0.5);
    sq += d.generator().squaredNorm();
  }
  CHECK(std::sqrt(sq / (3 * n)) == doctest::Approx(0.15).epsilon(0.05));
}

TEST_CASE("drift: Stokes trace energy sits below the cutoff") {
  const double cutoff = 0.02, dt = 1.0;
  const std::size_t n = 1 << 16;
  DriftProcess d(cutoff, 0.15, 9);
  d.advance(1000.0);
  std::vector<double> tr[3];
  const StokesVector probe(0.3, 0.5, 0.81);
  for (std::size_t i = 0; i < n; ++i) {
    d.advance(dt);
    const StokesVector s = apply(d.rotation(), probe);
    for (int k = 0; k < 3; ++k) tr[k].push_back(s.vec()[k]);
  }
  Eigen::FFT<double> fft;
  double below = 0, total = 0;
  for (auto& x : tr) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : x) v -= mean;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, x);
    for (std::size_t f = 1; f <= n / 2; ++f) {
      const double hz = static_cast<double>(f) / (static_cast<double>(n) * dt);
      const double e = std::norm(spec[f]);
      total += e;
      if (hz < cutoff) below += e;
    }
  }
  CHECK(below / total >= 0.95);
}

TEST_CASE("dgd") {
  CHECK(dgd(0.0, 47.8) == 0.0);
  CHECK(dgd(0.0791, 47.8) == doctest::Approx(0.547).epsilon(0.002));
  CHECK(dgd(0.0791, 47.8) == doctest::Approx(dgd_oracle_ps()).epsilon(0.005));
  CHECK(dgd(0.0791, 4 * 47.8) == doctest::Approx(2 * dgd(0.0791, 47.8)));
  const PmdDescriptor p = PmdDescriptor::from_coefficient(Eigen::Vector3d(0, 2, 0), 0.0791, 47.8);
  CHECK(p.axis.norm() == doctest::Approx(1.0));
  CHECK(p.dgd_ps == doctest::Approx(dgd(0.0791, 47.8)));
}

TEST_CASE("maximum channel separation") {
  const auto s = max_channel_separation(0.0791, 47.8, 0.42);
  CHECK(std::abs(s.delta_f_ghz - 122) <= 1.0);
  CHECK(std::abs(s.delta_lambda_nm - 0.70) <= 0.01);
  CHECK(s.delta_omega == doctest::Approx(0.42 / (dgd(0.0791, 47.8) * 1e-12)));
  const auto half = max_channel_separation(0.0791, 47.8, 0.21);
  CHECK(half.delta_f_ghz == doctest::Approx(s.delta_f_ghz / 2));
  const auto quarter = max_channel_separation(0.0791, 47.8 / 4, 0.42);
  CHECK(quarter.delta_f_ghz == doctest::Approx(2 * s.delta_f_ghz));
  CHECK(ghz_to_rad_per_s(1.0) == doctest::Approx(2 * kPi * 1e9));
}

TEST_CASE("worst-case arc") {
  CHECK(worst_case_arc(1e12, 0.42e-12, 0) == 0.0);
  CHECK(worst_case_arc(1e12, 0.42e-12, kPi / 2) == doctest::Approx(0.42));
  CHECK(worst_case_arc(1e12, 0.42e-12, kPi / 6) == doctest::Approx(0.21));
}

TEST_CASE("received power") {
  CHECK(received_power(0, 19, 0) == -19.0);
  CHECK(received_power(-5, 0, 0) == -5.0);
  CHECK(received_power(-2, 19, 24) == 3.0);
  CHECK(received_power(-2, 19, 0) > kAmplifierFloorDbm);
}

TEST_CASE("channel at detuning") {
  Rng rng = make_rng(32);
  FiberChannel ch;
  ch.base_rotation = random_rotation(rng);
  ch.pmd = PmdDescriptor::from_coefficient(random_unit_vector(rng), 0.0791, 47.8);
  ch.drift = DriftProcess(0.02, 0.15, 3);
  ch.drift.advance(30);
  CHECK(channel_at_detuning(ch, 0.0).matrix() == ch.header_rotation().matrix());

  const double dw = 0.42 / (ch.pmd.dgd_ps * 1e-12);
  const auto comp = inverse(ch.header_rotation());
  // Input whose routed image lies on the PMD axis: no residual.
  const StokesVector on_axis = apply(inverse(ch.base_rotation), StokesVector(ch.pmd.axis));
  CHECK(angular_distance(apply(compose(comp, channel_at_detuning(ch, dw)), on_axis), on_axis) < 1e-9);
  // Image orthogonal to the axis: the full 0.42 arc.
  const Eigen::Vector3d perp = ch.pmd.axis.unitOrthogonal();
  const StokesVector orth = apply(inverse(ch.base_rotation), StokesVector(perp));
  CHECK(angular_distance(apply(compose(comp, channel_at_detuning(ch, dw)), orth), orth) ==
        doctest::Approx(0.42).epsilon(1e-9));

  CHECK_THROWS_AS(channel_at_detuning(ch, 0.8 / (ch.pmd.dgd_ps * 1e-12)), FirstOrderLimitExceeded);
  CHECK_NOTHROW(channel_at_detuning(ch, -0.7 / (ch.pmd.dgd_ps * 1e-12)));
}

TEST_CASE("first-order arc law at small detuning") {
  for (const auto& r : pmd_arc_batch(33, 2000, 0.1, std::nullopt, Exec::Serial)) {
    if (r.predicted_rad < 1e-3) continue;
    REQUIRE(std::abs(r.error_rad - r.predicted_rad) <= 0.10 * r.predicted_rad);
  }
}

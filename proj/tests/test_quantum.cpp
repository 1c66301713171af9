#include "qwnpol/quantum.hpp"
#include "qwnpol/batch.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "doctest.h"

using namespace qwnpol;

namespace {

using C = std::complex<double>;

Eigen::Vector2cd jones_of(const Eigen::Vector3d& s) {
  const double theta = std::acos(std::clamp(s.x(), -1.0, 1.0));
  return {std::cos(theta / 2), std::polar(std::sin(theta / 2), std::atan2(s.z(), s.y()))};
}

// Tr[rho (|a><a| x |b><b|)] with rho built as a 4x4 density matrix.
double density_matrix_prob(const Eigen::Matrix2cd& u, const StokesVector& sa, const StokesVector& sb, double v) {
  Eigen::Vector4cd phi;
  phi << 1, 0, 0, 1;
  phi /= std::sqrt(2.0);
  Eigen::Matrix4cd uu = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) uu(2 * i + k, 2 * j + k) = u(i, j);
  const Eigen::Vector4cd psi = uu * phi;
  const Eigen::Matrix4cd rho = v * psi * psi.adjoint() + (1 - v) * Eigen::Matrix4cd::Identity() / 4.0;
  const Eigen::Vector2cd a = jones_of(sa.vec()), b = jones_of(sb.vec());
  Eigen::Vector4cd ab;
  ab << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
  return (ab.adjoint() * rho * ab)(0, 0).real();
}

}  // namespace

TEST_CASE("stokes from counts") {
  const auto h = stokes_from_counts({1000, 0, 500, 500});
  CHECK(h.unit.vec().isApprox(Eigen::Vector3d(1, 0, 0)));
  CHECK(h.raw[0] == 1.0);
  CHECK_THROWS_AS(stokes_from_counts({0, 0, 10, 10}), EmptyCounts);
  // Raw values are kept alongside the unit vector.
  const auto r = stokes_from_counts({60, 40, 70, 50});
  CHECK(r.raw[0] == doctest::Approx(0.2));
  CHECK(r.raw[1] == doctest::Approx(0.4));
  CHECK(r.raw[2] == doctest::Approx(0.0));
}

TEST_CASE("projection count means") {
  Rng rng = make_rng(51);
  const double rate = 1000, dwell = 10;
  double sum_h = 0, sum_d = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const auto c = projection_counts(StokesVector::horizontal(), rate, dwell, rng);
    sum_h += static_cast<double>(c.c_h);
    sum_d += static_cast<double>(c.c_d);
    REQUIRE(c.c_v == 0);
  }
  CHECK(sum_h / n == doctest::Approx(rate * dwell).epsilon(0.005));
  CHECK(sum_d / n == doctest::Approx(rate * dwell / 2).epsilon(0.005));
}

TEST_CASE("signal-photon Stokes estimate") {
  Rng rng = make_rng(52);
  const StokesVector truth(-0.98, -0.16, 0.09);
  const auto c = projection_counts(truth, 50000, 1.0, rng);
  const auto s = stokes_from_counts(c);
  CHECK(s.raw[0] == doctest::Approx(truth.s1()).epsilon(0.01));
  CHECK(std::abs(s.raw[1] - truth.s2()) < 0.02);
  CHECK(std::abs(s.raw[2] - truth.s3()) < 0.02);
}

TEST_CASE("count-based Stokes error shrinks as one over root N") {
  Rng rng = make_rng(53);
  auto mean_error = [&](double n_counts) {
    double sum = 0;
    const int trials = 1000;
    for (int i = 0; i < trials; ++i) {
      const StokesVector s(random_unit_vector(rng));
      sum += angular_distance(stokes_from_counts(projection_counts(s, n_counts, 1.0, rng)).unit, s);
    }
    return sum / trials;
  };
  const double e1 = mean_error(1e4), e2 = mean_error(1e6);
  const double slope = std::log(e2 / e1) / std::log(100.0);
  CHECK(slope == doctest::Approx(-0.5).epsilon(0.1));
}

TEST_CASE("Bell coincidence probabilities") {
  const PayloadUnitary id;
  const auto H = StokesVector::horizontal(), V = StokesVector::vertical();
  CHECK(bell_coincidence_prob(id, H, H, 1.0) == doctest::Approx(0.5));
  CHECK(bell_coincidence_prob(id, H, V, 1.0) == doctest::Approx(0.0));
  CHECK(bell_coincidence_prob(id, StokesVector::diagonal(), StokesVector::diagonal(), 1.0) == doctest::Approx(0.5));
  CHECK(bell_coincidence_prob(id, H, V, 0.0) == doctest::Approx(0.25));

  const PayloadUnitary rot = payload_unitary(PoincareRotation::about_axis(Eigen::Vector3d::UnitZ(), kPi / 4));
  const double p = bell_coincidence_prob(rot, H, V, 1.0);
  CHECK(p > 0.0);
  CHECK(p == doctest::Approx(density_matrix_prob(rot.u, H, V, 1.0)).epsilon(1e-12));

  Rng rng = make_rng(54);
  std::uniform_real_distribution<double> uv(0, 1);
  for (int i = 0; i < 500; ++i) {
    const PayloadUnitary u = payload_unitary(random_rotation(rng));
    const StokesVector a(random_unit_vector(rng)), b(random_unit_vector(rng));
    const double v = uv(rng);
    REQUIRE(std::abs(bell_coincidence_prob(u, a, b, v) - density_matrix_prob(u.u, a, b, v)) < 1e-12);
  }
}

TEST_CASE("histogram integrate and coincidence window") {
  CoincidenceHistogram h;
  h.bin_width = 100e-12;
  h.start = -1e-9;
  h.bins.assign(20, 1);
  h.peak_position = 0;
  CHECK(h.integrate(-0.5e-9, 0.5e-9) == 10);
  CHECK(coincidence_counts(h) == 10);
  CHECK(h.integrate(5e-9, 6e-9) == 0);
}

TEST_CASE("simulated histograms") {
  Rng rng = make_rng(55);
  const HistogramGeometry g;
  const auto empty = simulate_histogram(200, 1, 0.0, 150e-12, g, rng);
  CHECK(std::all_of(empty.bins.begin(), empty.bins.end(), [](auto c) { return c == 0; }));

  const auto peak_only = simulate_histogram(200, 0, 100, 150e-12, g, rng);
  std::int64_t total = 0;
  for (auto c : peak_only.bins) total += c;
  // The 1 ns window spans +-3.3 sigma of the peak.
  CHECK(coincidence_counts(peak_only) >= 0.998 * static_cast<double>(total));
  CHECK(static_cast<double>(total) == doctest::Approx(20000).epsilon(0.03));
  CHECK(accidental_estimate(peak_only) == 0.0);

  const auto flat = simulate_histogram(0, 3.0, 100, 150e-12, g, rng);
  CHECK(accidental_estimate(flat) == doctest::Approx(3.0 * 100 * 10).epsilon(0.02));
}

TEST_CASE("CAR 25 histogram") {
  Rng rng = make_rng(56);
  const HistogramGeometry g;
  const double rate = 200, target = 25;
  const double acc_per_bin = rate / target * (g.bin_width / kCoincidenceWindow);
  for (int i = 0; i < 20; ++i) {
    const auto h = simulate_histogram(rate, acc_per_bin, 100, 150e-12, g, rng);
    REQUIRE(std::abs(car(coincidence_counts(h), accidental_estimate(h)) - target) <= 2.0);
  }
}

TEST_CASE("accidental estimate needs enough span") {
  CoincidenceHistogram h;
  h.start = -1e-9;
  h.bins.assign(100, 1);
  CHECK_THROWS_AS(accidental_estimate(h), InsufficientSpan);
}

TEST_CASE("visibility and CAR formulas") {
  CHECK(visibility(10, 0) == 1.0);
  CHECK(visibility(10, 10) == 0.0);
  CHECK_THROWS_AS(visibility(0, 0), ZeroCounts);
  CHECK(subtracted_visibility(100, 10, 5, 10) == 1.0);
  CHECK(car(26, 1) == doctest::Approx(25));
  CHECK(car(20, 10) == doctest::Approx(1));
  CHECK_THROWS_AS(car(5, 0), ZeroAccidentals);
  // Raw ceiling CAR/(CAR+2) and its inverse.
  CHECK(25.0 / 27.0 == doctest::Approx(0.926).epsilon(0.001));
  const double car_for_505 = 2 * 0.505 / (1 - 0.505);
  CHECK(car_for_505 == doctest::Approx(2.04).epsilon(0.002));
}

TEST_CASE("subtracted visibility is at least the raw visibility") {
  Rng rng = make_rng(57);
  std::uniform_real_distribution<double> u(0, 1000);
  for (int i = 0; i < 10000; ++i) {
    const double acc = u(rng) / 20, co = acc + u(rng) + 1, cross = u(rng) / 4;
    if (co < cross) continue;
    REQUIRE(subtracted_visibility(co, acc, cross, acc) >= visibility(co, cross) - 1e-12);
  }
}

TEST_CASE("basis symmetry on the identity channel") {
  VisibilityParams p;
  p.basis = Basis::HV;
  const auto hv = visibility_batch(58, 16, p, Exec::Serial);
  p.basis = Basis::DA;
  const auto da = visibility_batch(58, 16, p, Exec::Serial);
  double m_hv = 0, m_da = 0;
  for (std::size_t i = 0; i < hv.size(); ++i) {
    m_hv += hv[i].raw / 16;
    m_da += da[i].raw / 16;
  }
  CHECK(std::abs(m_hv - m_da) < 0.01);
}

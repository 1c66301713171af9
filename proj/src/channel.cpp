#include "qwnpol/channel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qwnpol {

PmdDescriptor PmdDescriptor::from_coefficient(const Eigen::Vector3d& axis, double pmd_coeff,
                                              double length_km) {
  PmdDescriptor p;
  p.axis = axis.normalized();
  p.pmd_coeff = pmd_coeff;
  p.dgd_ps = dgd(pmd_coeff, length_km);
  return p;
}

DriftProcess::DriftProcess(double cutoff_hz, double magnitude, std::uint64_t seed)
    : cutoff_hz_(cutoff_hz), magnitude_(magnitude), rng_(make_rng(seed, 0xd21f7)) {
  if (!(cutoff_hz > 0.0)) throw std::invalid_argument("drift.cutoff_hz must be > 0");
  if (!(magnitude >= 0.0)) throw std::invalid_argument("drift.magnitude_rad must be >= 0");
  if (magnitude_ == 0.0) return;
  // Start in the stationary distribution: var(fast) = 2 m^2,
  // var(slow) = cov(fast, slow) = m^2.
  std::normal_distribution<double> n(0.0, 1.0);
  const double sf = std::sqrt(2.0) * magnitude_;
  for (int k = 0; k < 3; ++k) {
    const double z1 = n(rng_), z2 = n(rng_);
    fast_[k] = sf * z1;
    slow_[k] = sf * 0.5 * z1 + sf * 0.5 * z2;
  }
}

void DriftProcess::advance(double dt) {
  if (magnitude_ == 0.0 || dt <= 0.0) return;
  const double a = 2.0 * kPi * corner_hz();
  const double u = 2.0 * a * dt;
  const double e = std::exp(-a * dt);

  // Integrals of the noise covariance over the step, scaled so that
  // q0 = 2a*I0, q1 = 4a^2*I1, q2 = 8a^3*I2.
  double q0 = -std::expm1(-u);
  double q1, q2;
  if (u < 1e-2) {
    const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u, u6 = u5 * u;
    q1 = u2 / 2 - u3 / 3 + u4 / 8 - u5 / 30 + u6 / 144;
    q2 = u3 / 3 - u4 / 4 + u5 / 10 - u6 / 36;
  } else {
    const double eu = std::exp(-u);
    q1 = 1.0 - eu * (1.0 + u);
    q2 = 2.0 - eu * (2.0 + 2.0 * u + u * u);
  }
  const double var_fast = 2.0 * magnitude_ * magnitude_;
  const double c11 = var_fast * q0;
  const double c12 = var_fast * q1 / 2.0;
  const double c22 = var_fast * q2 / 4.0;

  const double l11 = std::sqrt(c11);
  const double l21 = l11 > 0.0 ? c12 / l11 : 0.0;
  const double l22 = std::sqrt(std::max(0.0, c22 - l21 * l21));

  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    const double z1 = n(rng_), z2 = n(rng_);
    const double f = fast_[k], s = slow_[k];
    fast_[k] = e * f + l11 * z1;
    slow_[k] = e * (a * dt * f + s) + l21 * z1 + l22 * z2;
  }
}

void PaddleState::validate() const {
  for (int v : n) {
    if (v < 1 || v > 999) throw std::invalid_argument("paddle values must lie in [1, 999]");
  }
}

PaddleState PaddleState::random(Rng& rng) {
  std::uniform_int_distribution<int> d(1, 999);
  PaddleState p;
  for (int& v : p.n) v = d(rng);
  return p;
}

PoincareRotation FiberChannel::header_rotation() const {
  return compose(drift.rotation(), base_rotation);
}

namespace {
std::string limit_message(double x) {
  std::ostringstream os;
  os << "first-order PMD model invalid: |delta_omega * dgd| = " << x << " >= pi/4";
  return os.str();
}
}  // namespace

FirstOrderLimitExceeded::FirstOrderLimitExceeded(double x)
    : std::runtime_error(limit_message(x)), product(x) {}

double paddle_retardance(int n) { return kPi * static_cast<double>(n - 1) / 998.0; }

PoincareRotation paddle_rotation(const PaddleState& p) {
  p.validate();
  static constexpr std::array<double, 4> kAxesDeg{0.0, 45.0, 0.0, 45.0};
  PoincareRotation r;
  for (std::size_t i = 0; i < 4; ++i) {
    r = compose(retarder_rotation(deg_to_rad(kAxesDeg[i]), paddle_retardance(p.n[i])), r);
  }
  return r;
}

PoincareRotation step_drift(DriftProcess& d, double dt) {
  d.advance(dt);
  return d.rotation();
}

double dgd(double pmd_coeff, double length_km) { return pmd_coeff * std::sqrt(length_km); }

PoincareRotation channel_at_detuning(const FiberChannel& ch, double delta_omega) {
  const double x = delta_omega * ch.pmd.dgd_ps * 1e-12;
  if (std::abs(x) >= kPi / 4.0) throw FirstOrderLimitExceeded(x);
  const auto pmd = PoincareRotation::about_axis(ch.pmd.axis, x);
  return compose(ch.drift.rotation(), compose(pmd, ch.base_rotation));
}

ChannelSeparation max_channel_separation(double pmd_coeff, double length_km, double limit,
                                         double lambda_nm) {
  const double tau_s = dgd(pmd_coeff, length_km) * 1e-12;
  ChannelSeparation s{};
  s.delta_omega = limit / tau_s;
  const double df = s.delta_omega / (2.0 * kPi);
  s.delta_f_ghz = df * 1e-9;
  const double lambda_m = lambda_nm * 1e-9;
  s.delta_lambda_nm = lambda_m * lambda_m * df / kSpeedOfLight * 1e9;
  return s;
}

double worst_case_arc(double delta_omega, double dgd_s, double phi) {
  return delta_omega * dgd_s * std::sin(phi);
}

double received_power(double launch_dbm, double loss_db, double gain_db) {
  return launch_dbm - loss_db + gain_db;
}

double ghz_to_rad_per_s(double ghz) { return 2.0 * kPi * ghz * 1e9; }

}  // namespace qwnpol

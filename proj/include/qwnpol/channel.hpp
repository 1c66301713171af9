// Fiber link models: route rotations from a four-paddle controller, slow
// environmental drift, first-order PMD, and link-budget arithmetic.
#pragma once

#include "qwnpol/poincare.hpp"
#include "qwnpol/rng.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>

namespace qwnpol {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kReferenceWavelengthNm = 1310.0;
inline constexpr double kMonochromaticLimit = 0.42;

/// First-order PMD. `axis` is the output-side PMD (PSP) direction on the
/// sphere.
struct PmdDescriptor {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double dgd_ps = 0.0;
  double pmd_coeff = 0.0;  // ps / sqrt(km)

  static PmdDescriptor from_coefficient(const Eigen::Vector3d& axis, double pmd_coeff,
                                        double length_km);
};

/// Slow environmental drift: a smooth mean-reverting 3-component process on
/// the rotation generator. Each component is two cascaded Ornstein-Uhlenbeck
/// stages whose corner sits at cutoff_hz / 3, which keeps >95% of the trace
/// energy below cutoff_hz. Stationary RMS of every component is `magnitude`.
class DriftProcess {
 public:
  DriftProcess() = default;
  /// Throws std::invalid_argument for cutoff_hz <= 0 or magnitude < 0.
  DriftProcess(double cutoff_hz, double magnitude, std::uint64_t seed);

  double cutoff_hz() const { return cutoff_hz_; }
  double magnitude() const { return magnitude_; }
  double corner_hz() const { return cutoff_hz_ / 3.0; }
  const Eigen::Vector3d& generator() const { return slow_; }
  PoincareRotation rotation() const { return PoincareRotation::from_generator(slow_); }

  /// Advance by `dt` seconds with the exact discretization of the linear SDE,
  /// so the statistics do not depend on how an interval is subdivided.
  void advance(double dt);

 private:
  double cutoff_hz_ = 0.02;
  double magnitude_ = 0.0;
  Eigen::Vector3d fast_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d slow_ = Eigen::Vector3d::Zero();
  Rng rng_;
};

struct PaddleState {
  std::array<int, 4> n{1, 1, 1, 1};  // each in [1, 999]

  /// Throws std::invalid_argument when out of range.
  void validate() const;
  static PaddleState random(Rng& rng);
};

struct FiberChannel {
  PoincareRotation base_rotation;
  PmdDescriptor pmd;
  DriftProcess drift;
  double loss_db = 0.0;
  double length_km = 0.0;

  /// Header-wavelength transfer rotation: drift after base.
  PoincareRotation header_rotation() const;
};

class FirstOrderLimitExceeded : public std::runtime_error {
 public:
  explicit FirstOrderLimitExceeded(double product);
  double product;
};

/// Paddle retardance: value 1 -> 0, value 999 -> pi.
double paddle_retardance(int n);
PoincareRotation paddle_rotation(const PaddleState& p);

/// Advance the drift and return its current rotation.
PoincareRotation step_drift(DriftProcess& d, double dt);

/// Mean DGD in ps.
double dgd(double pmd_coeff, double length_km);

/// Transfer rotation at a frequency offset `delta_omega` (rad/s) from the
/// header: drift * R_pmd(delta_omega * dgd) * base. Throws
/// FirstOrderLimitExceeded when |delta_omega * dgd| >= pi/4.
PoincareRotation channel_at_detuning(const FiberChannel& ch, double delta_omega);

struct ChannelSeparation {
  double delta_omega;  // rad/s
  double delta_f_ghz;
  double delta_lambda_nm;
};

ChannelSeparation max_channel_separation(double pmd_coeff, double length_km,
                                         double limit = kMonochromaticLimit,
                                         double lambda_nm = kReferenceWavelengthNm);

/// First-order arc between header-predicted and payload states.
double worst_case_arc(double delta_omega, double dgd_s, double phi);

double received_power(double launch_dbm, double loss_db, double gain_db);

double ghz_to_rad_per_s(double ghz);

}  // namespace qwnpol

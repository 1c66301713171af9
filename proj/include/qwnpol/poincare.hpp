// Polarization algebra on the Poincare sphere.
//
// Stokes vectors are unit 3-vectors (s1, s2, s3); lossless birefringent
// elements act on them as proper rotations. Rotations are right-handed:
// a retarder with fast axis at physical angle theta and retardance gamma
// rotates the sphere by +gamma about the equatorial axis (cos 2theta,
// sin 2theta, 0).
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <complex>
#include <numbers>
#include <stdexcept>

namespace qwnpol {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Reduce `x` into [0, period).
double wrap_positive(double x, double period);

/// Fully polarized state of polarization. Always unit norm.
class StokesVector {
 public:
  /// Renormalizes the input onto the unit sphere. Throws std::domain_error
  /// for a zero (or non-finite) vector.
  StokesVector(double s1, double s2, double s3);
  explicit StokesVector(const Eigen::Vector3d& v);

  static StokesVector horizontal() { return {1.0, 0.0, 0.0}; }
  static StokesVector vertical() { return {-1.0, 0.0, 0.0}; }
  static StokesVector diagonal() { return {0.0, 1.0, 0.0}; }
  static StokesVector antidiagonal() { return {0.0, -1.0, 0.0}; }
  static StokesVector right_circular() { return {0.0, 0.0, 1.0}; }

  double s1() const { return v_.x(); }
  double s2() const { return v_.y(); }
  double s3() const { return v_.z(); }
  const Eigen::Vector3d& vec() const { return v_; }

  double dot(const StokesVector& other) const { return v_.dot(other.v_); }

 private:
  Eigen::Vector3d v_;
};

/// Polarization-ellipse angles. psi is the azimuth (half the sphere
/// longitude), chi the ellipticity (half the latitude), delta the phase
/// between the field components.
struct EllipseAngles {
  double psi = 0.0;
  double chi = 0.0;
  double delta = 0.0;
};

/// Proper rotation of the Poincare sphere.
class PoincareRotation {
 public:
  PoincareRotation() : m_(Eigen::Matrix3d::Identity()) {}

  /// Throws std::invalid_argument unless `m` is orthonormal with det +1
  /// (within 1e-9).
  explicit PoincareRotation(const Eigen::Matrix3d& m);

  static PoincareRotation identity() { return {}; }
  /// Right-hand rotation by `angle` about `axis` (need not be unit length).
  static PoincareRotation about_axis(const Eigen::Vector3d& axis, double angle);
  /// exp([g]x): rotation by |g| about g/|g|.
  static PoincareRotation from_generator(const Eigen::Vector3d& g);

  const Eigen::Matrix3d& matrix() const { return m_; }

  /// Rotation angle in [0, pi].
  double angle() const;

  bool is_valid(double tol = 1e-9) const;

 private:
  struct Unchecked {};
  PoincareRotation(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}
  friend PoincareRotation compose(const PoincareRotation&, const PoincareRotation&);
  friend PoincareRotation inverse(const PoincareRotation&);

  Eigen::Matrix3d m_;
};

/// 2x2 unitary acting on Jones vectors, defined up to global phase.
/// Basis: |H> = (1,0), |V> = (0,1); s3 = +1 is (1, i)/sqrt(2).
struct PayloadUnitary {
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
};

EllipseAngles angles_from_stokes(const StokesVector& s);
StokesVector stokes_from_angles(const EllipseAngles& a);

PoincareRotation retarder_rotation(double theta, double gamma);

/// Apply `inner` first, then `outer`.
PoincareRotation compose(const PoincareRotation& outer, const PoincareRotation& inner);
PoincareRotation inverse(const PoincareRotation& r);
StokesVector apply(const PoincareRotation& r, const StokesVector& s);

/// Great-circle distance in [0, pi].
double angular_distance(const StokesVector& a, const StokesVector& b);

PayloadUnitary payload_unitary(const PoincareRotation& r);

/// Jones vector of a fully polarized state (global phase arbitrary).
Eigen::Vector2cd jones_from_stokes(const StokesVector& s);

/// Stokes vector of a non-zero Jones vector.
StokesVector stokes_from_jones(const Eigen::Vector2cd& j);

}  // namespace qwnpol

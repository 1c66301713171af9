#include "qwnpol/poincare.hpp"

#include <algorithm>
#include <cmath>

namespace qwnpol {

double wrap_positive(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  // fmod of a tiny negative number can round back up to `period`.
  if (r >= period) r -= period;
  return r;
}

StokesVector::StokesVector(double s1, double s2, double s3)
    : StokesVector(Eigen::Vector3d(s1, s2, s3)) {}

StokesVector::StokesVector(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::domain_error("StokesVector: cannot normalize a zero or non-finite vector");
  }
  v_ = v / n;
}

PoincareRotation::PoincareRotation(const Eigen::Matrix3d& m) : m_(m) {
  if (!is_valid()) {
    throw std::invalid_argument("PoincareRotation: matrix is not a proper rotation");
  }
}

PoincareRotation PoincareRotation::about_axis(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) return identity();
  Eigen::Matrix3d m = Eigen::AngleAxisd(angle, axis / n).toRotationMatrix();
  return PoincareRotation(m, Unchecked{});
}

PoincareRotation PoincareRotation::from_generator(const Eigen::Vector3d& g) {
  const double theta = g.norm();
  if (theta == 0.0) return identity();
  return about_axis(g, theta);
}

double PoincareRotation::angle() const {
  const double c = std::clamp((m_.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

bool PoincareRotation::is_valid(double tol) const {
  const Eigen::Matrix3d e = m_ * m_.transpose() - Eigen::Matrix3d::Identity();
  return e.cwiseAbs().maxCoeff() <= tol && std::abs(m_.determinant() - 1.0) <= tol;
}

EllipseAngles angles_from_stokes(const StokesVector& s) {
  EllipseAngles a;
  a.psi = 0.5 * std::atan2(s.s2(), s.s1());
  // atan2 returns (-pi, pi]; psi must land in (-pi/2, pi/2].
  a.chi = 0.5 * std::asin(std::clamp(s.s3(), -1.0, 1.0));
  a.delta = std::atan2(s.s3(), s.s2());
  return a;
}

StokesVector stokes_from_angles(const EllipseAngles& a) {
  const double c2chi = std::cos(2.0 * a.chi);
  return {c2chi * std::cos(2.0 * a.psi), c2chi * std::sin(2.0 * a.psi), std::sin(2.0 * a.chi)};
}

PoincareRotation retarder_rotation(double theta, double gamma) {
  return PoincareRotation::about_axis(
      Eigen::Vector3d(std::cos(2.0 * theta), std::sin(2.0 * theta), 0.0), gamma);
}

PoincareRotation compose(const PoincareRotation& outer, const PoincareRotation& inner) {
  return PoincareRotation(outer.m_ * inner.m_, PoincareRotation::Unchecked{});
}

PoincareRotation inverse(const PoincareRotation& r) {
  return PoincareRotation(r.m_.transpose(), PoincareRotation::Unchecked{});
}

StokesVector apply(const PoincareRotation& r, const StokesVector& s) {
  return StokesVector(Eigen::Vector3d(r.matrix() * s.vec()));
}

double angular_distance(const StokesVector& a, const StokesVector& b) {
  // acos loses precision near 0 and pi; atan2 of |cross| and dot does not.
  const double c = a.vec().dot(b.vec());
  const double s = a.vec().cross(b.vec()).norm();
  return std::atan2(s, c);
}

PayloadUnitary payload_unitary(const PoincareRotation& r) {
  const Eigen::Quaterniond q(r.matrix());
  using C = std::complex<double>;
  const C i(0.0, 1.0);
  // U = w I - i (x sigma1 + y sigma2 + z sigma3) with
  // sigma1 = diag(1,-1), sigma2 = [[0,1],[1,0]], sigma3 = [[0,-i],[i,0]].
  PayloadUnitary p;
  p.u(0, 0) = q.w() - i * q.x();
  p.u(1, 1) = q.w() + i * q.x();
  p.u(0, 1) = -i * q.y() - q.z();
  p.u(1, 0) = -i * q.y() + q.z();
  return p;
}

Eigen::Vector2cd jones_from_stokes(const StokesVector& s) {
  const EllipseAngles a = angles_from_stokes(s);
  // Rotated ellipse: (cos psi cos chi - i sin psi sin chi,
  //                   sin psi cos chi + i cos psi sin chi)
  using C = std::complex<double>;
  const double cp = std::cos(a.psi), sp = std::sin(a.psi);
  const double cc = std::cos(a.chi), sc = std::sin(a.chi);
  return {C(cp * cc, -sp * sc), C(sp * cc, cp * sc)};
}

StokesVector stokes_from_jones(const Eigen::Vector2cd& j) {
  const auto ex = j(0), ey = j(1);
  const double s1 = std::norm(ex) - std::norm(ey);
  const std::complex<double> c = std::conj(ex) * ey;
  return {s1, 2.0 * c.real(), 2.0 * c.imag()};
}

}  // namespace qwnpol

#include "qwnpol/compensator.hpp"

#include <cmath>
#include <sstream>

namespace qwnpol {

CompensatorSettings CompensatorSettings::canonical() const {
  return {wrap_positive(theta_qwp_deg, 360.0), wrap_positive(theta_hwp_deg, 180.0),
          wrap_positive(gamma_lcr, 2.0 * kPi)};
}

void Thresholds::validate() const {
  if (!(v_s1_max >= -1.0 && v_s1_max < 0.0)) {
    throw std::invalid_argument("thresholds.v_s1_max must lie in [-1, 0)");
  }
  if (!(d_s2_min > 0.0 && d_s2_min <= 1.0)) {
    throw std::invalid_argument("thresholds.d_s2_min must lie in (0, 1]");
  }
}

namespace {
std::string conjugacy_message(double sep) {
  std::ostringstream os;
  os << "reference states are " << rad_to_deg(sep) << " deg apart, expected 90";
  return os.str();
}
}  // namespace

NonConjugateReferences::NonConjugateReferences(double sep)
    : std::runtime_error(conjugacy_message(sep)), separation_rad(sep) {}

bool needs_compensation(const StokesVector& sv, const StokesVector& sd, const Thresholds& th) {
  return sv.s1() > th.v_s1_max || sd.s2() < th.d_s2_min;
}

PoincareRotation compensator_rotation(const CompensatorSettings& s) {
  const auto qwp = retarder_rotation(deg_to_rad(s.theta_qwp_deg), kPi / 2.0);
  const auto hwp = retarder_rotation(deg_to_rad(s.theta_hwp_deg), kPi);
  const auto lcr = retarder_rotation(0.0, s.gamma_lcr);
  return compose(lcr, compose(hwp, qwp));
}

std::pair<StokesVector, StokesVector> back_out_channel(const StokesVector& sv_meas,
                                                       const StokesVector& sd_meas,
                                                       const CompensatorSettings& current) {
  const auto inv = inverse(compensator_rotation(current));
  return {apply(inv, sv_meas), apply(inv, sd_meas)};
}

namespace {

struct WaveplateAngles {
  double qwp_rad;
  double hwp_rad;
};

// Steps 1 and 2: bring S_V' to linear with the QWP, then onto V with the HWP.
WaveplateAngles waveplates_for(const StokesVector& sv_prime) {
  const EllipseAngles a = angles_from_stokes(sv_prime);
  return {a.psi, (a.psi - a.chi) / 2.0 - kPi / 4.0};
}

StokesVector rotated_diagonal(const WaveplateAngles& w, const StokesVector& sd_prime) {
  const auto r = compose(retarder_rotation(w.hwp_rad, kPi), retarder_rotation(w.qwp_rad, kPi / 2.0));
  return apply(r, sd_prime);
}

}  // namespace

CompensatorSettings solve(const StokesVector& sv_prime, const StokesVector& sd_prime,
                          double conjugacy_tol_rad) {
  const double sep = angular_distance(sv_prime, sd_prime);
  if (std::abs(sep - kPi / 2.0) > conjugacy_tol_rad) throw NonConjugateReferences(sep);

  const WaveplateAngles w = waveplates_for(sv_prime);
  const StokesVector d_rot = rotated_diagonal(w, sd_prime);
  // Step 3: LCR about s1 removes the remaining phase of D in the s2-s3 plane.
  const double gamma = -std::atan2(d_rot.s3(), d_rot.s2());

  return CompensatorSettings{rad_to_deg(w.qwp_rad), rad_to_deg(w.hwp_rad), gamma}.canonical();
}

double lcr_phase_from_ellipticity(const StokesVector& sv_prime, const StokesVector& sd_prime) {
  const WaveplateAngles w = waveplates_for(sv_prime);
  const StokesVector d_rot = rotated_diagonal(w, sd_prime);
  return wrap_positive(-2.0 * angles_from_stokes(d_rot).chi, 2.0 * kPi);
}

NonConvergent::NonConvergent(CycleReport r)
    : std::runtime_error("compensation did not converge within the iteration limit"),
      report(std::move(r)) {}

bool detect_oscillation(const std::vector<double>& trace, double v_s1_max, int min_alternations) {
  int run = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const bool prev_in = trace[i - 1] <= v_s1_max;
    const bool cur_in = trace[i] <= v_s1_max;
    run = (prev_in != cur_in) ? run + 1 : 0;
    if (run >= min_alternations) return true;
  }
  return false;
}

CycleReport run_cycle(LoopContext& ctx, const MeasureFn& measure, const ActuateFn& actuate,
                      const Thresholds& th) {
  CycleReport rep;
  auto take = [&]() {
    Measurement m;
    if (ctx.pending) {
      m = *ctx.pending;
      ctx.pending.reset();
    } else {
      m = measure();
    }
    rep.measurements += 1;
    rep.total_time += m.seconds;
    rep.v_s1_trace.push_back(m.sv.s1());
    return m;
  };

  Measurement m = take();
  while (needs_compensation(m.sv, m.sd, th)) {
    if (rep.iterations >= ctx.max_iter) {
      rep.oscillation_detected = detect_oscillation(rep.v_s1_trace, th.v_s1_max);
      rep.final_settings = ctx.current;
      throw NonConvergent(std::move(rep));
    }
    const auto [sv_p, sd_p] = back_out_channel(m.sv, m.sd, ctx.current);
    const CompensatorSettings target = solve(sv_p, sd_p, ctx.conjugacy_tol_rad);
    const Actuation a = actuate(target);
    ctx.current = a.applied;
    rep.iterations += 1;
    rep.total_time += a.seconds;
    rep.records.push_back({m, target, a.applied, a.seconds});
    m = take();
  }
  rep.converged = true;
  rep.oscillation_detected = detect_oscillation(rep.v_s1_trace, th.v_s1_max);
  rep.final_settings = ctx.current;
  return rep;
}

}  // namespace qwnpol

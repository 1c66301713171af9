// Two-reference birefringence compensation: QWP -> HWP -> LCR.
//
// The compensator is T_comp = R_LCR * R_HWP * R_QWP (QWP acts first, the LCR
// last with its fast axis fixed at 0 deg). Given the images S_V', S_D' of the
// vertical and diagonal references at the compensator input, `solve` returns
// the settings that map them back onto V = (-1,0,0) and D = (0,1,0).
#pragma once

#include "qwnpol/poincare.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qwnpol {

struct CompensatorSettings {
  double theta_qwp_deg = 0.0;  // [0, 360)
  double theta_hwp_deg = 0.0;  // [0, 180)
  double gamma_lcr = 0.0;      // [0, 2pi)

  /// Reduce every field into its canonical range.
  CompensatorSettings canonical() const;
  bool operator==(const CompensatorSettings&) const = default;
};

struct Thresholds {
  double v_s1_max = -0.999;  // compensated iff measured V s1 <= this
  double d_s2_min = 0.995;   // compensated iff measured D s2 >= this

  /// Throws std::invalid_argument when out of range.
  void validate() const;
};

class NonConjugateReferences : public std::runtime_error {
 public:
  explicit NonConjugateReferences(double separation_rad);
  double separation_rad;
};

bool needs_compensation(const StokesVector& sv, const StokesVector& sd, const Thresholds& th);

PoincareRotation compensator_rotation(const CompensatorSettings& s);

/// Pre-compensator states S' = T_comp^-1 S''.
std::pair<StokesVector, StokesVector> back_out_channel(const StokesVector& sv_meas,
                                                       const StokesVector& sd_meas,
                                                       const CompensatorSettings& current);

/// Analytic solve. Throws NonConjugateReferences when the two references are
/// not pi/2 apart within `conjugacy_tol_rad`.
CompensatorSettings solve(const StokesVector& sv_prime, const StokesVector& sd_prime,
                          double conjugacy_tol_rad = deg_to_rad(5.0));

/// LCR phase from the alternative ellipticity form: -2 chi of the rotated D.
/// Agrees with `solve` on the s2 >= 0 half of the s2-s3 circle.
double lcr_phase_from_ellipticity(const StokesVector& sv_prime, const StokesVector& sd_prime);

// ---------------------------------------------------------------------------
// Control loop

struct Measurement {
  StokesVector sv = StokesVector::vertical();
  StokesVector sd = StokesVector::diagonal();
  double seconds = 0.0;  // time spent acquiring this measurement
};

struct Actuation {
  CompensatorSettings applied;  // as physically realized (e.g. LCR quantized)
  double seconds = 0.0;
};

struct IterationRecord {
  Measurement measured;  // the out-of-tolerance measurement that triggered the solve
  CompensatorSettings solved;
  CompensatorSettings applied;
  double actuation_seconds = 0.0;
};

struct CycleReport {
  int iterations = 0;    // solve+actuate steps
  int measurements = 0;  // header probe epochs, including detection and confirmation
  std::vector<IterationRecord> records;
  std::vector<double> v_s1_trace;  // measured V s1 at every measurement
  bool converged = false;
  bool oscillation_detected = false;
  double total_time = 0.0;
  CompensatorSettings final_settings;
};

class NonConvergent : public std::runtime_error {
 public:
  explicit NonConvergent(CycleReport r);
  CycleReport report;
};

struct LoopContext {
  CompensatorSettings current;  // as applied
  int max_iter = 20;
  double conjugacy_tol_rad = deg_to_rad(5.0);
  /// Measurement that already triggered the cycle; consumed instead of the
  /// first measure_fn() call.
  std::optional<Measurement> pending;
};

using MeasureFn = std::function<Measurement()>;
using ActuateFn = std::function<Actuation(const CompensatorSettings&)>;

/// Three or more consecutive crossings of the V threshold.
bool detect_oscillation(const std::vector<double>& v_s1_trace, double v_s1_max,
                        int min_alternations = 3);

/// measure -> check -> back out -> solve -> actuate, until both references are
/// inside their thresholds. Throws NonConvergent (carrying the report) after
/// `max_iter` actuations without success; ctx.current always tracks the
/// applied settings.
CycleReport run_cycle(LoopContext& ctx, const MeasureFn& measure, const ActuateFn& actuate,
                      const Thresholds& th);

}  // namespace qwnpol

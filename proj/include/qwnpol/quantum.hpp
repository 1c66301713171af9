// Photon statistics: single-photon Stokes estimation, Bell-pair coincidence
// probabilities through a channel, coincidence histograms, accidental
// estimation, visibility and CAR.
#pragma once

#include "qwnpol/poincare.hpp"
#include "qwnpol/rng.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qwnpol {

struct ProjectionCounts {
  std::int64_t c_h = 0, c_v = 0, c_d = 0, c_r = 0;
};

class EmptyCounts : public std::runtime_error {
 public:
  EmptyCounts() : std::runtime_error("no counts in the H/V projections") {}
};
class ZeroCounts : public std::runtime_error {
 public:
  ZeroCounts() : std::runtime_error("visibility undefined: no coincidences") {}
};
class ZeroAccidentals : public std::runtime_error {
 public:
  ZeroAccidentals() : std::runtime_error("CAR undefined: zero accidentals") {}
};
class InsufficientSpan : public std::runtime_error {
 public:
  InsufficientSpan() : std::runtime_error("histogram too short for the accidental windows") {}
};

struct CountStokes {
  std::array<double, 3> raw{};
  StokesVector unit = StokesVector::horizontal();
};

/// Throws EmptyCounts when c_h + c_v == 0 (or the raw vector is zero).
CountStokes stokes_from_counts(const ProjectionCounts& p);

/// Poisson counts with mean rate*dwell*(1 + S.p)/2 for p in {H, V, D, R}.
ProjectionCounts projection_counts(const StokesVector& state, double rate_cps, double dwell,
                                   Rng& rng);

/// Coincidence probability for (|HH> + |VV>)/sqrt(2) with `channel` on the
/// signal arm, mixed with white noise: v*rho_bell + (1-v)*I/4.
double bell_coincidence_prob(const PayloadUnitary& channel, const StokesVector& signal_basis,
                             const StokesVector& idler_basis, double source_visibility);

struct HistogramGeometry {
  double bin_width = 100e-12;  // s
  double start = -10e-9;       // s, left edge of bin 0
  std::size_t bins = 4200;
  double peak_position = 0.0;  // s
};

struct CoincidenceHistogram {
  double bin_width = 100e-12;
  double start = 0.0;
  double peak_position = 0.0;
  std::vector<std::int64_t> bins;

  double bin_center(std::size_t i) const {
    return start + (static_cast<double>(i) + 0.5) * bin_width;
  }
  /// Sum of bins whose centers fall in [lo, hi).
  std::int64_t integrate(double lo, double hi) const;
};

inline constexpr double kCoincidenceWindow = 1e-9;
inline constexpr double kAccidentalSpacing = 2e-9;
inline constexpr int kAccidentalWindows = 200;

/// Poisson background of `acc_rate_per_bin` per second in every bin plus a
/// Gaussian peak (sigma = peak_width) integrating to cc_true_rate * duration.
CoincidenceHistogram simulate_histogram(double cc_true_rate, double acc_rate_per_bin,
                                        double duration, double peak_width,
                                        const HistogramGeometry& h, Rng& rng);

/// Counts in the on-peak window.
double coincidence_counts(const CoincidenceHistogram& hist);

/// Mean counts over 200 one-ns windows at peak + k*2ns, k = 1..200.
double accidental_estimate(const CoincidenceHistogram& hist);

/// (co - cross) / (co + cross). Throws ZeroCounts for a zero sum.
double visibility(double c_copolarized, double c_crosspolarized);

/// Visibility after accidental subtraction; negative subtracted counts are
/// set to zero first.
double subtracted_visibility(double cc_co, double acc_co, double cc_cross, double acc_cross);

/// (cc - acc) / acc. Throws ZeroAccidentals.
double car(double cc, double acc);

struct VisibilityResult {
  double raw = 0.0;
  double accidental_subtracted = 0.0;
  double car = 0.0;
  double cc_peak = 0.0;
  double acc_estimate = 0.0;
};

/// Full analysis of a co/cross histogram pair. CAR is taken from the
/// co-polarized histogram.
VisibilityResult analyze_pair(const CoincidenceHistogram& co, const CoincidenceHistogram& cross);

enum class Basis { HV, DA };

struct BasisProjectors {
  StokesVector co_signal, co_idler, cross_signal, cross_idler;
};
BasisProjectors projectors(Basis b);

}  // namespace qwnpol

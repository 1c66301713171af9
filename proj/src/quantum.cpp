#include "qwnpol/quantum.hpp"

#include <algorithm>
#include <cmath>

namespace qwnpol {

CountStokes stokes_from_counts(const ProjectionCounts& p) {
  const double n = static_cast<double>(p.c_h + p.c_v);
  if (!(n > 0.0)) throw EmptyCounts();
  CountStokes out;
  out.raw = {(static_cast<double>(p.c_h) - static_cast<double>(p.c_v)) / n,
             2.0 * static_cast<double>(p.c_d) / n - 1.0,
             2.0 * static_cast<double>(p.c_r) / n - 1.0};
  const Eigen::Vector3d v(out.raw[0], out.raw[1], out.raw[2]);
  if (!(v.norm() > 0.0)) throw EmptyCounts();
  out.unit = StokesVector(v);
  return out;
}

ProjectionCounts projection_counts(const StokesVector& state, double rate_cps, double dwell,
                                   Rng& rng) {
  const double n = rate_cps * dwell;
  auto draw = [&](const StokesVector& axis) -> std::int64_t {
    const double mean = n * (1.0 + state.dot(axis)) / 2.0;
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> d(mean);
    return d(rng);
  };
  ProjectionCounts c;
  c.c_h = draw(StokesVector::horizontal());
  c.c_v = draw(StokesVector::vertical());
  c.c_d = draw(StokesVector::diagonal());
  c.c_r = draw(StokesVector::right_circular());
  return c;
}

double bell_coincidence_prob(const PayloadUnitary& channel, const StokesVector& signal_basis,
                             const StokesVector& idler_basis, double source_visibility) {
  const Eigen::Vector2cd a = jones_from_stokes(signal_basis);
  const Eigen::Vector2cd b_conj = jones_from_stokes(idler_basis).conjugate();
  // <a| (U x I) |Phi+> projected on <b| = <a|U|b*> / sqrt(2)
  const std::complex<double> amp = a.adjoint() * channel.u * b_conj;
  const double pure = std::norm(amp) / 2.0;
  return source_visibility * pure + (1.0 - source_visibility) / 4.0;
}

std::int64_t CoincidenceHistogram::integrate(double lo, double hi) const {
  if (bins.empty()) return 0;
  // First bin whose center is >= lo.
  const double first = std::ceil((lo - start) / bin_width - 0.5);
  std::int64_t sum = 0;
  for (auto i = static_cast<std::int64_t>(std::max(0.0, first));
       i < static_cast<std::int64_t>(bins.size()); ++i) {
    const double c = bin_center(static_cast<std::size_t>(i));
    if (c >= hi) break;
    if (c >= lo) sum += bins[static_cast<std::size_t>(i)];
  }
  return sum;
}

CoincidenceHistogram simulate_histogram(double cc_true_rate, double acc_rate_per_bin,
                                        double duration, double peak_width,
                                        const HistogramGeometry& h, Rng& rng) {
  CoincidenceHistogram hist;
  hist.bin_width = h.bin_width;
  hist.start = h.start;
  hist.peak_position = h.peak_position;
  hist.bins.assign(h.bins, 0);
  if (duration <= 0.0) return hist;

  const double total_peak = std::max(0.0, cc_true_rate) * duration;
  const double bg = std::max(0.0, acc_rate_per_bin) * duration;
  const double inv = 1.0 / (std::sqrt(2.0) * peak_width);
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - h.peak_position) * inv); };

  for (std::size_t i = 0; i < h.bins; ++i) {
    const double lo = h.start + static_cast<double>(i) * h.bin_width;
    double mean = bg;
    if (total_peak > 0.0 && std::abs(lo - h.peak_position) < 10.0 * peak_width + h.bin_width) {
      mean += total_peak * (cdf(lo + h.bin_width) - cdf(lo));
    }
    if (mean > 0.0) {
      std::poisson_distribution<std::int64_t> d(mean);
      hist.bins[i] = d(rng);
    }
  }
  return hist;
}

double coincidence_counts(const CoincidenceHistogram& hist) {
  const double half = kCoincidenceWindow / 2.0;
  return static_cast<double>(hist.integrate(hist.peak_position - half, hist.peak_position + half));
}

double accidental_estimate(const CoincidenceHistogram& hist) {
  const double half = kCoincidenceWindow / 2.0;
  const double end = hist.start + static_cast<double>(hist.bins.size()) * hist.bin_width;
  const double last_hi = hist.peak_position + kAccidentalWindows * kAccidentalSpacing + half;
  if (hist.bins.empty() || last_hi > end + 1e-15) throw InsufficientSpan();
  double sum = 0.0;
  for (int k = 1; k <= kAccidentalWindows; ++k) {
    const double c = hist.peak_position + k * kAccidentalSpacing;
    sum += static_cast<double>(hist.integrate(c - half, c + half));
  }
  // Windows already have the on-peak width, so the mean needs no rescaling.
  return sum / kAccidentalWindows;
}

double visibility(double co, double cross) {
  const double s = co + cross;
  if (!(s > 0.0)) throw ZeroCounts();
  return (co - cross) / s;
}

double subtracted_visibility(double cc_co, double acc_co, double cc_cross, double acc_cross) {
  return visibility(std::max(0.0, cc_co - acc_co), std::max(0.0, cc_cross - acc_cross));
}

double car(double cc, double acc) {
  if (!(acc > 0.0)) throw ZeroAccidentals();
  return (cc - acc) / acc;
}

VisibilityResult analyze_pair(const CoincidenceHistogram& co, const CoincidenceHistogram& cross) {
  VisibilityResult r;
  const double cc_co = coincidence_counts(co);
  const double cc_cross = coincidence_counts(cross);
  const double acc_co = accidental_estimate(co);
  const double acc_cross = accidental_estimate(cross);
  r.raw = visibility(cc_co, cc_cross);
  r.accidental_subtracted = subtracted_visibility(cc_co, acc_co, cc_cross, acc_cross);
  r.cc_peak = cc_co;
  r.acc_estimate = acc_co;
  r.car = acc_co > 0.0 ? car(cc_co, acc_co) : 0.0;
  return r;
}

BasisProjectors projectors(Basis b) {
  if (b == Basis::HV) {
    return {StokesVector::horizontal(), StokesVector::horizontal(), StokesVector::horizontal(),
            StokesVector::vertical()};
  }
  return {StokesVector::diagonal(), StokesVector::diagonal(), StokesVector::diagonal(),
          StokesVector::antidiagonal()};
}

}  // namespace qwnpol

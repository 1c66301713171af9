#include "qwnpol/batch.hpp"

#include "qwnpol/channel.hpp"
#include "qwnpol/hardware.hpp"
#include "qwnpol/runner.hpp"

#include <algorithm>
#include <cmath>

namespace qwnpol {

namespace {

template <class F>
auto map_trials(std::size_t n, Exec ex, F&& f) -> std::vector<decltype(f(std::size_t{0}))> {
  std::vector<decltype(f(std::size_t{0}))> out(n);
  const auto count = static_cast<std::int64_t>(n);
  if (ex == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  }
  return out;
}

StokesVector random_state(Rng& rng) { return StokesVector(random_unit_vector(rng)); }

}  // namespace

ExactInverseResult exact_inverse_trial(std::uint64_t seed, std::uint64_t index, int probe_states) {
  Rng rng = make_rng(seed, index);
  const PoincareRotation fiber = random_rotation(rng);

  LoopContext ctx;
  auto measure = [&] {
    const auto t = compose(compensator_rotation(ctx.current), fiber);
    return Measurement{apply(t, StokesVector::vertical()), apply(t, StokesVector::diagonal()), 0.0};
  };
  auto actuate = [](const CompensatorSettings& s) { return Actuation{s.canonical(), 0.0}; };
  // Exact arithmetic converges to the ideal thresholds.
  const Thresholds exact{-1.0 + 1e-12, 1.0 - 1e-12};
  const CycleReport r = run_cycle(ctx, measure, actuate, exact);

  const auto net = compose(compensator_rotation(ctx.current), fiber);
  ExactInverseResult out;
  out.iterations = r.iterations;
  for (int k = 0; k < probe_states; ++k) {
    const StokesVector s = random_state(rng);
    out.max_error_rad = std::max(out.max_error_rad, angular_distance(apply(net, s), s));
  }
  return out;
}

std::vector<ExactInverseResult> exact_inverse_batch(std::uint64_t seed, std::size_t n, Exec ex) {
  return map_trials(n, ex, [seed](std::size_t i) { return exact_inverse_trial(seed, i); });
}

PmdArcResult pmd_arc_trial(std::uint64_t seed, std::uint64_t index, double product,
                           const std::optional<StokesVector>& payload) {
  Rng rng = make_rng(seed, index);
  FiberChannel ch;
  ch.base_rotation = random_rotation(rng);
  ch.pmd.axis = random_unit_vector(rng);
  ch.pmd.dgd_ps = 1.0;
  const StokesVector s = payload ? *payload : random_state(rng);

  // Header-perfect compensation inverts the header-wavelength channel.
  const auto comp = inverse(ch.header_rotation());
  const auto net = compose(comp, channel_at_detuning(ch, product * 1e12));

  PmdArcResult r;
  r.error_rad = angular_distance(apply(net, s), s);
  const StokesVector routed = apply(ch.base_rotation, s);
  r.phi = std::acos(std::clamp(routed.vec().dot(ch.pmd.axis), -1.0, 1.0));
  r.predicted_rad = std::abs(product) * std::sin(r.phi);
  return r;
}

std::vector<PmdArcResult> pmd_arc_batch(std::uint64_t seed, std::size_t n, double product,
                                        const std::optional<StokesVector>& payload, Exec ex) {
  return map_trials(n, ex, [&](std::size_t i) { return pmd_arc_trial(seed, i, product, payload); });
}

LoopResult closed_loop_trial(const Scenario& s, const PoincareRotation& route,
                             const CompensatorSettings& initial, std::uint64_t index) {
  Rng rng = make_rng(s.seed, index);
  DriftProcess drift(s.drift.cutoff_hz, s.drift.magnitude_rad, s.seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  CompensatorHardware hw = make_hardware(s.hardware);
  hw.quantize_lcr = false;
  hw.actuate(initial);
  hw.quantize_lcr = true;
  const PolarimeterModel pol = make_polarimeter(s.hardware);
  const double p_in = s.header_input_dbm();
  const double e = s.hardware.header.epoch_seconds();

  auto probe = [&](HeaderParity parity) {
    drift.advance(e);
    const auto t = compose(hw.true_rotation(hw.applied()), compose(drift.rotation(), route));
    const StokesVector launched = apply(header_lcr_rotation(parity), StokesVector::vertical());
    return measure_stokes(apply(t, launched), p_in, pol, rng);
  };
  LoopResult out;
  auto measure = [&] {
    drift.advance(s.probe_period_s - 2.0 * e);
    Measurement m;
    m.sv = probe(HeaderParity::V);
    m.sd = probe(HeaderParity::D);
    m.seconds = s.probe_period_s;
    return m;
  };
  auto actuate = [&](const CompensatorSettings& target) {
    CompensatorHardware moved = hw;
    const Actuation a = moved.actuate(target);
    drift.advance(a.seconds);
    hw = moved;
    out.actuation_seconds.push_back(a.seconds);
    return a;
  };

  LoopContext ctx;
  ctx.current = hw.applied();
  ctx.max_iter = s.max_iter;
  ctx.conjugacy_tol_rad = deg_to_rad(s.conjugacy_tol_deg);
  try {
    out.report = run_cycle(ctx, measure, actuate, s.thresholds);
  } catch (const NonConvergent& nc) {
    out.report = nc.report;
  } catch (const NonConjugateReferences&) {
    out.nonconjugate = true;
  }
  return out;
}

LoopResult reroute_trial(const Scenario& s, std::uint64_t index) {
  Rng rng = make_rng(s.seed ^ 0x5bd1e995ULL, index);
  const PoincareRotation route = paddle_rotation(PaddleState::random(rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CompensatorSettings initial{360.0 * u(rng), 180.0 * u(rng), 2.0 * kPi * u(rng)};
  return closed_loop_trial(s, route, initial, index);
}

std::vector<LoopResult> reroute_batch(const Scenario& s, std::size_t n, Exec ex) {
  return map_trials(n, ex, [&s](std::size_t i) { return reroute_trial(s, i); });
}

VisibilityResult visibility_trial(std::uint64_t seed, std::uint64_t index, const VisibilityParams& p) {
  Rng rng = make_rng(seed, index);
  const BasisProjectors b = projectors(p.basis);
  const PayloadUnitary id;
  const double p_co = bell_coincidence_prob(id, b.co_signal, b.co_idler, p.source_visibility);
  const double p_cross = bell_coincidence_prob(id, b.cross_signal, b.cross_idler, p.source_visibility);
  const HistogramGeometry geom;
  const double acc_per_bin = p.cc_rate_cps / p.car * (geom.bin_width / kCoincidenceWindow);
  const auto co = simulate_histogram(p.cc_rate_cps * p_co / 0.5, acc_per_bin, p.dwell_s,
                                     p.peak_width_s, geom, rng);
  const auto cross = simulate_histogram(p.cc_rate_cps * p_cross / 0.5, acc_per_bin, p.dwell_s,
                                        p.peak_width_s, geom, rng);
  return analyze_pair(co, cross);
}

std::vector<VisibilityResult> visibility_batch(std::uint64_t seed, std::size_t n,
                                               const VisibilityParams& p, Exec ex) {
  return map_trials(n, ex, [&](std::size_t i) { return visibility_trial(seed, i, p); });
}

}  // namespace qwnpol

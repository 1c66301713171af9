// Monte-Carlo trial batches. Every kernel has a serial reference path and an
// OpenMP path; trial i always draws from stream i, so both paths return
// identical results.
#pragma once

#include "qwnpol/compensator.hpp"
#include "qwnpol/quantum.hpp"
#include "qwnpol/scenario.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qwnpol {

enum class Exec { Serial, Parallel };

struct ExactInverseResult {
  int iterations = 0;
  double max_error_rad = 0.0;  // worst probe state after compensation
};

/// Random fiber rotation, noiseless measurement, continuous actuators.
ExactInverseResult exact_inverse_trial(std::uint64_t seed, std::uint64_t index, int probe_states = 100);
std::vector<ExactInverseResult> exact_inverse_batch(std::uint64_t seed, std::size_t n, Exec ex);

struct PmdArcResult {
  double error_rad = 0.0;      // payload distance from target after header-perfect compensation
  double predicted_rad = 0.0;  // first-order arc: product * sin(phi)
  double phi = 0.0;            // angle between the routed payload state and the PMD axis
};

/// Random route and PMD axis at detuning*DGD = `product`. With no payload
/// given, a random one is drawn per trial.
PmdArcResult pmd_arc_trial(std::uint64_t seed, std::uint64_t index, double product,
                           const std::optional<StokesVector>& payload = std::nullopt);
std::vector<PmdArcResult> pmd_arc_batch(std::uint64_t seed, std::size_t n, double product,
                                        const std::optional<StokesVector>& payload, Exec ex);

struct LoopResult {
  CycleReport report;
  bool nonconjugate = false;
  std::vector<double> actuation_seconds;
};

/// Closed loop on a fixed route rotation with the scenario's hardware, noise,
/// probe period and drift. Starts from `initial` settings.
LoopResult closed_loop_trial(const Scenario& s, const PoincareRotation& route,
                             const CompensatorSettings& initial, std::uint64_t index);

/// Random reroute from random prior settings.
LoopResult reroute_trial(const Scenario& s, std::uint64_t index);
std::vector<LoopResult> reroute_batch(const Scenario& s, std::size_t n, Exec ex);

struct VisibilityParams {
  double car = 25.0;
  double cc_rate_cps = 200.0;
  double dwell_s = 100.0;
  double source_visibility = 1.0;
  double peak_width_s = 150e-12;
  Basis basis = Basis::HV;
};

/// Ideal channel, one co/cross histogram pair.
VisibilityResult visibility_trial(std::uint64_t seed, std::uint64_t index, const VisibilityParams& p);
std::vector<VisibilityResult> visibility_batch(std::uint64_t seed, std::size_t n,
                                               const VisibilityParams& p, Exec ex);

}  // namespace qwnpol

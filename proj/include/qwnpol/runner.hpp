// Event-stepped scenario engine. A single virtual clock drives the drift,
// reroutes, header probe epochs, compensation cycles and visibility dwells.
#pragma once

#include "qwnpol/channel.hpp"
#include "qwnpol/compensator.hpp"
#include "qwnpol/hardware.hpp"
#include "qwnpol/quantum.hpp"
#include "qwnpol/scenario.hpp"

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qwnpol {

struct VisibilitySample {
  Basis basis = Basis::HV;
  double raw = 0.0;
  double subtracted = 0.0;
  double cc = 0.0;   // on-peak counts, co-polarized
  double acc = 0.0;  // accidental estimate, co-polarized
};

/// One CSV line. Header fields are absent on visibility-only rows and the
/// visibility fields are absent on probe rows.
struct LogRow {
  double t = 0.0;
  std::optional<std::array<double, 3>> sv, sd;
  double payload_err_deg = 0.0;
  bool compensating = false;
  CompensatorSettings settings;
  std::optional<VisibilitySample> vis;
};

struct ActuationEvent {
  double t_start = 0.0;
  double seconds = 0.0;
  CompensatorSettings from, to;
};

struct CycleEvent {
  double t_start = 0.0;
  double t_end = 0.0;
  int iterations = 0;
  int measurements = 0;
  double total_time = 0.0;
  bool converged = false;
  bool oscillation_detected = false;
  bool aborted = false;  // cut short by a compensation-disabled window
  std::vector<ActuationEvent> actuations;
};

struct RunLog {
  std::vector<LogRow> rows;
  std::vector<CycleEvent> cycles;
  std::vector<double> reroutes;
  std::vector<double> nonconjugate;  // times a solve was refused
  double header_input_dbm = 0.0;
  double header_received_dbm = 0.0;
  double end_time = 0.0;

  int nonconvergent_cycles() const;
};

CompensatorHardware make_hardware(const HardwareParams& h);
PolarimeterModel make_polarimeter(const HardwareParams& h);

/// Deterministic for a given scenario (the seed lives in the scenario).
RunLog run(const Scenario& s);

inline constexpr const char* kCsvHeader =
    "t_s,sv_s1,sv_s2,sv_s3,sd_s1,sd_s2,sd_s3,payload_err_deg,compensating,"
    "qwp_deg,hwp_deg,gamma_rad,vis_basis,vis_raw,vis_sub,cc,acc";

void write_csv(const RunLog& log, std::ostream& out);
void write_cycles_csv(const RunLog& log, std::ostream& out);
std::string summary_json(const RunLog& log, const Scenario& s);

}  // namespace qwnpol

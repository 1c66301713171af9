// Scenario configuration: JSON schema, defaults and validation.
#pragma once

#include "qwnpol/compensator.hpp"
#include "qwnpol/hardware.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qwnpol {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Carries the dotted path of the offending field, e.g. "fiber.length_km".
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what);
  std::string field;
};

struct FiberParams {
  double length_km = 0.0;
  double loss_db = 0.0;
  double pmd_coeff = 0.0791;  // ps / sqrt(km)
  bool pmd_axis_per_route = true;
  bool random_static_rotation = true;  // fixed fiber birefringence behind the paddles
};

struct DriftParams {
  double cutoff_hz = 0.02;
  double magnitude_rad = 0.15;
};

struct HardwareParams {
  double stage_speed_dps = kDefaultStageSpeedDps;
  double lcr_switch_s = kDefaultLcrSwitchSeconds;
  int lcr_entries = 1000;
  double lcr_wrap_gap_rad = 0.0;
  double lcr_gap_center_rad = 0.0;
  double lcr_axis_offset_deg = 0.0;
  double noise_sigma0 = 0.003;
  double reference_power_dbm = -20.0;
  double launch_dbm = -20.0;  // header launch power; loss is subtracted before the amplifier
  double amp_gain_db = 24.0;
  double floor_dbm = kAmplifierFloorDbm;
  HeaderSchedule header;
};

struct QuantumParams {
  bool enabled = true;
  double cc_rate_cps = 200.0;  // true coincidences at the co-polarized maximum
  double car = 25.0;
  double source_visibility = 1.0;
  double dwell_s = 100.0;
  double peak_width_s = 150e-12;
  std::array<double, 3> payload_state{-0.98, 0.13, -0.16};
};

struct Window {
  double start = 0.0;
  double end = 0.0;
  bool operator==(const Window&) const = default;
};

struct Scenario {
  std::uint64_t seed = 0;
  double duration_s = 3600.0;
  double probe_period_s = 10.0;
  double reroutes_per_hour = 4.0;
  std::vector<double> reroute_times_s;  // explicit schedule; overrides the rate
  FiberParams fiber;
  DriftParams drift;
  double detuning_ghz = 122.0;
  Thresholds thresholds;
  int max_iter = 20;
  double conjugacy_tol_deg = 5.0;
  HardwareParams hardware;
  QuantumParams quantum;
  std::vector<Window> compensation_disabled;

  /// Explicit schedule if given, otherwise evenly spaced events at the rate.
  std::vector<double> reroute_schedule() const;
  bool compensation_enabled_at(double t) const;
  double header_input_dbm() const { return hardware.launch_dbm - fiber.loss_db; }

  /// Throws ValidationError naming the first bad field.
  void validate() const;
};

Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);

/// Reads, defaults and validates. Throws ParseError or ValidationError.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace qwnpol

// Device models: motorized waveplate stages, the quantized LCR, the gated
// polarimeter and the header preparation timing.
#pragma once

#include "qwnpol/compensator.hpp"
#include "qwnpol/poincare.hpp"
#include "qwnpol/rng.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qwnpol {

inline constexpr double kDefaultStageSpeedDps = 15.0;
inline constexpr double kDefaultLcrSwitchSeconds = 0.4;
inline constexpr double kAmplifierFloorDbm = -40.0;

/// Length of the shortest move between two angles of an element with the
/// given rotational period (degrees).
double shortest_move_deg(double from_deg, double to_deg, double period_deg);

struct RotationStage {
  double current_angle_deg = 0.0;
  double speed_dps = kDefaultStageSpeedDps;
  double period_deg = 360.0;

  double travel_time(double target_deg) const;
  /// Moves to `target_deg` and returns the seconds spent.
  double move_to(double target_deg);
};

struct LcrEntry {
  int drive = 0;       // look-up table drive index (voltage step)
  double phase = 0.0;  // radians in [0, 2pi)
};

class LcrLookupTable {
 public:
  LcrLookupTable() = default;
  /// Entries must be sorted by phase, each in [0, 2pi); throws otherwise.
  explicit LcrLookupTable(std::vector<LcrEntry> entries);

  /// `n` phases spaced 2pi/n starting at 0.
  static LcrLookupTable uniform(std::size_t n);
  /// Uniform table with every phase within gap/2 of `center_rad` (circular)
  /// removed. The default center puts the hole across the 0/2pi wrap.
  static LcrLookupTable with_wrap_gap(std::size_t n, double gap_rad, double center_rad = 0.0);

  const std::vector<LcrEntry>& entries() const { return entries_; }
  /// Largest circular gap between adjacent phases, wrap-around included.
  double max_gap() const;

 private:
  std::vector<LcrEntry> entries_;
};

struct LcrChoice {
  double applied = 0.0;
  std::size_t index = 0;
};

/// Nearest phase under circular distance; ties go to the lower index.
LcrChoice lcr_quantize(double requested, const LcrLookupTable& lut);

struct HeaderSchedule {
  double header_duration = 345.8e-6;  // s
  double repetition_hz = 604.0;
  double lcr_settle = 0.38;       // s
  double measure_window = 2.5e-3;  // s

  void validate() const;
  /// Cost of preparing and measuring one reference.
  double epoch_seconds() const { return lcr_settle + measure_window; }
};

struct PolarimeterModel {
  double noise_sigma0 = 0.003;  // per-component RMS at reference power
  double reference_power_dbm = -20.0;
  double sample_period = 10e-6;  // s
  double floor_dbm = kAmplifierFloorDbm;
  HeaderSchedule gate;

  void validate() const;
  /// sigma0 * 10^((P_ref - P) / 20).
  double sigma_at(double received_dbm) const;
};

class SignalBelowFloor : public std::runtime_error {
 public:
  SignalBelowFloor(double received_dbm, double floor_dbm);
  double received_dbm;
};

StokesVector measure_stokes(const StokesVector& true_state, double received_dbm,
                            const PolarimeterModel& model, Rng& rng);

enum class HeaderParity { V, D };

struct HeaderPrep {
  StokesVector ideal;
  double elapsed;
};

/// LCR at 67.5 deg behind the PBS: phase 0 for V, pi for D.
PoincareRotation header_lcr_rotation(HeaderParity parity);
HeaderPrep prepare_header(HeaderParity parity, const HeaderSchedule& sched);

/// Sequential QWP then HWP moves (one stage at a time) plus the LCR switch.
double actuation_time(const RotationStage& qwp, const RotationStage& hwp,
                      const CompensatorSettings& from, const CompensatorSettings& to,
                      double lcr_switch_s = kDefaultLcrSwitchSeconds);

/// The physical compensator: two stages and a quantized LCR. The LCR axis
/// can be misaligned from the 0 deg the solver assumes.
struct CompensatorHardware {
  RotationStage qwp{0.0, kDefaultStageSpeedDps, 360.0};
  RotationStage hwp{0.0, kDefaultStageSpeedDps, 180.0};
  LcrLookupTable lut = LcrLookupTable::uniform(1000);
  double lcr_switch_s = kDefaultLcrSwitchSeconds;
  double lcr_axis_offset_deg = 0.0;
  bool quantize_lcr = true;

  CompensatorSettings applied() const;
  /// Quantize, move the stages, and report what was applied and how long it took.
  Actuation actuate(const CompensatorSettings& target);
  /// The rotation the optics actually realize for `s`.
  PoincareRotation true_rotation(const CompensatorSettings& s) const;

 private:
  double gamma_ = 0.0;
};

}  // namespace qwnpol

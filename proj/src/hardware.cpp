#include "qwnpol/hardware.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qwnpol {

double shortest_move_deg(double from_deg, double to_deg, double period_deg) {
  const double d = wrap_positive(to_deg - from_deg, period_deg);
  return std::min(d, period_deg - d);
}

double RotationStage::travel_time(double target_deg) const {
  return shortest_move_deg(current_angle_deg, target_deg, period_deg) / speed_dps;
}

double RotationStage::move_to(double target_deg) {
  const double t = travel_time(target_deg);
  current_angle_deg = wrap_positive(target_deg, period_deg);
  return t;
}

LcrLookupTable::LcrLookupTable(std::vector<LcrEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("LCR look-up table is empty");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double p = entries_[i].phase;
    if (!(p >= 0.0 && p < 2.0 * kPi)) {
      throw std::invalid_argument("LCR phases must lie in [0, 2pi)");
    }
    if (i > 0 && p < entries_[i - 1].phase) {
      throw std::invalid_argument("LCR phases must be sorted");
    }
  }
}

LcrLookupTable LcrLookupTable::uniform(std::size_t n) {
  std::vector<LcrEntry> e;
  e.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    e.push_back({static_cast<int>(k), 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n)});
  }
  return LcrLookupTable(std::move(e));
}

namespace {
double circular_distance(double a, double b) {
  const double d = wrap_positive(a - b, 2.0 * kPi);
  return std::min(d, 2.0 * kPi - d);
}
}  // namespace

LcrLookupTable LcrLookupTable::with_wrap_gap(std::size_t n, double gap_rad, double center_rad) {
  const LcrLookupTable full = uniform(n);
  std::vector<LcrEntry> e;
  for (const auto& entry : full.entries()) {
    if (circular_distance(entry.phase, center_rad) >= gap_rad / 2.0) e.push_back(entry);
  }
  return LcrLookupTable(std::move(e));
}

double LcrLookupTable::max_gap() const {
  double g = entries_.front().phase + 2.0 * kPi - entries_.back().phase;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    g = std::max(g, entries_[i].phase - entries_[i - 1].phase);
  }
  return g;
}

LcrChoice lcr_quantize(double requested, const LcrLookupTable& lut) {
  const auto& e = lut.entries();
  const double r = wrap_positive(requested, 2.0 * kPi);
  const auto it = std::lower_bound(e.begin(), e.end(), r,
                                   [](const LcrEntry& x, double v) { return x.phase < v; });
  const std::size_t hi = (it == e.end()) ? 0 : static_cast<std::size_t>(it - e.begin());
  const std::size_t lo = (it == e.begin()) ? e.size() - 1 : static_cast<std::size_t>(it - e.begin()) - 1;

  const double dhi = circular_distance(r, e[hi].phase);
  const double dlo = circular_distance(r, e[lo].phase);
  std::size_t pick;
  if (dhi < dlo) {
    pick = hi;
  } else if (dlo < dhi) {
    pick = lo;
  } else {
    pick = std::min(lo, hi);
  }
  return {e[pick].phase, pick};
}

void HeaderSchedule::validate() const {
  if (!(header_duration > 0.0 && repetition_hz > 0.0 && lcr_settle >= 0.0 && measure_window > 0.0)) {
    throw std::invalid_argument("header schedule durations must be positive");
  }
  if (measure_window < header_duration) {
    throw std::invalid_argument("header measure_window must cover at least one header");
  }
}

void PolarimeterModel::validate() const {
  if (!(noise_sigma0 >= 0.0)) throw std::invalid_argument("polarimeter noise_sigma0 must be >= 0");
  if (!(sample_period > 0.0)) throw std::invalid_argument("polarimeter sample_period must be > 0");
  gate.validate();
}

double PolarimeterModel::sigma_at(double received_dbm) const {
  return noise_sigma0 * std::pow(10.0, (reference_power_dbm - received_dbm) / 20.0);
}

namespace {
std::string floor_message(double p, double floor) {
  std::ostringstream os;
  os << "header power " << p << " dBm is below the amplifier floor of " << floor << " dBm";
  return os.str();
}
}  // namespace

SignalBelowFloor::SignalBelowFloor(double p, double floor)
    : std::runtime_error(floor_message(p, floor)), received_dbm(p) {}

StokesVector measure_stokes(const StokesVector& true_state, double received_dbm,
                            const PolarimeterModel& model, Rng& rng) {
  if (received_dbm < model.floor_dbm) throw SignalBelowFloor(received_dbm, model.floor_dbm);
  const double sigma = model.sigma_at(received_dbm);
  if (sigma == 0.0) return true_state;
  std::normal_distribution<double> n(0.0, sigma);
  Eigen::Vector3d v = true_state.vec();
  for (int k = 0; k < 3; ++k) v[k] += n(rng);
  return StokesVector(v);
}

PoincareRotation header_lcr_rotation(HeaderParity parity) {
  return retarder_rotation(deg_to_rad(67.5), parity == HeaderParity::V ? 0.0 : kPi);
}

HeaderPrep prepare_header(HeaderParity parity, const HeaderSchedule& sched) {
  return {parity == HeaderParity::V ? StokesVector::vertical() : StokesVector::diagonal(),
          sched.epoch_seconds()};
}

double actuation_time(const RotationStage& qwp, const RotationStage& hwp,
                      const CompensatorSettings& from, const CompensatorSettings& to,
                      double lcr_switch_s) {
  const double dq = shortest_move_deg(from.theta_qwp_deg, to.theta_qwp_deg, qwp.period_deg);
  const double dh = shortest_move_deg(from.theta_hwp_deg, to.theta_hwp_deg, hwp.period_deg);
  return dq / qwp.speed_dps + dh / hwp.speed_dps + lcr_switch_s;
}

CompensatorSettings CompensatorHardware::applied() const {
  return {qwp.current_angle_deg, hwp.current_angle_deg, gamma_};
}

Actuation CompensatorHardware::actuate(const CompensatorSettings& target) {
  const CompensatorSettings t = target.canonical();
  const CompensatorSettings before = applied();
  CompensatorSettings out = t;
  if (quantize_lcr) out.gamma_lcr = lcr_quantize(t.gamma_lcr, lut).applied;
  const double seconds = actuation_time(qwp, hwp, before, out, lcr_switch_s);
  qwp.move_to(out.theta_qwp_deg);
  hwp.move_to(out.theta_hwp_deg);
  gamma_ = out.gamma_lcr;
  return {applied(), seconds};
}

PoincareRotation CompensatorHardware::true_rotation(const CompensatorSettings& s) const {
  const auto qwp_r = retarder_rotation(deg_to_rad(s.theta_qwp_deg), kPi / 2.0);
  const auto hwp_r = retarder_rotation(deg_to_rad(s.theta_hwp_deg), kPi);
  const auto lcr_r = retarder_rotation(deg_to_rad(lcr_axis_offset_deg), s.gamma_lcr);
  return compose(lcr_r, compose(hwp_r, qwp_r));
}

}  // namespace qwnpol

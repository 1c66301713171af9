#include "qwnpol/runner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"

namespace qwnpol {

int RunLog::nonconvergent_cycles() const {
  return static_cast<int>(std::count_if(cycles.begin(), cycles.end(), [](const CycleEvent& c) {
    return !c.converged && !c.aborted;
  }));
}

namespace {

constexpr std::uint64_t kStreamMeasure = 1;
constexpr std::uint64_t kStreamRoute = 2;
constexpr std::uint64_t kStreamQuantum = 3;

struct CompensationDisabled {};

class Simulation {
 public:
  explicit Simulation(const Scenario& s);
  RunLog run();

 private:
  PoincareRotation compensator() const { return hw_.true_rotation(hw_.applied()); }
  PoincareRotation payload_net() const {
    return compose(compensator(), channel_at_detuning(channel_, delta_omega_));
  }
  double payload_error_deg() const;

  void draw_route();
  void refresh();
  void step(double dt);
  void advance_to(double t_end);
  void finish_dwell();
  Basis dwell_basis() const { return dwell_index_ % 2 == 0 ? Basis::HV : Basis::DA; }

  StokesVector probe(HeaderParity parity);
  Measurement epoch();
  Actuation actuate(const CompensatorSettings& target, CycleEvent& ev);
  void compensate(const Measurement& detected);

  const Scenario& s_;
  RunLog log_;
  double t_ = 0.0;

  FiberChannel channel_;
  PoincareRotation static_fiber_;
  Eigen::Vector3d pmd_axis_ = Eigen::Vector3d::UnitX();
  double delta_omega_ = 0.0;
  std::vector<double> reroute_times_;
  std::size_t next_reroute_ = 0;

  CompensatorHardware hw_;
  PolarimeterModel polarimeter_;
  StokesVector payload_state_;

  Rng rng_measure_, rng_route_, rng_quantum_;

  // Visibility dwell accumulator: time integrals of the co/cross
  // coincidence probabilities for the current basis.
  std::size_t dwell_index_ = 0;
  double p_co_ = 0.0, p_cross_ = 0.0;
  double int_co_ = 0.0, int_cross_ = 0.0;
};

Simulation::Simulation(const Scenario& s)
    : s_(s),
      payload_state_(s.quantum.payload_state[0], s.quantum.payload_state[1],
                     s.quantum.payload_state[2]),
      rng_measure_(make_rng(s.seed, kStreamMeasure)),
      rng_route_(make_rng(s.seed, kStreamRoute)),
      rng_quantum_(make_rng(s.seed, kStreamQuantum)) {
  const auto& f = s.fiber;
  static_fiber_ = f.random_static_rotation ? random_rotation(rng_route_) : PoincareRotation{};
  pmd_axis_ = random_unit_vector(rng_route_);
  channel_.drift = DriftProcess(s.drift.cutoff_hz, s.drift.magnitude_rad, s.seed);
  channel_.loss_db = f.loss_db;
  channel_.length_km = f.length_km;
  delta_omega_ = ghz_to_rad_per_s(s.detuning_ghz);
  draw_route();

  const auto& h = s.hardware;
  hw_ = make_hardware(h);
  polarimeter_ = make_polarimeter(h);

  log_.header_input_dbm = s.header_input_dbm();
  log_.header_received_dbm = received_power(h.launch_dbm, f.loss_db, h.amp_gain_db);
  reroute_times_ = s.reroute_schedule();
  refresh();
}

void Simulation::draw_route() {
  const PaddleState paddles = PaddleState::random(rng_route_);
  channel_.base_rotation = compose(static_fiber_, paddle_rotation(paddles));
  if (s_.fiber.pmd_axis_per_route && next_reroute_ > 0) pmd_axis_ = random_unit_vector(rng_route_);
  channel_.pmd = PmdDescriptor::from_coefficient(pmd_axis_, s_.fiber.pmd_coeff, s_.fiber.length_km);
}

double Simulation::payload_error_deg() const {
  return rad_to_deg(angular_distance(apply(payload_net(), payload_state_), payload_state_));
}

void Simulation::refresh() {
  if (!s_.quantum.enabled) return;
  const PayloadUnitary u = payload_unitary(payload_net());
  const BasisProjectors b = projectors(dwell_basis());
  const double v = s_.quantum.source_visibility;
  p_co_ = bell_coincidence_prob(u, b.co_signal, b.co_idler, v);
  p_cross_ = bell_coincidence_prob(u, b.cross_signal, b.cross_idler, v);
}

void Simulation::step(double dt) {
  if (dt <= 0.0) return;
  const double co0 = p_co_, cross0 = p_cross_;
  channel_.drift.advance(dt);
  refresh();
  int_co_ += 0.5 * (co0 + p_co_) * dt;
  int_cross_ += 0.5 * (cross0 + p_cross_) * dt;
}

void Simulation::advance_to(double t_end) {
  const double dwell = s_.quantum.dwell_s;
  while (t_ < t_end) {
    double next = t_end;
    const bool reroute_due = next_reroute_ < reroute_times_.size();
    if (reroute_due) next = std::min(next, reroute_times_[next_reroute_]);
    const double dwell_end = static_cast<double>(dwell_index_ + 1) * dwell;
    if (s_.quantum.enabled) next = std::min(next, dwell_end);
    step(next - t_);
    t_ = next;
    if (s_.quantum.enabled && t_ >= dwell_end) finish_dwell();
    if (reroute_due && t_ >= reroute_times_[next_reroute_]) {
      ++next_reroute_;
      draw_route();
      log_.reroutes.push_back(t_);
      refresh();
    }
  }
}

void Simulation::finish_dwell() {
  const auto& q = s_.quantum;
  const HistogramGeometry geom;
  // cc_rate is the true coincidence rate at the co-polarized maximum (p = 1/2).
  const double co_rate = q.cc_rate_cps * (int_co_ / q.dwell_s) / 0.5;
  const double cross_rate = q.cc_rate_cps * (int_cross_ / q.dwell_s) / 0.5;
  const double acc_per_bin = q.cc_rate_cps / q.car * (geom.bin_width / kCoincidenceWindow);
  const auto co = simulate_histogram(co_rate, acc_per_bin, q.dwell_s, q.peak_width_s, geom, rng_quantum_);
  const auto cross =
      simulate_histogram(cross_rate, acc_per_bin, q.dwell_s, q.peak_width_s, geom, rng_quantum_);

  LogRow row;
  row.t = t_;
  row.payload_err_deg = payload_error_deg();
  row.settings = hw_.applied();
  try {
    const VisibilityResult r = analyze_pair(co, cross);
    row.vis = VisibilitySample{dwell_basis(), r.raw, r.accidental_subtracted, r.cc_peak, r.acc_estimate};
    log_.rows.push_back(row);
  } catch (const ZeroCounts&) {
  }

  ++dwell_index_;
  int_co_ = int_cross_ = 0.0;
  refresh();
}

StokesVector Simulation::probe(HeaderParity parity) {
  const HeaderPrep prep = prepare_header(parity, s_.hardware.header);
  advance_to(t_ + prep.elapsed);
  const StokesVector launched = apply(header_lcr_rotation(parity), StokesVector::vertical());
  const StokesVector arriving =
      apply(compose(compensator(), channel_.header_rotation()), launched);
  return measure_stokes(arriving, log_.header_input_dbm, polarimeter_, rng_measure_);
}

Measurement Simulation::epoch() {
  const double e = s_.hardware.header.epoch_seconds();
  advance_to(t_ + s_.probe_period_s - 2.0 * e);
  Measurement m;
  m.sv = probe(HeaderParity::V);
  m.sd = probe(HeaderParity::D);
  m.seconds = s_.probe_period_s;

  LogRow row;
  row.t = t_;
  row.sv = std::array<double, 3>{m.sv.s1(), m.sv.s2(), m.sv.s3()};
  row.sd = std::array<double, 3>{m.sd.s1(), m.sd.s2(), m.sd.s3()};
  row.payload_err_deg = payload_error_deg();
  row.compensating =
      s_.compensation_enabled_at(t_) && needs_compensation(m.sv, m.sd, s_.thresholds);
  row.settings = hw_.applied();
  log_.rows.push_back(row);
  return m;
}

Actuation Simulation::actuate(const CompensatorSettings& target, CycleEvent& ev) {
  if (!s_.compensation_enabled_at(t_)) throw CompensationDisabled{};
  // The stages move while the channel keeps drifting; the new settings
  // take effect once the move completes.
  CompensatorHardware moved = hw_;
  const CompensatorSettings from = hw_.applied();
  const Actuation a = moved.actuate(target);
  const double t0 = t_;
  advance_to(t_ + a.seconds);
  hw_ = moved;
  refresh();
  ev.actuations.push_back({t0, a.seconds, from, a.applied});
  return a;
}

void Simulation::compensate(const Measurement& detected) {
  CycleEvent ev;
  ev.t_start = t_;
  LoopContext ctx;
  ctx.current = hw_.applied();
  ctx.max_iter = s_.max_iter;
  ctx.conjugacy_tol_rad = deg_to_rad(s_.conjugacy_tol_deg);
  ctx.pending = detected;

  auto fill = [&ev](const CycleReport& r) {
    ev.iterations = r.iterations;
    ev.measurements = r.measurements;
    ev.total_time = r.total_time;
    ev.converged = r.converged;
    ev.oscillation_detected = r.oscillation_detected;
  };
  try {
    const CycleReport r = run_cycle(
        ctx, [this] { return epoch(); },
        [this, &ev](const CompensatorSettings& target) { return actuate(target, ev); },
        s_.thresholds);
    fill(r);
  } catch (const NonConvergent& e) {
    fill(e.report);
  } catch (const NonConjugateReferences&) {
    log_.nonconjugate.push_back(t_);
    return;
  } catch (const CompensationDisabled&) {
    ev.aborted = true;
    ev.iterations = static_cast<int>(ev.actuations.size());
  }
  ev.t_end = t_;
  log_.cycles.push_back(std::move(ev));
}

RunLog Simulation::run() {
  while (t_ + s_.probe_period_s <= s_.duration_s) {
    const Measurement m = epoch();
    if (!s_.compensation_enabled_at(t_)) continue;
    if (!needs_compensation(m.sv, m.sd, s_.thresholds)) continue;
    compensate(m);
  }
  advance_to(s_.duration_s);
  log_.end_time = t_;
  return std::move(log_);
}

void put(std::ostream& out, double x) { out << ',' << x; }

const char* basis_name(Basis b) { return b == Basis::HV ? "HV" : "DA"; }

struct Stats {
  double n = 0, mean = 0, m2 = 0, min = 0, max = 0;
  void add(double x) {
    if (n == 0) min = max = x;
    min = std::min(min, x);
    max = std::max(max, x);
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double stddev() const { return n > 0 ? std::sqrt(m2 / n) : 0.0; }
  nlohmann::json to_json() const {
    return {{"count", static_cast<long>(n)}, {"mean", mean}, {"std", stddev()}, {"min", min}, {"max", max}};
  }
};

}  // namespace

CompensatorHardware make_hardware(const HardwareParams& h) {
  CompensatorHardware hw;
  hw.qwp.speed_dps = h.stage_speed_dps;
  hw.hwp.speed_dps = h.stage_speed_dps;
  const auto n = static_cast<std::size_t>(h.lcr_entries);
  hw.lut = h.lcr_wrap_gap_rad > 0.0 ? LcrLookupTable::with_wrap_gap(n, h.lcr_wrap_gap_rad, h.lcr_gap_center_rad)
                                    : LcrLookupTable::uniform(n);
  hw.lcr_switch_s = h.lcr_switch_s;
  hw.lcr_axis_offset_deg = h.lcr_axis_offset_deg;
  return hw;
}

PolarimeterModel make_polarimeter(const HardwareParams& h) {
  PolarimeterModel p;
  p.noise_sigma0 = h.noise_sigma0;
  p.reference_power_dbm = h.reference_power_dbm;
  p.floor_dbm = h.floor_dbm;
  p.gate = h.header;
  return p;
}

RunLog run(const Scenario& s) {
  s.validate();
  return Simulation(s).run();
}

void write_csv(const RunLog& log, std::ostream& out) {
  const auto prec = out.precision(10);
  out << kCsvHeader << '\n';
  for (const auto& r : log.rows) {
    out << r.t;
    for (const auto* v : {&r.sv, &r.sd}) {
      if (*v) {
        for (double x : **v) put(out, x);
      } else {
        out << ",,,";
      }
    }
    put(out, r.payload_err_deg);
    out << ',' << (r.compensating ? 1 : 0);
    put(out, r.settings.theta_qwp_deg);
    put(out, r.settings.theta_hwp_deg);
    put(out, r.settings.gamma_lcr);
    if (r.vis) {
      out << ',' << basis_name(r.vis->basis);
      put(out, r.vis->raw);
      put(out, r.vis->subtracted);
      put(out, r.vis->cc);
      put(out, r.vis->acc);
    } else {
      out << ",,,,,";
    }
    out << '\n';
  }
  out.precision(prec);
}

void write_cycles_csv(const RunLog& log, std::ostream& out) {
  const auto prec = out.precision(10);
  out << "t_start_s,t_end_s,iterations,measurements,total_time_s,converged,oscillation,aborted,"
         "actuation_s\n";
  for (const auto& c : log.cycles) {
    out << c.t_start << ',' << c.t_end << ',' << c.iterations << ',' << c.measurements << ','
        << c.total_time << ',' << c.converged << ',' << c.oscillation_detected << ',' << c.aborted
        << ',';
    for (std::size_t i = 0; i < c.actuations.size(); ++i) {
      out << (i ? ";" : "") << c.actuations[i].seconds;
    }
    out << '\n';
  }
  out.precision(prec);
}

std::string summary_json(const RunLog& log, const Scenario& s) {
  using nlohmann::json;
  Stats err, settled;
  std::map<Basis, std::pair<Stats, Stats>> vis;
  for (const auto& r : log.rows) {
    if (r.sv) {
      err.add(r.payload_err_deg);
      if (!r.compensating) settled.add(r.payload_err_deg);
    }
    if (r.vis) {
      vis[r.vis->basis].first.add(r.vis->raw);
      vis[r.vis->basis].second.add(r.vis->subtracted);
    }
  }

  Stats cycle_time, act_time;
  std::map<int, int> by_measurements, by_iterations;
  int converged = 0, oscillating = 0, aborted = 0;
  for (const auto& c : log.cycles) {
    if (c.aborted) {
      ++aborted;
      continue;
    }
    cycle_time.add(c.total_time);
    by_measurements[c.measurements] += 1;
    by_iterations[c.iterations] += 1;
    converged += c.converged ? 1 : 0;
    oscillating += c.oscillation_detected ? 1 : 0;
    for (const auto& a : c.actuations) act_time.add(a.seconds);
  }
  json hist_m = json::object(), hist_i = json::object();
  for (auto [k, v] : by_measurements) hist_m[std::to_string(k)] = v;
  for (auto [k, v] : by_iterations) hist_i[std::to_string(k)] = v;

  json vj = json::object();
  for (const auto& [b, st] : vis) {
    vj[basis_name(b)] = {{"raw", st.first.to_json()}, {"subtracted", st.second.to_json()}};
  }

  json j;
  j["seed"] = s.seed;
  j["duration_s"] = s.duration_s;
  j["end_time_s"] = log.end_time;
  j["probe_rows"] = static_cast<long>(err.n);
  j["payload_err_deg"] = err.to_json();
  j["payload_err_deg_settled"] = settled.to_json();
  j["visibility"] = vj;
  j["cycles"] = {{"count", static_cast<long>(cycle_time.n)},
                 {"converged", converged},
                 {"nonconvergent", log.nonconvergent_cycles()},
                 {"aborted", aborted},
                 {"oscillation_detected", oscillating},
                 {"measurements_histogram", hist_m},
                 {"iterations_histogram", hist_i},
                 {"time_s", cycle_time.to_json()}};
  j["actuation_s"] = act_time.to_json();
  j["reroutes"] = log.reroutes.size();
  j["nonconjugate_events"] = log.nonconjugate.size();
  j["header_input_dbm"] = log.header_input_dbm;
  j["header_received_dbm"] = log.header_received_dbm;
  return j.dump(2);
}

}  // namespace qwnpol

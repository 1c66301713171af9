#include "qwnpol/scenario.hpp"

#include "qwnpol/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace qwnpol {

using nlohmann::json;

ValidationError::ValidationError(std::string f, const std::string& what)
    : std::runtime_error(f + ": " + what), field(std::move(f)) {}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembering which keys were consumed so that
// anything left over can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        fail(key, "expected a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "expected an array of numbers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) fail(key, "expected an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }
  void get(const char* key, std::array<double, 3>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array() || v->size() != 3) fail(key, "expected [s1, s2, s3]");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!(*v)[i].is_number()) fail(key, "expected [s1, s2, s3]");
        out[i] = (*v)[i].get<double>();
      }
    }
  }
  void get(const char* key, std::vector<Window>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "expected an array of [start, end] pairs");
      out.clear();
      for (const auto& w : *v) {
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
          fail(key, "expected an array of [start, end] pairs");
        }
        out.push_back({w[0].get<double>(), w[1].get<double>()});
      }
    }
  }

  /// Nested object; an absent key yields an empty reader.
  Reader sub(const char* key) {
    static const json kEmpty = json::object();
    if (const json* v = take(key)) return Reader(*v, join(path_, key));
    return Reader(kEmpty, join(path_, key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(join(path_, it.key()), "unknown key");
    }
  }

 private:
  const json* take(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }
  [[noreturn]] void fail(const char* key, const std::string& what) const {
    throw ValidationError(join(path_, key), what);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(field, what);
}

}  // namespace

std::vector<double> Scenario::reroute_schedule() const {
  if (!reroute_times_s.empty()) return reroute_times_s;
  std::vector<double> t;
  if (reroutes_per_hour <= 0.0) return t;
  const double step = 3600.0 / reroutes_per_hour;
  for (double x = step; x < duration_s; x += step) t.push_back(x);
  return t;
}

bool Scenario::compensation_enabled_at(double t) const {
  return std::none_of(compensation_disabled.begin(), compensation_disabled.end(),
                      [t](const Window& w) { return t >= w.start && t < w.end; });
}

void Scenario::validate() const {
  require(duration_s >= 0.0, "duration_s", "must be >= 0");
  require(probe_period_s > 2.0 * hardware.header.epoch_seconds(), "probe_period_s",
          "must exceed one V+D header epoch");
  require(reroutes_per_hour >= 0.0, "reroutes_per_hour", "must be >= 0");
  for (std::size_t i = 0; i < reroute_times_s.size(); ++i) {
    require(reroute_times_s[i] >= 0.0, "reroute_times_s", "times must be >= 0");
    require(i == 0 || reroute_times_s[i] >= reroute_times_s[i - 1], "reroute_times_s",
            "times must be sorted");
  }
  require(fiber.length_km >= 0.0, "fiber.length_km", "must be >= 0");
  require(fiber.loss_db >= 0.0, "fiber.loss_db", "must be >= 0");
  require(fiber.pmd_coeff >= 0.0, "fiber.pmd_coeff", "must be >= 0");
  require(drift.cutoff_hz > 0.0, "drift.cutoff_hz", "must be > 0");
  require(drift.magnitude_rad >= 0.0, "drift.magnitude_rad", "must be >= 0");
  const double product = ghz_to_rad_per_s(detuning_ghz) * dgd(fiber.pmd_coeff, fiber.length_km) * 1e-12;
  require(std::abs(product) < kPi / 4.0, "detuning_ghz",
          "detuning times DGD exceeds the first-order PMD limit pi/4");
  try {
    thresholds.validate();
  } catch (const std::invalid_argument&) {
    require(thresholds.v_s1_max >= -1.0 && thresholds.v_s1_max < 0.0, "thresholds.v_s1_max",
            "must lie in [-1, 0)");
    throw ValidationError("thresholds.d_s2_min", "must lie in (0, 1]");
  }
  require(max_iter >= 1, "compensator.max_iter", "must be >= 1");
  require(conjugacy_tol_deg > 0.0 && conjugacy_tol_deg < 90.0, "compensator.conjugacy_tol_deg",
          "must lie in (0, 90)");
  require(hardware.stage_speed_dps > 0.0, "hardware.stage_speed_dps", "must be > 0");
  require(hardware.lcr_switch_s >= 0.0, "hardware.lcr_switch_s", "must be >= 0");
  require(hardware.lcr_entries >= 1, "hardware.lcr_entries", "must be >= 1");
  require(hardware.lcr_wrap_gap_rad >= 0.0 && hardware.lcr_wrap_gap_rad < 2.0 * kPi,
          "hardware.lcr_wrap_gap_rad", "must lie in [0, 2pi)");
  require(hardware.noise_sigma0 >= 0.0, "hardware.noise_sigma0", "must be >= 0");
  require(header_input_dbm() >= hardware.floor_dbm, "hardware.launch_dbm",
          "header power after fiber loss is below the amplifier floor");
  try {
    hardware.header.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("hardware.header", e.what());
  }
  require(quantum.cc_rate_cps > 0.0, "quantum.cc_rate_cps", "must be > 0");
  require(quantum.car > 0.0, "quantum.car", "must be > 0");
  require(quantum.source_visibility >= 0.0 && quantum.source_visibility <= 1.0,
          "quantum.source_visibility", "must lie in [0, 1]");
  require(quantum.dwell_s > 0.0, "quantum.dwell_s", "must be > 0");
  require(quantum.peak_width_s > 0.0, "quantum.peak_width_s", "must be > 0");
  const auto& p = quantum.payload_state;
  require(std::hypot(p[0], p[1], p[2]) > 0.0, "quantum.payload_state", "must be non-zero");
  for (const auto& w : compensation_disabled) {
    require(w.start >= 0.0 && w.end >= w.start, "compensation_disabled",
            "windows must satisfy 0 <= start <= end");
  }
}

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }

  Scenario s;
  Reader r(j, "");
  if (!r.has("seed")) throw ValidationError("seed", "is required");
  r.get("seed", s.seed);
  r.get("duration_s", s.duration_s);
  r.get("probe_period_s", s.probe_period_s);
  r.get("reroutes_per_hour", s.reroutes_per_hour);
  r.get("reroute_times_s", s.reroute_times_s);
  r.get("detuning_ghz", s.detuning_ghz);
  r.get("compensation_disabled", s.compensation_disabled);
  {
    Reader f = r.sub("fiber");
    f.get("length_km", s.fiber.length_km);
    f.get("loss_db", s.fiber.loss_db);
    f.get("pmd_coeff", s.fiber.pmd_coeff);
    f.get("pmd_axis_per_route", s.fiber.pmd_axis_per_route);
    f.get("random_static_rotation", s.fiber.random_static_rotation);
    f.finish();
  }
  {
    Reader d = r.sub("drift");
    d.get("cutoff_hz", s.drift.cutoff_hz);
    d.get("magnitude_rad", s.drift.magnitude_rad);
    d.finish();
  }
  {
    Reader t = r.sub("thresholds");
    t.get("v_s1_max", s.thresholds.v_s1_max);
    t.get("d_s2_min", s.thresholds.d_s2_min);
    t.finish();
  }
  {
    Reader c = r.sub("compensator");
    c.get("max_iter", s.max_iter);
    c.get("conjugacy_tol_deg", s.conjugacy_tol_deg);
    c.finish();
  }
  {
    Reader h = r.sub("hardware");
    auto& hw = s.hardware;
    h.get("stage_speed_dps", hw.stage_speed_dps);
    h.get("lcr_switch_s", hw.lcr_switch_s);
    h.get("lcr_entries", hw.lcr_entries);
    h.get("lcr_wrap_gap_rad", hw.lcr_wrap_gap_rad);
    h.get("lcr_gap_center_rad", hw.lcr_gap_center_rad);
    h.get("lcr_axis_offset_deg", hw.lcr_axis_offset_deg);
    h.get("noise_sigma0", hw.noise_sigma0);
    h.get("reference_power_dbm", hw.reference_power_dbm);
    h.get("launch_dbm", hw.launch_dbm);
    h.get("amp_gain_db", hw.amp_gain_db);
    h.get("floor_dbm", hw.floor_dbm);
    Reader hs = h.sub("header");
    hs.get("header_duration_s", hw.header.header_duration);
    hs.get("repetition_hz", hw.header.repetition_hz);
    hs.get("lcr_settle_s", hw.header.lcr_settle);
    hs.get("measure_window_s", hw.header.measure_window);
    hs.finish();
    h.finish();
  }
  {
    Reader q = r.sub("quantum");
    q.get("enabled", s.quantum.enabled);
    q.get("cc_rate_cps", s.quantum.cc_rate_cps);
    q.get("car", s.quantum.car);
    q.get("source_visibility", s.quantum.source_visibility);
    q.get("dwell_s", s.quantum.dwell_s);
    q.get("peak_width_s", s.quantum.peak_width_s);
    q.get("payload_state", s.quantum.payload_state);
    q.finish();
  }
  r.finish();
  s.validate();
  return s;
}

std::string scenario_to_json_text(const Scenario& s) {
  json j;
  j["seed"] = s.seed;
  j["duration_s"] = s.duration_s;
  j["probe_period_s"] = s.probe_period_s;
  j["reroutes_per_hour"] = s.reroutes_per_hour;
  j["reroute_times_s"] = s.reroute_times_s;
  j["detuning_ghz"] = s.detuning_ghz;
  json windows = json::array();
  for (const auto& w : s.compensation_disabled) windows.push_back({w.start, w.end});
  j["compensation_disabled"] = windows;
  j["fiber"] = {{"length_km", s.fiber.length_km},
                {"loss_db", s.fiber.loss_db},
                {"pmd_coeff", s.fiber.pmd_coeff},
                {"pmd_axis_per_route", s.fiber.pmd_axis_per_route},
                {"random_static_rotation", s.fiber.random_static_rotation}};
  j["drift"] = {{"cutoff_hz", s.drift.cutoff_hz}, {"magnitude_rad", s.drift.magnitude_rad}};
  j["thresholds"] = {{"v_s1_max", s.thresholds.v_s1_max}, {"d_s2_min", s.thresholds.d_s2_min}};
  j["compensator"] = {{"max_iter", s.max_iter}, {"conjugacy_tol_deg", s.conjugacy_tol_deg}};
  const auto& hw = s.hardware;
  j["hardware"] = {{"stage_speed_dps", hw.stage_speed_dps},
                   {"lcr_switch_s", hw.lcr_switch_s},
                   {"lcr_entries", hw.lcr_entries},
                   {"lcr_wrap_gap_rad", hw.lcr_wrap_gap_rad},
                   {"lcr_gap_center_rad", hw.lcr_gap_center_rad},
                   {"lcr_axis_offset_deg", hw.lcr_axis_offset_deg},
                   {"noise_sigma0", hw.noise_sigma0},
                   {"reference_power_dbm", hw.reference_power_dbm},
                   {"launch_dbm", hw.launch_dbm},
                   {"amp_gain_db", hw.amp_gain_db},
                   {"floor_dbm", hw.floor_dbm},
                   {"header",
                    {{"header_duration_s", hw.header.header_duration},
                     {"repetition_hz", hw.header.repetition_hz},
                     {"lcr_settle_s", hw.header.lcr_settle},
                     {"measure_window_s", hw.header.measure_window}}}};
  const auto& q = s.quantum;
  j["quantum"] = {{"enabled", q.enabled},
                  {"cc_rate_cps", q.cc_rate_cps},
                  {"car", q.car},
                  {"source_visibility", q.source_visibility},
                  {"dwell_s", q.dwell_s},
                  {"peak_width_s", q.peak_width_s},
                  {"payload_state", q.payload_state}};
  return j.dump(2);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_text(ss.str());
}

}  // namespace qwnpol

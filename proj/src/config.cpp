#include "rflect/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rflect/error.hpp"
#include "rflect/units.hpp"

namespace rflect {

namespace {

using nlohmann::json;

// View of one JSON object that remembers which keys were read, so that
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, key_path(key));
  }

  void positive(const std::string& key, double& out) {
    number(key, out);
    if (has(key) && !(out > 0.0)) throw ConfigError(key_path(key), "must be positive");
  }

  void non_negative(const std::string& key, double& out) {
    number(key, out);
    if (has(key) && !(out >= 0.0)) throw ConfigError(key_path(key), "must be >= 0");
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(key_path(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(key_path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) out = as_numbers(*v, key_path(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError(key_path(key), "unknown key");
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
    return d;
  }

  static std::vector<double> as_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", what + " is not valid JSON: " + e.what());
  }
}

// Re-raise model invariant violations as configuration errors at `path`.
template <class Fn>
void checked(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

Interpolation parse_interpolation(const json& v, const std::string& path) {
  if (v == "cubic") return Interpolation::cubic;
  if (v == "linear") return Interpolation::linear;
  throw ConfigError(path, "expected \"cubic\" or \"linear\"");
}

GridAxis parse_axis(Section& parent, const std::string& key, GridAxis axis) {
  const json* v = parent.find(key);
  if (!v) return axis;
  Section s(*v, parent.key_path(key));
  s.number("start", axis.start);
  s.number("stop", axis.stop);
  s.count("count", axis.count);
  s.finish();
  if (axis.count == 0) throw ConfigError(s.key_path("count"), "must be >= 1");
  return axis;
}

// Either an explicit list or {"start", "stop", "step"}.
std::vector<double> parse_grid(const json& v, const std::string& path) {
  if (v.is_array()) return Section::as_numbers(v, path);
  Section s(v, path);
  double start = 0.0, stop = 0.0, step = 0.0;
  for (const char* key : {"start", "stop", "step"})
    if (!s.has(key)) throw ConfigError(s.key_path(key), "required");
  s.number("start", start);
  s.number("stop", stop);
  s.positive("step", step);
  s.finish();
  std::vector<double> grid;
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  for (long long k = 0; k <= n; ++k) grid.push_back(start + step * static_cast<double>(k));
  return grid;
}

void parse_circuit(Section& s, const std::filesystem::path& base_dir, TankCircuit& tank) {
  Interpolation order = Interpolation::cubic;
  if (const json* v = s.find("interpolation")) order = parse_interpolation(*v, s.key_path("interpolation"));
  const bool custom_curve = s.has("varactor");
  if (const json* v = s.find("varactor")) {
    const std::string path = s.key_path("varactor");
    if (v->is_string()) {
      std::filesystem::path file = v->get<std::string>();
      if (file.is_relative()) file = base_dir / file;
      if (!std::filesystem::exists(file)) throw ConfigError(path, "file not found: " + file.string());
      tank.varactor = VaractorCurve::load_csv(file, order);
    } else {
      Section t(*v, path);
      std::vector<double> volts, farads;
      if (!t.has("V_S_V") || !t.has("C_F")) throw ConfigError(path, "needs V_S_V and C_F arrays");
      t.numbers("V_S_V", volts);
      t.numbers("C_F", farads);
      t.finish();
      if (volts.size() != farads.size() || volts.size() < 2)
        throw ConfigError(path, "V_S_V and C_F must have the same length >= 2");
      checked(path, [&] { tank.varactor = VaractorCurve(volts, farads, order); });
    }
  } else if (order != Interpolation::cubic) {
    const auto v = tank.varactor.voltages();
    const auto c = tank.varactor.capacitances();
    tank.varactor = VaractorCurve({v.begin(), v.end()}, {c.begin(), c.end()}, order);
  }
  s.positive("inductance_H", tank.inductance);
  s.non_negative("parasitic_capacitance_F", tank.parasitic_capacitance);
  s.positive("device_resistance_ohm", tank.device_resistance);
  s.positive("line_impedance_ohm", tank.line_impedance);

  double calibration_v_s = 6.8;
  s.number("match_calibration_V_S_V", calibration_v_s);
  const json* loss = s.find("loss_resistance_ohm");
  if (loss && !loss->is_string()) {
    tank.loss_resistance = Section::as_number(*loss, s.key_path("loss_resistance_ohm"));
    if (!(tank.loss_resistance > 0.0))
      throw ConfigError(s.key_path("loss_resistance_ohm"), "must be positive");
  } else {
    if (loss && *loss != "auto")
      throw ConfigError(s.key_path("loss_resistance_ohm"), "expected a number or \"auto\"");
    // Re-derive the matching loss for whatever tank was configured.
    const bool default_tank = !custom_curve && !s.has("inductance_H") &&
                              !s.has("parasitic_capacitance_F") && !s.has("device_resistance_ohm") &&
                              !s.has("line_impedance_ohm") && !s.has("match_calibration_V_S_V");
    if (!default_tank) {
      tank.loss_resistance = std::numeric_limits<double>::infinity();
      checked(s.key_path("loss_resistance_ohm"), [&] { tank = tank.matched_at(calibration_v_s); });
    }
  }
  s.finish();
  checked(s.key_path(""), [&] { tank.validate(); });
}

void parse_squid(Section& s, ChainState& chain, bool& kappa_given) {
  auto& m = chain.squid;
  s.positive("V_pp_V", m.v_pp);
  s.number("flux_offset_Wb", m.flux_offset);
  s.number("power_gain_dB", m.power_gain_db);
  s.positive("T_P_K", m.postamp_temperature);
  kappa_given = s.has("kappa_Wb_per_rtW");
  s.positive("kappa_Wb_per_rtW", m.kappa);
  s.number("linear_fraction", m.linear_fraction);
  s.positive("T_N0_K", m.base_noise_temperature);
  s.positive("noise_exponent", m.noise_exponent);
  s.numbers("harmonics", m.harmonics);
  s.number("I_SQ_A", m.bias_current);
  s.number("I_FL_A", m.flux_bias_current);
  s.number("port1_to_squid_offset_dB", chain.drive.port1_to_squid_db);
  s.number("post_chain_gain_dB", chain.drive.post_chain_gain_db);
  s.number("saturation_P1_dBm", chain.drive.saturation_p1_dbm);
  s.finish();
}

void parse_dot(Section& s, DotModel& dot) {
  s.numbers("peak_positions_V", dot.peak_positions);
  s.positive("G_max_S", dot.peak_conductance);
  s.number("lever_arm", dot.lever_arm);
  s.positive("charging_energy_eV", dot.charging_energy);
  s.positive("T_e_K", dot.electron_temperature);
  s.number("bias_asymmetry", dot.bias_asymmetry);
  if (s.has("peak_spacing_V")) {
    double spacing = 0.0;
    s.positive("peak_spacing_V", spacing);
    dot.peak_spacing = spacing;
  }
  s.finish();
  checked(s.key_path(""), [&] { dot.validate(); });
}

void parse_double_dot(Section& s, DoubleDotModel& dd) {
  if (s.has("tunnel_coupling_J") && s.has("tunnel_coupling_Hz"))
    throw ConfigError(s.key_path("tunnel_coupling_J"), "give tunnel_coupling_J or tunnel_coupling_Hz, not both");
  s.positive("tunnel_coupling_J", dd.tunnel_coupling);
  if (s.has("tunnel_coupling_Hz")) {
    double hz = 0.0;
    s.positive("tunnel_coupling_Hz", hz);
    dd.tunnel_coupling = phys::kPlanck * hz;
  }
  s.number("lever_arm", dd.lever_arm);
  s.finish();
  checked(s.key_path(""), [&] { dd.validate(); });
}

void parse_drive(Section& s, DriveSettings& d) {
  s.number("P1_dBm", d.p1_dbm);
  if (const json* v = s.find("f_C_hz")) {
    if (v->is_string()) {
      if (*v != "auto") throw ConfigError(s.key_path("f_C_hz"), "expected a number or \"auto\"");
      d.carrier_frequency.reset();
    } else {
      d.carrier_frequency = Section::as_number(*v, s.key_path("f_C_hz"));
      if (!(*d.carrier_frequency > 0.0)) throw ConfigError(s.key_path("f_C_hz"), "must be positive");
    }
  }
  s.number("V_S_V", d.v_s);
  s.number("V_L_V", d.v_l);
  s.number("V_B_V", d.v_b);
  if (const json* v = s.find("modulation")) {
    Section m(*v, s.key_path("modulation"));
    if (const json* t = m.find("target")) {
      if (*t == "varactor") {
        d.modulation.target = ModulationTarget::varactor;
      } else if (*t == "gate") {
        d.modulation.target = ModulationTarget::gate;
      } else {
        throw ConfigError(m.key_path("target"), "expected \"varactor\" or \"gate\"");
      }
    }
    m.positive("f_M_hz", d.modulation.frequency);
    m.non_negative("amplitude_Vrms", d.modulation.amplitude);
    m.finish();
  }
  s.number("port1_to_tank_dB", d.port1_to_tank_db);
  s.number("tank_to_squid_dB", d.tank_to_squid_db);
  if (const json* v = s.find("lo_phase_rad")) d.lo_phase = Section::as_number(*v, s.key_path("lo_phase_rad"));
  if (const json* v = s.find("match_window_hz")) {
    const auto w = Section::as_numbers(*v, s.key_path("match_window_hz"));
    if (w.size() != 2 || !(w[0] > 0.0 && w[0] < w[1]))
      throw ConfigError(s.key_path("match_window_hz"), "expected [f_lo, f_hi] with 0 < f_lo < f_hi");
    d.match_f_lo = w[0];
    d.match_f_hi = w[1];
  }
  s.finish();
}

void parse_analysis(Section& s, AnalysisSettings& a) {
  s.positive("rbw_hz", a.rbw);
  s.positive("span_hz", a.span);
  s.seed("seed", a.seed);
  s.boolean("noiseless", a.noiseless);
  s.count("guard_bins", a.guard_bins);
  s.non_negative("flank_slope_floor_S_per_V", a.flank_slope_floor);
  std::size_t threads = a.threads;
  s.count("threads", threads);
  a.threads = static_cast<unsigned>(threads);
  s.finish();
}

void parse_match(Section& s, MatchSettings& m) {
  s.numbers("V_S_V", m.v_s);
  s.positive("f_lo_hz", m.f_lo);
  s.positive("f_hi_hz", m.f_hi);
  s.count("points", m.points);
  s.finish();
  if (m.v_s.empty()) throw ConfigError(s.key_path("V_S_V"), "at least one V_S is required");
  if (m.points == 0) throw ConfigError(s.key_path("points"), "must be >= 1");
  if (m.f_hi < m.f_lo) throw ConfigError(s.key_path("f_hi_hz"), "must be >= f_lo_hz");
  if (m.f_hi == m.f_lo && m.points != 1)
    throw ConfigError(s.key_path("points"), "a single frequency needs points = 1");
}

void parse_readout(Section& s, ReadoutSettings& r) {
  if (const json* v = s.find("P1_grid_dBm")) r.p1_grid = parse_grid(*v, s.key_path("P1_grid_dBm"));
  if (const json* v = s.find("S_C_anchors")) {
    const std::string path = s.key_path("S_C_anchors");
    if (!v->is_array()) throw ConfigError(path, "expected [[P1_dBm, S_C_F_per_rtHz], ...]");
    std::vector<ScAnchor> anchors;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto pair = Section::as_numbers((*v)[i], path + "[" + std::to_string(i) + "]");
      if (pair.size() != 2) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a pair");
      anchors.push_back({pair[0], pair[1]});
    }
    checked(path, [&] { r.curve = ScCurve(std::move(anchors)); });
  }
  s.number("ref_P1_dBm", r.v0_map.ref_p1_dbm);
  s.positive("ref_V0_Vrms", r.v0_map.ref_v0);
  s.positive("electrode_scale", r.v0_map.electrode_scale);
  s.boolean("closed_form", r.closed_form);
  s.finish();
}

void parse_stability(Section& s, StabilitySettings& st) {
  st.v_l = parse_axis(s, "V_L_V", st.v_l);
  st.v_b = parse_axis(s, "V_B_V", st.v_b);
  s.finish();
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Config parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  const json root = parse_json(json_text, "configuration");
  Config cfg;
  Section top(root, "");
  bool kappa_given = false;
  if (const json* v = top.find("circuit")) {
    Section s(*v, "circuit");
    parse_circuit(s, base_dir, cfg.chain.circuit);
  }
  if (const json* v = top.find("squid")) {
    Section s(*v, "squid");
    parse_squid(s, cfg.chain, kappa_given);
  }
  if (const json* v = top.find("dot")) {
    Section s(*v, "dot");
    parse_dot(s, cfg.chain.dot);
  }
  if (const json* v = top.find("double_dot")) {
    Section s(*v, "double_dot");
    parse_double_dot(s, cfg.chain.double_dot);
  }
  const bool v_l_given = top.has("drive") && root["drive"].is_object() && root["drive"].contains("V_L_V");
  if (const json* v = top.find("drive")) {
    Section s(*v, "drive");
    parse_drive(s, cfg.chain.drive);
  }
  if (const json* v = top.find("analysis")) {
    Section s(*v, "analysis");
    parse_analysis(s, cfg.chain.analysis);
  }
  if (const json* v = top.find("match")) {
    Section s(*v, "match");
    parse_match(s, cfg.match);
  }
  if (const json* v = top.find("readout")) {
    Section s(*v, "readout");
    parse_readout(s, cfg.readout);
  }
  if (const json* v = top.find("stability")) {
    Section s(*v, "stability");
    parse_stability(s, cfg.stability);
  }
  top.finish();

  if (!v_l_given)
    cfg.chain.drive.v_l = cfg.chain.dot.peak_positions.front() - 0.6585 * cfg.chain.dot.thermal_width();
  if (!kappa_given) cfg.chain.calibrate_kappa();
  checked("squid", [&] { cfg.chain.squid.validate(); });
  checked("drive.modulation", [&] { cfg.chain.drive.modulation.validate(); });
  checked("", [&] { cfg.chain.validate(); });
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path), path.parent_path());
}

std::vector<SweepPlan> parse_protocol(const std::string& json_text, std::uint64_t default_seed) {
  const json root = parse_json(json_text, "protocol");
  Section top(root, "");
  const json* passes = top.find("passes");
  top.finish();
  if (!passes || !passes->is_array()) throw ConfigError("passes", "expected an array of passes");
  std::vector<SweepPlan> plans;
  for (std::size_t k = 0; k < passes->size(); ++k) {
    const std::string path = "passes[" + std::to_string(k) + "]";
    Section s((*passes)[k], path);
    SweepPlan plan;
    plan.seed = default_seed;
    plan.label = "pass " + std::to_string(k);
    if (const json* v = s.find("label")) {
      if (!v->is_string()) throw ConfigError(s.key_path("label"), "expected a string");
      plan.label = v->get<std::string>();
    }
    if (const json* v = s.find("objective")) {
      const auto o = v->is_string() ? parse_objective(v->get<std::string>()) : std::nullopt;
      if (!o) throw ConfigError(s.key_path("objective"), "expected \"S_C\" or \"S_Q\"");
      plan.objective = *o;
    }
    s.boolean("rematch_carrier", plan.rematch_carrier);
    s.seed("seed", plan.seed);
    if (s.has("modulation_frequency_hz")) {
      double f = 0.0;
      s.positive("modulation_frequency_hz", f);
      plan.modulation_frequency = f;
    }
    const json* sweep = s.find("sweep");
    s.finish();
    if (!sweep || !sweep->is_array() || sweep->empty())
      throw ConfigError(s.key_path("sweep"), "expected a non-empty array of axes");
    for (std::size_t i = 0; i < sweep->size(); ++i) {
      const std::string apath = s.key_path("sweep") + "[" + std::to_string(i) + "]";
      const json& axis_json = (*sweep)[i];
      if (!axis_json.is_object()) throw ConfigError(apath, "expected an object");
      SweepAxis axis;
      for (const auto& [key, value] : axis_json.items()) {
        if (key == "parameter") {
          const auto p = value.is_string() ? parse_sweep_parameter(value.get<std::string>()) : std::nullopt;
          if (!p) throw ConfigError(apath + ".parameter", "expected V_L, V_S, P1, V_M or dV_L");
          axis.parameter = *p;
        } else if (key == "grid") {
          axis.grid = parse_grid(value, apath + ".grid");
        } else {
          throw ConfigError(apath + "." + key, "unknown key");
        }
      }
      if (!axis_json.contains("parameter")) throw ConfigError(apath + ".parameter", "required");
      if (!axis_json.contains("grid")) throw ConfigError(apath + ".grid", "required");
      plan.axes.push_back(std::move(axis));
    }
    try {
      plan.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(path + ".sweep", e.what());
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<SweepPlan> load_protocol(const std::filesystem::path& path, std::uint64_t default_seed) {
  return parse_protocol(read_text_file(path), default_seed);
}

}  // namespace rflect

#include "rflect/chain.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rflect/error.hpp"
#include "rflect/numerics.hpp"
#include "rflect/units.hpp"

namespace rflect {

namespace {

constexpr std::uint64_t kSpectrumSalt = 0x5bd1e995u;

}  // namespace

ChainState ChainState::defaults() {
  ChainState state;
  state.calibrate_kappa();
  // Steepest point on the low-voltage flank of the first Coulomb peak.
  state.drive.v_l = state.dot.peak_positions.front() - 0.6585 * state.dot.thermal_width();
  return state;
}

void ChainState::calibrate_kappa() {
  squid.kappa = SquidModel::kappa_for_saturation(
      dbm_to_watts(drive.saturation_p1_dbm + drive.port1_to_squid_db), squid.flux_quantum);
}

void ChainState::validate() const {
  circuit.validate();
  squid.validate();
  dot.validate();
  double_dot.validate();
  drive.modulation.validate();
  if (!circuit.varactor.contains(drive.v_s))
    throw ConfigError("drive.V_S", "outside the varactor curve domain");
  if (!(drive.match_f_lo > 0.0 && drive.match_f_lo < drive.match_f_hi))
    throw ConfigError("drive.match_window_hz", "need 0 < f_lo < f_hi");
  if (drive.carrier_frequency && !(*drive.carrier_frequency > 0.0))
    throw ConfigError("drive.f_C_hz", "carrier frequency must be positive");
  for (double db : {drive.p1_dbm, drive.port1_to_tank_db, drive.tank_to_squid_db,
                    drive.port1_to_squid_db, drive.post_chain_gain_db, drive.saturation_p1_dbm})
    if (!std::isfinite(db)) throw ConfigError("drive", "power levels and couplings must be finite");
  if (!(analysis.rbw > 0.0)) throw ConfigError("analysis.rbw_hz", "must be positive");
  if (!(analysis.span > 0.0)) throw ConfigError("analysis.span_hz", "must be positive");
  const double f_m = drive.modulation.frequency;
  if (analysis.rbw > f_m / 10.0)
    throw ConfigError("analysis.rbw_hz", "sidebands unresolvable: rbw must be <= f_M / 10");
  if (f_m + static_cast<double>(analysis.guard_bins + 1) * analysis.rbw > 0.5 * analysis.span)
    throw ConfigError("analysis.span_hz", "span too narrow to contain both sidebands");
  if (!(analysis.flank_slope_floor >= 0.0))
    throw ConfigError("analysis.flank_slope_floor_S_per_V", "must be >= 0");
}

double ChainResponse::expected_snr_db(double rbw) const {
  return power_ratio_to_db(sideband_power / (noise_density * rbw));
}

TankCircuit loaded_tank(const ChainState& state) {
  if (state.drive.modulation.target == ModulationTarget::gate)
    return state.circuit.with_device_conductance(
        conductance(state.dot, state.drive.v_l, state.drive.v_b));
  return state.circuit;
}

double carrier_frequency(const ChainState& state, bool* at_boundary) {
  if (at_boundary) *at_boundary = false;
  if (state.drive.carrier_frequency) return *state.drive.carrier_frequency;
  const auto match = find_best_match(loaded_tank(state), state.drive.v_s, state.drive.match_f_lo,
                                     state.drive.match_f_hi);
  if (at_boundary) *at_boundary = match.at_boundary;
  return match.frequency;
}

double conductance_modulation(const DotModel& dot, double v_l, double v_b, double dv_l) {
  if (!(dv_l >= 0.0)) throw DomainError("gate modulation amplitude must be >= 0");
  if (dv_l == 0.0) return 0.0;
  constexpr int n = 256;
  double b1 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = std::sin(2.0 * std::numbers::pi * k / n);
    b1 += conductance(dot, v_l + std::numbers::sqrt2 * dv_l * s, v_b) * s;
  }
  b1 *= 2.0 / n;
  return std::abs(b1) / std::numbers::sqrt2;
}

ChainResponse evaluate_chain(const ChainState& state) {
  const auto& drive = state.drive;
  ChainResponse r;
  r.tank = loaded_tank(state);
  r.carrier_frequency = carrier_frequency(state, &r.match_at_boundary);
  r.gamma = reflection_coefficient(r.tank, drive.v_s, r.carrier_frequency);
  const auto slopes = reflection_slopes(r.tank, drive.v_s, r.carrier_frequency);
  if (drive.modulation.target == ModulationTarget::varactor) {
    r.delta_c = capacitance_modulation(r.tank, drive.v_s, drive.modulation.amplitude);
    r.delta_x = *r.delta_c;
    r.gamma_slope = slopes.d_capacitance;
  } else {
    r.delta_x = conductance_modulation(state.dot, drive.v_l, drive.v_b, drive.modulation.amplitude);
    r.delta_q = gate_charge_modulation(state.dot, drive.modulation.amplitude, drive.v_l);
    r.gamma_slope = slopes.d_conductance;
  }
  r.v0 = v0_from_power(drive.p1_dbm);
  r.p_incident = dbm_to_watts(drive.p1_dbm + drive.port1_to_tank_db);
  r.p_squid = dbm_to_watts(drive.p1_dbm + drive.port1_to_squid_db);
  r.regime = classify_regime(state.squid, r.p_squid);
  r.compression = compression_factor(state.squid, r.p_squid);
  r.t_n = noise_vs_power(state.squid, r.p_squid);
  r.chain_gain = db_to_power_ratio(state.squid.power_gain_db + drive.post_chain_gain_db);

  const double to_analyzer = r.p_incident * db_to_power_ratio(drive.tank_to_squid_db) *
                             r.compression * r.compression * r.chain_gain;
  r.carrier_power = to_analyzer * std::norm(r.gamma);
  r.sideband_power = to_analyzer * std::norm(r.gamma_slope) * r.delta_x * r.delta_x / 2.0;
  r.noise_density = phys::kBoltzmann * r.t_n * r.chain_gain;
  return r;
}

Spectrum synthesize_spectrum(const ChainState& state, std::uint64_t seed) {
  return synthesize_spectrum(state, evaluate_chain(state), seed);
}

Spectrum synthesize_spectrum(const ChainState& state, const ChainResponse& response,
                             std::uint64_t seed) {
  state.validate();
  const auto& an = state.analysis;
  const double f_c = response.carrier_frequency;
  const double f_m = state.drive.modulation.frequency;
  const auto half = static_cast<std::size_t>(std::llround(0.5 * an.span / an.rbw));

  Spectrum s;
  s.rbw = an.rbw;
  s.f_step = an.rbw;
  s.f_start = f_c - static_cast<double>(half) * an.rbw;
  const std::size_t n = 2 * half + 1;
  const std::size_t carrier_bin = half;
  const auto offset = static_cast<std::size_t>(std::llround(f_m / an.rbw));

  std::vector<double> line(n, 0.0);
  line[carrier_bin] += response.carrier_power;
  line[carrier_bin - offset] += response.sideband_power;
  line[carrier_bin + offset] += response.sideband_power;

  const double p_noise = response.noise_density * an.rbw;
  s.powers_dbm.resize(n);
  if (an.noiseless) {
    for (std::size_t k = 0; k < n; ++k) s.powers_dbm[k] = watts_to_dbm(line[k] + p_noise);
  } else {
    NoiseStream rng(mix_seed(seed, kSpectrumSalt));
    const double sigma = std::sqrt(0.5 * p_noise);
    for (std::size_t k = 0; k < n; ++k) {
      const double re = std::sqrt(line[k]) + sigma * rng.normal();
      const double im = sigma * rng.normal();
      s.powers_dbm[k] = watts_to_dbm(re * re + im * im);
    }
  }

  s.set_meta("f_carrier_hz", f_c);
  s.set_meta("f_mod_hz", f_m);
  s.set_meta("P1_dBm", state.drive.p1_dbm);
  s.metadata["seed"] = std::to_string(seed);
  s.metadata["noise_statistics"] = an.noiseless ? "none" : "exponential";
  s.metadata["modulation_target"] =
      state.drive.modulation.target == ModulationTarget::varactor ? "varactor" : "gate";
  if (response.delta_c) s.set_meta("delta_C_F", *response.delta_c);
  if (response.delta_q) s.set_meta("delta_Q_C", *response.delta_q);
  s.set_meta("V0_vrms", response.v0);
  s.set_meta("T_N_K", response.t_n);
  s.metadata["regime"] = std::string(to_string(response.regime));
  return s;
}

ChainMeasurement measure_chain(const ChainState& state, std::uint64_t seed) {
  ChainMeasurement m;
  m.response = evaluate_chain(state);
  const Spectrum s = synthesize_spectrum(state, m.response, seed);
  m.snr = measure_sidebands(s, m.response.carrier_frequency, state.drive.modulation.frequency,
                            state.analysis.guard_bins);
  m.sensitivity = sensitivities(m.snr, s.rbw, m.response.delta_c, m.response.delta_q,
                                m.response.v0);
  return m;
}

StabilityMap stability_map(const ChainState& state, const GridAxis& v_l, const GridAxis& v_b) {
  const auto& drive = state.drive;
  StabilityMap map;
  map.grid = stability_grid(state.dot, v_l, v_b);
  if (drive.carrier_frequency) {
    map.carrier_frequency = *drive.carrier_frequency;
  } else {
    map.carrier_frequency =
        find_best_match(state.circuit, drive.v_s, drive.match_f_lo, drive.match_f_hi).frequency;
  }
  const double f = map.carrier_frequency;
  map.lo_phase = drive.lo_phase.value_or(
      std::arg(reflection_coefficient(state.circuit.with_device_conductance(0.0), drive.v_s, f)));

  const double p_squid = dbm_to_watts(drive.p1_dbm + drive.port1_to_squid_db);
  const double gain = db_to_power_ratio(drive.p1_dbm + drive.port1_to_tank_db +
                                        drive.tank_to_squid_db + state.squid.power_gain_db +
                                        drive.post_chain_gain_db) * 1e-3;
  const double amplitude = std::sqrt(2.0 * state.circuit.line_impedance * gain) *
                           std::abs(compression_factor(state.squid, p_squid));
  map.v_d.reserve(map.grid.size());
  for (const auto& p : map.grid) {
    const auto gamma =
        reflection_coefficient(state.circuit.with_device_conductance(p.g), drive.v_s, f);
    map.v_d.push_back(demodulate(amplitude * std::abs(gamma), std::arg(gamma), map.lo_phase));
  }
  return map;
}

}  // namespace rflect

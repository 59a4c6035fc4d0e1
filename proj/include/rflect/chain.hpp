#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "rflect/analysis.hpp"
#include "rflect/circuit.hpp"
#include "rflect/dot.hpp"
#include "rflect/spectrum.hpp"
#include "rflect/squid.hpp"

namespace rflect {

/// Operating point of the measurement. Couplings are in dB from port 1:
/// port1_to_tank sets the power incident on the tank, tank_to_squid the
/// loss between tank and amplifier input, and port1_to_squid the single
/// offset used for the amplifier's regime and noise.
struct DriveSettings {
  double p1_dbm = -31.0;
  std::optional<double> carrier_frequency;  // f_C; best match when empty
  double v_s = 6.8;
  double v_l = -0.358;
  double v_b = 0.0;
  ModulationSpec modulation{ModulationTarget::varactor, 3e3, 99e-6};
  double port1_to_tank_db = -20.0;
  double tank_to_squid_db = 0.0;
  double port1_to_squid_db = -101.0;
  double post_chain_gain_db = 0.0;
  std::optional<double> lo_phase;  // radians; defaults to arg Gamma in blockade
  double match_f_lo = 150e6;
  double match_f_hi = 250e6;
  // Drive power placing the amplifier exactly at its saturation onset.
  double saturation_p1_dbm = -21.0;
};

struct AnalysisSettings {
  double rbw = 1.0;     // Hz, also the bin width
  double span = 10e3;   // Hz, centred on f_C
  std::uint64_t seed = 0;
  bool noiseless = false;  // flat mean floor instead of random bins
  std::size_t guard_bins = 3;
  double flank_slope_floor = 1e-6;  // |dG/dV_L| warning threshold, S/V
  unsigned threads = 0;
};

struct ChainState {
  TankCircuit circuit = TankCircuit::calibrated_default();
  SquidModel squid;
  DotModel dot = DotModel::placeholder();
  DoubleDotModel double_dot = DoubleDotModel::singlet_triplet_default();
  DriveSettings drive;
  AnalysisSettings analysis;

  /// Defaults with kappa calibrated from the drive's saturation onset.
  static ChainState defaults();
  void calibrate_kappa();
  void validate() const;
};

/// Deterministic quantities of the chain at its current operating point.
/// Powers are in watts; carrier/sideband/noise refer to the analyzer input.
struct ChainResponse {
  TankCircuit tank;  // with the device conductance in place
  double carrier_frequency = 0.0;
  bool match_at_boundary = false;
  std::complex<double> gamma;
  std::complex<double> gamma_slope;  // dGamma/dC or dGamma/dG
  double delta_x = 0.0;              // rms modulation of C or G
  std::optional<double> delta_c;     // F rms
  std::optional<double> delta_q;     // C rms
  double v0 = 0.0;
  double p_incident = 0.0;
  double p_squid = 0.0;  // amplifier input power for regime and noise
  Regime regime = Regime::linear;
  double compression = 1.0;
  double t_n = 0.0;
  double chain_gain = 1.0;
  double carrier_power = 0.0;
  double sideband_power = 0.0;  // each sideband
  double noise_density = 0.0;   // W/Hz

  double expected_snr_db(double rbw) const;
};

/// Tank with the device branch set by the modulation target: the dot's
/// conductance for gate modulation, the circuit's own resistor otherwise.
TankCircuit loaded_tank(const ChainState& state);
double carrier_frequency(const ChainState& state, bool* at_boundary = nullptr);

/// rms first-harmonic conductance swing for an rms gate modulation dV_L.
double conductance_modulation(const DotModel& dot, double v_l, double v_b, double dv_l);

ChainResponse evaluate_chain(const ChainState& state);

/// Carrier on the centre bin, sidebands at f_C +- f_M, white floor. Random
/// bins are chi-squared with two degrees of freedom; lines add coherently
/// to the complex noise in their bin.
Spectrum synthesize_spectrum(const ChainState& state, std::uint64_t seed);
Spectrum synthesize_spectrum(const ChainState& state, const ChainResponse& response,
                             std::uint64_t seed);

struct ChainMeasurement {
  ChainResponse response;
  SidebandPair snr;
  SensitivityResult sensitivity;
};

/// Synthesize one spectrum and analyze its sidebands.
ChainMeasurement measure_chain(const ChainState& state, std::uint64_t seed);

struct StabilityMap {
  std::vector<StabilityPoint> grid;
  std::vector<double> v_d;
  double carrier_frequency = 0.0;
  double lo_phase = 0.0;
};

/// Coulomb-diamond scan with the homodyne output V_D at every point.
StabilityMap stability_map(const ChainState& state, const GridAxis& v_l, const GridAxis& v_b);

}  // namespace rflect

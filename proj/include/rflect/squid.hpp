#pragma once

#include <string_view>
#include <vector>

#include "rflect/units.hpp"

namespace rflect {

enum class Regime { linear, compression, saturation };

std::string_view to_string(Regime r);

/// Phenomenological SQUID amplifier.
///
/// Flux amplitude from input power is dPhi = kappa sqrt(P_IN). The regime
/// boundaries are dPhi = linear_fraction * Phi0 (linear -> compression) and
/// dPhi = Phi0 / 4 (compression -> saturation).
struct SquidModel {
  double flux_quantum = phys::kFluxQuantum;
  double v_pp = 20e-6;           // peak-to-peak V_OUT swing, V
  double flux_offset = 0.0;      // set by I_FL, Wb
  double power_gain_db = 11.7;
  double postamp_temperature = 3.7;   // T_P, K
  double kappa = 0.0;                 // Wb / sqrt(W)
  double linear_fraction = 0.25 * 0.31622776601683794;  // (1/4) 10^(-10/20)
  double base_noise_temperature = 0.49;                 // T_N0, K
  double noise_exponent = 2.0;
  // Relative amplitudes of the 2nd, 3rd, ... flux harmonics of V_OUT.
  std::vector<double> harmonics;
  // Operating-point labels only; not model inputs.
  double bias_current = 13.1e-6;      // I_SQ
  double flux_bias_current = -5.6e-6; // I_FL

  /// kappa chosen so `saturation_input_power_w` puts dPhi exactly at Phi0/4.
  static double kappa_for_saturation(double saturation_input_power_w,
                                     double flux_quantum = phys::kFluxQuantum);

  void validate() const;
};

struct NoiseReport {
  double t_n = 0.0;            // system noise temperature, K
  double t_n2 = 0.0;           // postamplifier contribution, K
  double p_n = 0.0;            // input-referred noise power in the bandwidth, W
  double quantum_limit = 0.0;  // K
  double ratio_to_ql = 0.0;
};

struct RegimeThresholds {
  double linear_to_compression_w = 0.0;
  double compression_to_saturation_w = 0.0;
};

double transfer_voltage(const SquidModel& m, double flux);
/// V_OUT at the flux operating point plus an excursion.
double output_voltage(const SquidModel& m, double delta_flux);

/// Amplifier gain in dB from |S32|^2 with and without the amplifier.
double gain_from_transmission(double s32_present_db, double s32_absent_db);
/// Input-referred noise power P_IN * P2(noise) / P2(signal).
double noise_power_referred(double p_in, double p2_signal, double p2_noise);
double noise_temperature(double p_n, double delta_f);
double postamp_contribution(const SquidModel& m);
double quantum_limit(double f_c);

double flux_amplitude(const SquidModel& m, double p_in);
Regime classify_regime(const SquidModel& m, double p_in);
RegimeThresholds regime_thresholds(const SquidModel& m);
double noise_vs_power(const SquidModel& m, double p_in);

/// Describing-function gain 2 J1(a) / a of the sinusoidal transfer function
/// for a flux swing of amplitude a = 2 pi dPhi / Phi0; 1 in the linear regime.
double compression_factor(const SquidModel& m, double p_in);

NoiseReport noise_report(const SquidModel& m, double p_in, double f_c, double delta_f);

}  // namespace rflect

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rflect/spectrum.hpp"

namespace rflect {

struct SnrOptions {
  // Noise bins are taken within this distance of the sideband; 0 = whole span.
  double window_half_width = 0.0;
  // Other lines (carrier, mirror sideband) whose neighbourhoods are excluded.
  std::vector<double> exclude_lines;
  std::size_t guard_bins = 3;
  std::size_t min_noise_bins = 20;
};

struct SnrMeasurement {
  double snr_db = 0.0;
  double delta_f = 0.0;
  double signal_dbm = 0.0;
  double floor_dbm = 0.0;
  std::size_t noise_bins = 0;
  bool flagged = false;  // sideband not above the floor
};

/// Sideband power (largest of the three bins around `f_sideband`) over the
/// median noise power. The median is rescaled by 1/ln 2 when the spectrum
/// declares noise_statistics=exponential, turning it into the mean floor.
SnrMeasurement measure_snr(const Spectrum& s, double f_sideband, const SnrOptions& options = {});

/// Both sidebands of a carrier, each measured against a noise window of
/// +-0.45 f_M that excludes the carrier and the mirror sideband.
struct SidebandPair {
  SnrMeasurement lower;
  SnrMeasurement upper;
  double snr_db = 0.0;  // mean of the two, in dB
  bool flagged = false;
};
SidebandPair measure_sidebands(const Spectrum& s, double f_carrier, double f_mod,
                               std::size_t guard_bins = 3);

/// S_C in F/sqrt(Hz).
double capacitance_sensitivity(double snr_db, double delta_f, double delta_c);
/// S_Q in e/sqrt(Hz) for an rms charge modulation given in coulombs.
double charge_sensitivity(double snr_db, double delta_f, double delta_q);
/// S_S in C/sqrt(Hz).
double oscillating_charge_sensitivity(double s_c, double v0);

/// Low-passed mixer output for a carrier of the given amplitude and phase.
double demodulate(double amplitude, double phase, double lo_phase);

/// rms device voltage assuming V0 scales with the drive amplitude.
double v0_from_power(double p1_dbm, double ref_p1_dbm = -29.0, double ref_v0 = 192e-6);

/// Relative sensitivity uncertainty from a +-0.5 dB floor-estimation error.
inline constexpr double kFloorUncertaintyDb = 0.5;
double sensitivity_uncertainty(double floor_uncertainty_db = kFloorUncertaintyDb);

struct SensitivityResult {
  double snr_db = 0.0;
  double delta_f = 0.0;
  std::optional<double> s_c;  // F/sqrt(Hz)
  std::optional<double> s_q;  // e/sqrt(Hz)
  std::optional<double> s_s;  // C/sqrt(Hz)
  double uncertainty = 0.0;
  bool flagged = false;
};

/// Sensitivities for whichever modulation amplitudes are known. S_S needs
/// both delta_c and v0.
SensitivityResult sensitivities(const SidebandPair& snr, double delta_f,
                                std::optional<double> delta_c, std::optional<double> delta_q,
                                std::optional<double> v0);

}  // namespace rflect

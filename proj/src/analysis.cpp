#include "rflect/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rflect/error.hpp"
#include "rflect/units.hpp"

namespace rflect {

namespace {

double bin_watts(const Spectrum& s, std::size_t k) { return dbm_to_watts(s.powers_dbm[k]); }

bool near_bin(std::size_t k, std::size_t centre, std::size_t guard) {
  return (k > centre ? k - centre : centre - k) <= guard;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

SnrMeasurement measure_snr(const Spectrum& s, double f_sideband, const SnrOptions& options) {
  s.validate();
  const std::size_t centre = s.nearest_bin(f_sideband);

  double peak = 0.0;
  const std::size_t lo = centre == 0 ? 0 : centre - 1;
  const std::size_t hi = std::min(centre + 1, s.size() - 1);
  for (std::size_t k = lo; k <= hi; ++k) peak = std::max(peak, bin_watts(s, k));

  std::vector<std::size_t> excluded;
  for (double f : options.exclude_lines)
    if (s.contains(f)) excluded.push_back(s.nearest_bin(f));

  std::vector<double> noise;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (options.window_half_width > 0.0 &&
        std::abs(s.frequency(k) - f_sideband) > options.window_half_width)
      continue;
    if (near_bin(k, centre, options.guard_bins)) continue;
    if (std::any_of(excluded.begin(), excluded.end(),
                    [&](std::size_t e) { return near_bin(k, e, options.guard_bins); }))
      continue;
    noise.push_back(bin_watts(s, k));
  }
  if (noise.size() < options.min_noise_bins)
    throw DomainError("measure_snr: only " + std::to_string(noise.size()) +
                      " noise bins available, need " + std::to_string(options.min_noise_bins));

  const std::size_t noise_bins = noise.size();
  double floor = median(std::move(noise));
  const auto stats = s.metadata.find("noise_statistics");
  if (stats != s.metadata.end() && stats->second == "exponential") floor /= std::numbers::ln2;

  SnrMeasurement m;
  m.delta_f = s.rbw;
  m.noise_bins = noise_bins;
  m.signal_dbm = watts_to_dbm(peak);
  m.floor_dbm = watts_to_dbm(floor);
  if (floor > 0.0) {
    m.snr_db = power_ratio_to_db(peak / floor);
  } else {
    m.snr_db = peak > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  m.flagged = !(m.snr_db > 0.0);
  return m;
}

SidebandPair measure_sidebands(const Spectrum& s, double f_carrier, double f_mod,
                               std::size_t guard_bins) {
  if (!(f_mod > 0.0)) throw DomainError("modulation frequency must be positive");
  SnrOptions opt;
  opt.window_half_width = 0.45 * f_mod;
  opt.guard_bins = guard_bins;
  SidebandPair pair;
  opt.exclude_lines = {f_carrier, f_carrier + f_mod};
  pair.lower = measure_snr(s, f_carrier - f_mod, opt);
  opt.exclude_lines = {f_carrier, f_carrier - f_mod};
  pair.upper = measure_snr(s, f_carrier + f_mod, opt);
  pair.snr_db = 0.5 * (pair.lower.snr_db + pair.upper.snr_db);
  pair.flagged = !(pair.snr_db > 0.0);
  return pair;
}

double capacitance_sensitivity(double snr_db, double delta_f, double delta_c) {
  if (!(delta_f > 0.0)) throw DomainError("capacitance_sensitivity: delta_f must be positive");
  if (!(delta_c > 0.0)) throw DomainError("capacitance_sensitivity: delta_C must be positive");
  return delta_c / std::sqrt(2.0 * delta_f) * std::pow(10.0, -snr_db / 20.0);
}

double charge_sensitivity(double snr_db, double delta_f, double delta_q) {
  if (!(delta_f > 0.0)) throw DomainError("charge_sensitivity: delta_f must be positive");
  if (!(delta_q > 0.0)) throw DomainError("charge_sensitivity: delta_Q must be positive");
  return delta_q / phys::kElementaryCharge / std::sqrt(2.0 * delta_f) *
         std::pow(10.0, -snr_db / 20.0);
}

double oscillating_charge_sensitivity(double s_c, double v0) {
  if (!(v0 > 0.0)) throw DomainError("oscillating_charge_sensitivity: V0 must be positive");
  return std::numbers::sqrt2 * v0 * s_c;
}

double demodulate(double amplitude, double phase, double lo_phase) {
  return amplitude * std::cos(phase - lo_phase);
}

double v0_from_power(double p1_dbm, double ref_p1_dbm, double ref_v0) {
  return ref_v0 * db_to_amplitude_ratio(p1_dbm - ref_p1_dbm);
}

double sensitivity_uncertainty(double floor_uncertainty_db) {
  return db_to_amplitude_ratio(floor_uncertainty_db) - 1.0;
}

SensitivityResult sensitivities(const SidebandPair& snr, double delta_f,
                                std::optional<double> delta_c, std::optional<double> delta_q,
                                std::optional<double> v0) {
  SensitivityResult r;
  r.snr_db = snr.snr_db;
  r.delta_f = delta_f;
  r.flagged = snr.flagged;
  r.uncertainty = sensitivity_uncertainty();
  if (delta_c && *delta_c > 0.0) {
    r.s_c = capacitance_sensitivity(snr.snr_db, delta_f, *delta_c);
    if (v0) r.s_s = oscillating_charge_sensitivity(*r.s_c, *v0);
  }
  if (delta_q && *delta_q > 0.0) r.s_q = charge_sensitivity(snr.snr_db, delta_f, *delta_q);
  return r;
}

}  // namespace rflect

#include "rflect/squid.hpp"

#include <cmath>
#include <numbers>

#include "rflect/error.hpp"

namespace rflect {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::linear: return "linear";
    case Regime::compression: return "compression";
    case Regime::saturation: return "saturation";
  }
  return "unknown";
}

double SquidModel::kappa_for_saturation(double saturation_input_power_w, double flux_quantum) {
  if (!(saturation_input_power_w > 0.0)) throw DomainError("saturation power must be positive");
  return 0.25 * flux_quantum / std::sqrt(saturation_input_power_w);
}

void SquidModel::validate() const {
  if (!(flux_quantum > 0.0)) throw DomainError("squid: flux quantum must be positive");
  if (!(v_pp > 0.0)) throw DomainError("squid: V_pp must be positive");
  if (!(linear_fraction > 0.0 && linear_fraction < 0.25))
    throw DomainError("squid: linear_fraction must be in (0, 0.25)");
  if (!(kappa > 0.0)) throw DomainError("squid: kappa must be positive");
  if (!(postamp_temperature > 0.0)) throw DomainError("squid: T_P must be positive");
  if (!(base_noise_temperature > 0.0)) throw DomainError("squid: T_N0 must be positive");
  if (!(noise_exponent > 0.0)) throw DomainError("squid: noise exponent must be positive");
  if (!std::isfinite(power_gain_db)) throw DomainError("squid: gain must be finite");
  if (base_noise_temperature < postamp_contribution(*this))
    throw DomainError("squid: T_N0 below the postamplifier contribution T_P / gain");
}

double transfer_voltage(const SquidModel& m, double flux) {
  const double phase = 2.0 * std::numbers::pi * flux / m.flux_quantum;
  double shape = std::sin(phase);
  for (std::size_t k = 0; k < m.harmonics.size(); ++k)
    shape += m.harmonics[k] * std::sin(static_cast<double>(k + 2) * phase);
  return 0.5 * m.v_pp * shape;
}

double output_voltage(const SquidModel& m, double delta_flux) {
  return transfer_voltage(m, m.flux_offset + delta_flux);
}

double gain_from_transmission(double s32_present_db, double s32_absent_db) {
  return s32_present_db - s32_absent_db;
}

double noise_power_referred(double p_in, double p2_signal, double p2_noise) {
  if (!(p_in > 0.0) || !(p2_signal > 0.0) || !(p2_noise > 0.0))
    throw DomainError("noise_power_referred: powers must be positive");
  return p_in * p2_noise / p2_signal;
}

double noise_temperature(double p_n, double delta_f) {
  if (!(delta_f > 0.0)) throw DomainError("noise_temperature: bandwidth must be positive");
  return p_n / (phys::kBoltzmann * delta_f);
}

double postamp_contribution(const SquidModel& m) {
  return m.postamp_temperature / db_to_power_ratio(m.power_gain_db);
}

double quantum_limit(double f_c) {
  if (!(f_c > 0.0)) throw DomainError("quantum_limit: frequency must be positive");
  return phys::kPlanck * f_c / (2.0 * phys::kBoltzmann);
}

double flux_amplitude(const SquidModel& m, double p_in) {
  if (!(p_in >= 0.0)) throw DomainError("input power must be >= 0");
  return m.kappa * std::sqrt(p_in);
}

Regime classify_regime(const SquidModel& m, double p_in) {
  const double dphi = flux_amplitude(m, p_in);
  if (dphi < m.linear_fraction * m.flux_quantum) return Regime::linear;
  if (dphi < 0.25 * m.flux_quantum) return Regime::compression;
  return Regime::saturation;
}

RegimeThresholds regime_thresholds(const SquidModel& m) {
  const auto power_for = [&](double dphi) { return std::pow(dphi / m.kappa, 2); };
  return {power_for(m.linear_fraction * m.flux_quantum), power_for(0.25 * m.flux_quantum)};
}

double noise_vs_power(const SquidModel& m, double p_in) {
  const double ratio = flux_amplitude(m, p_in) / (0.25 * m.flux_quantum);
  return m.base_noise_temperature * (1.0 + std::pow(ratio, m.noise_exponent));
}

double compression_factor(const SquidModel& m, double p_in) {
  if (classify_regime(m, p_in) == Regime::linear) return 1.0;
  const double a = 2.0 * std::numbers::pi * flux_amplitude(m, p_in) / m.flux_quantum;
  return 2.0 * std::cyl_bessel_j(1.0, a) / a;
}

NoiseReport noise_report(const SquidModel& m, double p_in, double f_c, double delta_f) {
  if (!(delta_f > 0.0)) throw DomainError("noise_report: bandwidth must be positive");
  NoiseReport r;
  r.t_n = noise_vs_power(m, p_in);
  r.t_n2 = postamp_contribution(m);
  r.p_n = phys::kBoltzmann * r.t_n * delta_f;
  r.quantum_limit = quantum_limit(f_c);
  r.ratio_to_ql = r.t_n / r.quantum_limit;
  return r;
}

}  // namespace rflect

#include "rflect/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>

#include "rflect/error.hpp"
#include "rflect/numerics.hpp"

namespace rflect {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Moments (second derivatives) of the not-a-knot cubic spline.
std::vector<double> spline_moments(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> h(n - 1);
  std::vector<double> slope(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    slope[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 3) {
    // The single parabola through three points has a constant second derivative.
    const double curvature = 2.0 * (slope[1] - slope[0]) / (x[2] - x[0]);
    std::fill(m.begin(), m.end(), curvature);
    return m;
  }

  // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} are eliminated with the
  // not-a-knot conditions (continuous third derivative at x_1 and x_{n-2}).
  const std::size_t rows = n - 2;
  std::vector<double> sub(rows), diag(rows), sup(rows), rhs(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const std::size_t i = k + 1;
    sub[k] = h[i - 1];
    diag[k] = 2.0 * (h[i - 1] + h[i]);
    sup[k] = h[i];
    rhs[k] = 6.0 * (slope[i] - slope[i - 1]);
  }
  const double h0 = h[0], h1 = h[1];
  diag[0] = (h0 + h1) * (h0 + 2.0 * h1) / h1;
  sup[0] = (h1 * h1 - h0 * h0) / h1;
  const double hp = h[n - 3], hl = h[n - 2];
  diag[rows - 1] = (hp + hl) * (2.0 * hp + hl) / hp;
  sub[rows - 1] = (hp * hp - hl * hl) / hp;

  // Thomas algorithm.
  for (std::size_t k = 1; k < rows; ++k) {
    const double w = sub[k] / diag[k - 1];
    diag[k] -= w * sup[k - 1];
    rhs[k] -= w * rhs[k - 1];
  }
  std::vector<double> sol(rows);
  sol[rows - 1] = rhs[rows - 1] / diag[rows - 1];
  for (std::size_t k = rows - 1; k-- > 0;) sol[k] = (rhs[k] - sup[k] * sol[k + 1]) / diag[k];

  for (std::size_t k = 0; k < rows; ++k) m[k + 1] = sol[k];
  m[0] = ((h0 + h1) * m[1] - h0 * m[2]) / h1;
  m[n - 1] = ((hl + hp) * m[n - 2] - hl * m[n - 3]) / hp;
  return m;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

VaractorCurve::VaractorCurve(std::vector<double> voltages, std::vector<double> capacitances,
                             Interpolation order)
    : voltages_(std::move(voltages)), capacitances_(std::move(capacitances)), order_(order) {
  if (voltages_.size() != capacitances_.size())
    throw DomainError("varactor curve: voltage and capacitance columns differ in length");
  if (voltages_.size() < 2) throw DomainError("varactor curve: need at least two samples");
  for (std::size_t i = 0; i < voltages_.size(); ++i) {
    if (!std::isfinite(voltages_[i]) || !std::isfinite(capacitances_[i]))
      throw DomainError("varactor curve: non-finite sample " + std::to_string(i));
    if (!(capacitances_[i] > 0.0))
      throw DomainError("varactor curve: capacitance must be positive at sample " +
                        std::to_string(i));
    if (i > 0 && !(voltages_[i] > voltages_[i - 1]))
      throw DomainError("varactor curve: V_S samples must be strictly increasing at sample " +
                        std::to_string(i));
  }
  if (order_ == Interpolation::cubic) second_derivs_ = spline_moments(voltages_, capacitances_);
}

VaractorCurve VaractorCurve::default_curve() {
  // Abrupt-junction shape C_off + A / sqrt(1 + V/phi), pinned at V_S = 6.8 V.
  constexpr double kInductance = 223e-9;
  constexpr double kMatchVoltage = 6.8;
  constexpr double kMatchFrequency = 196e6;
  constexpr double kSlope = 6.7e-18 / 99e-6;  // |dC/dV_S|, F/V
  constexpr double kBuiltIn = 0.7;            // junction potential, V

  const double c_total = 1.0 / (std::pow(kTwoPi * kMatchFrequency, 2) * kInductance);
  const double x = 1.0 + kMatchVoltage / kBuiltIn;
  const double amplitude = kSlope * 2.0 * kBuiltIn * std::pow(x, 1.5);
  const double offset = c_total - amplitude / std::sqrt(x);

  std::vector<double> v, c;
  for (int i = 0; i <= 120; ++i) {
    const double vs = 0.1 * i;
    v.push_back(vs);
    c.push_back(offset + amplitude / std::sqrt(1.0 + vs / kBuiltIn));
  }
  return VaractorCurve(std::move(v), std::move(c), Interpolation::cubic);
}

VaractorCurve VaractorCurve::from_csv(std::istream& in, Interpolation order) {
  std::vector<double> v, c;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      double probe = 0.0;
      std::istringstream first(text);
      if (first >> probe) throw ParseError(line_no, "varactor CSV: header line required");
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ParseError(line_no, "expected two comma-separated columns");
    try {
      std::size_t used = 0;
      const std::string a = trim(text.substr(0, comma));
      const std::string b = trim(text.substr(comma + 1));
      const double vs = std::stod(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      const double cap = std::stod(b, &used);
      if (used != b.size()) throw std::invalid_argument(b);
      v.push_back(vs);
      c.push_back(cap);
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "malformed number");
    }
  }
  if (!header_seen) throw ParseError(0, "varactor CSV: empty file");
  try {
    return VaractorCurve(std::move(v), std::move(c), order);
  } catch (const DomainError& e) {
    throw ParseError(0, e.what());
  }
}

VaractorCurve VaractorCurve::load_csv(const std::filesystem::path& path, Interpolation order) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open varactor curve " + path.string());
  return from_csv(in, order);
}

double VaractorCurve::capacitance(double v_s) const {
  if (!contains(v_s))
    throw DomainError("V_S = " + std::to_string(v_s) + " V outside varactor curve domain [" +
                      std::to_string(v_min()) + ", " + std::to_string(v_max()) + "]");
  auto upper = std::upper_bound(voltages_.begin(), voltages_.end(), v_s);
  std::size_t i = upper == voltages_.end() ? voltages_.size() - 2
                                           : static_cast<std::size_t>(upper - voltages_.begin()) - 1;
  i = std::min(i, voltages_.size() - 2);
  const double x0 = voltages_[i], x1 = voltages_[i + 1];
  const double y0 = capacitances_[i], y1 = capacitances_[i + 1];
  const double h = x1 - x0;
  if (order_ == Interpolation::linear) return y0 + (y1 - y0) * (v_s - x0) / h;
  const double m0 = second_derivs_[i], m1 = second_derivs_[i + 1];
  const double a = x1 - v_s, b = v_s - x0;
  return m0 * a * a * a / (6.0 * h) + m1 * b * b * b / (6.0 * h) + (y0 / h - m0 * h / 6.0) * a +
         (y1 / h - m1 * h / 6.0) * b;
}

TankCircuit TankCircuit::calibrated_default() { return TankCircuit{}.matched_at(6.8); }

TankCircuit TankCircuit::matched_at(double v_s) const {
  TankCircuit tank = *this;
  const double r_match = inductance / (line_impedance * total_capacitance(v_s));
  const double g_loss = 1.0 / r_match - 1.0 / device_resistance;
  if (!(g_loss > 0.0))
    throw DomainError("device resistance already below the matching resistance; no loss term can match");
  tank.loss_resistance = 1.0 / g_loss;
  return tank;
}

void TankCircuit::validate() const {
  if (!(inductance > 0.0)) throw DomainError("inductance must be positive");
  if (!(line_impedance > 0.0)) throw DomainError("line impedance must be positive");
  if (!(device_resistance > 0.0)) throw DomainError("device resistance must be positive");
  if (!(loss_resistance > 0.0)) throw DomainError("loss resistance must be positive");
  if (!(parasitic_capacitance >= 0.0)) throw DomainError("parasitic capacitance must be >= 0");
}

double TankCircuit::total_capacitance(double v_s) const {
  return varactor.capacitance(v_s) + parasitic_capacitance;
}

double TankCircuit::shunt_conductance() const {
  return 1.0 / device_resistance + 1.0 / loss_resistance;
}

TankCircuit TankCircuit::with_device_conductance(double g) const {
  if (!(g >= 0.0)) throw DomainError("device conductance must be >= 0");
  TankCircuit copy = *this;
  copy.device_resistance = g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity();
  return copy;
}

void ModulationSpec::validate() const {
  if (!(frequency > 0.0)) throw DomainError("modulation frequency must be positive");
  if (!(amplitude >= 0.0)) throw DomainError("modulation amplitude must be >= 0");
}

double resonant_frequency(const TankCircuit& circuit, double v_s) {
  return 1.0 / (kTwoPi * std::sqrt(circuit.inductance * circuit.total_capacitance(v_s)));
}

SlopeEstimate df0_dvs(const TankCircuit& circuit, double v_s, double step) {
  if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
  const auto& curve = circuit.varactor;
  if (!curve.contains(v_s)) circuit.varactor.capacitance(v_s);  // throws with the domain message
  const bool lo_ok = v_s - step >= curve.v_min();
  const bool hi_ok = v_s + step <= curve.v_max();
  if (lo_ok && hi_ok) {
    return {(resonant_frequency(circuit, v_s + step) - resonant_frequency(circuit, v_s - step)) /
                (2.0 * step),
            false};
  }
  if (hi_ok)
    return {(resonant_frequency(circuit, v_s + step) - resonant_frequency(circuit, v_s)) / step,
            true};
  if (lo_ok)
    return {(resonant_frequency(circuit, v_s) - resonant_frequency(circuit, v_s - step)) / step,
            true};
  throw DomainError("varactor curve narrower than the finite-difference step");
}

double capacitance_modulation_from_slope(double inductance, double f0, double df0_dvs,
                                         double v_m) {
  if (!(v_m >= 0.0)) throw DomainError("modulation amplitude must be >= 0");
  return v_m / (2.0 * std::numbers::pi * std::numbers::pi * inductance * f0 * f0 * f0) *
         std::abs(df0_dvs);
}

double capacitance_modulation(const TankCircuit& circuit, double v_s, double v_m, double step) {
  if (!(v_m >= 0.0)) throw DomainError("modulation amplitude must be >= 0");
  const double f0 = resonant_frequency(circuit, v_s);
  const SlopeEstimate slope = df0_dvs(circuit, v_s, step);
  return capacitance_modulation_from_slope(circuit.inductance, f0, slope.value, v_m);
}

std::complex<double> load_impedance(const TankCircuit& circuit, double v_s, double f) {
  if (!(f > 0.0)) throw DomainError("frequency must be positive");
  const double omega = kTwoPi * f;
  const std::complex<double> y_shunt(circuit.shunt_conductance(),
                                     omega * circuit.total_capacitance(v_s));
  return std::complex<double>(0.0, omega * circuit.inductance) + 1.0 / y_shunt;
}

std::complex<double> reflection_coefficient(const TankCircuit& circuit, double v_s, double f) {
  const std::complex<double> z = load_impedance(circuit, v_s, f);
  return (z - circuit.line_impedance) / (z + circuit.line_impedance);
}

ReflectionSlopes reflection_slopes(const TankCircuit& circuit, double v_s, double f) {
  if (!(f > 0.0)) throw DomainError("frequency must be positive");
  const double omega = kTwoPi * f;
  const std::complex<double> y_shunt(circuit.shunt_conductance(),
                                     omega * circuit.total_capacitance(v_s));
  const std::complex<double> z = std::complex<double>(0.0, omega * circuit.inductance) + 1.0 / y_shunt;
  const double z0 = circuit.line_impedance;
  const std::complex<double> dgamma_dz = 2.0 * z0 / ((z + z0) * (z + z0));
  const std::complex<double> dz_dy = -1.0 / (y_shunt * y_shunt);
  return {dgamma_dz * dz_dy * std::complex<double>(0.0, omega), dgamma_dz * dz_dy};
}

MatchResult find_best_match(const TankCircuit& circuit, double v_s, double f_lo, double f_hi,
                            const MatchOptions& options) {
  if (!(f_lo > 0.0) || !(f_lo < f_hi)) throw DomainError("find_best_match: need 0 < f_lo < f_hi");
  const std::size_t n = std::max<std::size_t>(options.coarse_points, 3);
  auto magnitude = [&](double f) { return std::abs(reflection_coefficient(circuit, v_s, f)); };
  auto depth = [](double mag) { return 20.0 * std::log10(std::max(mag, 1e-30)); };

  const double step = (f_hi - f_lo) / static_cast<double>(n - 1);
  std::size_t best = 0;
  double best_mag = magnitude(f_lo);
  for (std::size_t i = 1; i < n; ++i) {
    const double f = i + 1 == n ? f_hi : f_lo + step * static_cast<double>(i);
    const double mag = magnitude(f);
    if (mag < best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  if (best == 0 || best + 1 == n) {
    const double f = best == 0 ? f_lo : f_hi;
    return {f, depth(best_mag), true};
  }
  const double lo = f_lo + step * static_cast<double>(best - 1);
  const double hi = f_lo + step * static_cast<double>(best + 1);
  const double centre = f_lo + step * static_cast<double>(best);
  const MinimizeResult refined =
      golden_section_minimize(magnitude, lo, hi, options.rel_tol * centre);
  if (refined.value > best_mag) return {centre, depth(best_mag), false};
  return {refined.x, depth(refined.value), false};
}

}  // namespace rflect

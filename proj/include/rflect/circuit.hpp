#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace rflect {

enum class Interpolation { linear = 1, cubic = 3 };

/// Varactor capacitance C(V_S) tabulated at strictly increasing voltages.
///
/// Linear interpolation stays within the neighbouring samples. Cubic
/// interpolation is a not-a-knot spline, which reproduces any cubic
/// polynomial exactly; with fewer than four samples it degrades to the
/// interpolating polynomial through all of them.
class VaractorCurve {
 public:
  VaractorCurve(std::vector<double> voltages, std::vector<double> capacitances,
                Interpolation order = Interpolation::cubic);

  /// Built-in curve calibrated to f0(6.8 V) = 196 MHz with L = 223 nH and
  /// |dC/dV_S| = 6.7 aF / 99 uV at that point.
  static VaractorCurve default_curve();

  /// Two-column CSV (V_S in volts, C in farads) with a mandatory header line.
  static VaractorCurve from_csv(std::istream& in, Interpolation order = Interpolation::cubic);
  static VaractorCurve load_csv(const std::filesystem::path& path,
                                Interpolation order = Interpolation::cubic);

  /// Throws DomainError outside [v_min(), v_max()].
  double capacitance(double v_s) const;

  bool contains(double v_s) const { return v_s >= v_min() && v_s <= v_max(); }
  double v_min() const { return voltages_.front(); }
  double v_max() const { return voltages_.back(); }
  Interpolation order() const { return order_; }
  std::span<const double> voltages() const { return voltages_; }
  std::span<const double> capacitances() const { return capacitances_; }

 private:
  std::vector<double> voltages_;
  std::vector<double> capacitances_;
  std::vector<double> second_derivs_;  // spline moments, cubic only
  Interpolation order_;
};

/// Series inductor feeding a shunt (C_varactor + C_parasitic) || R_device
/// || R_loss load, probed from a line of impedance Z0.
struct TankCircuit {
  double inductance = 223e-9;
  VaractorCurve varactor = VaractorCurve::default_curve();
  double parasitic_capacitance = 0.0;
  double device_resistance = 6.7e6;
  double line_impedance = 50.0;
  // Board dielectric / bias-network loss in parallel with the device;
  // infinity disables it.
  double loss_resistance = std::numeric_limits<double>::infinity();

  /// Default tank: loss resistance chosen for an exact match at V_S = 6.8 V.
  static TankCircuit calibrated_default();
  /// Copy whose loss resistance gives an exact match at `v_s`.
  TankCircuit matched_at(double v_s) const;

  void validate() const;
  double total_capacitance(double v_s) const;
  double shunt_conductance() const;
  /// Copy with the device replaced by conductance `g` (0 = open circuit).
  TankCircuit with_device_conductance(double g) const;
};

/// Modulated quantity for sideband experiments.
enum class ModulationTarget { varactor, gate };

struct ModulationSpec {
  ModulationTarget target = ModulationTarget::varactor;
  double frequency = 3e3;     // f_M, Hz
  double amplitude = 80e-6;   // V_M or dV_L, V rms
  void validate() const;
};

double resonant_frequency(const TankCircuit& circuit, double v_s);

struct SlopeEstimate {
  double value = 0.0;
  bool one_sided = false;  // V_S too close to the curve boundary for a central difference
};

/// df0/dV_S by central finite difference of resonant_frequency.
SlopeEstimate df0_dvs(const TankCircuit& circuit, double v_s, double step = 1e-3);

/// Capacitance modulation (rms) produced by an rms varactor-voltage modulation.
double capacitance_modulation(const TankCircuit& circuit, double v_s, double v_m,
                              double step = 1e-3);

/// capacitance_modulation for externally known f0 and slope.
double capacitance_modulation_from_slope(double inductance, double f0, double df0_dvs,
                                         double v_m);

std::complex<double> load_impedance(const TankCircuit& circuit, double v_s, double f);
std::complex<double> reflection_coefficient(const TankCircuit& circuit, double v_s, double f);

/// Complex derivatives of the reflection coefficient with respect to the
/// shunt capacitance and the shunt conductance.
struct ReflectionSlopes {
  std::complex<double> d_capacitance;
  std::complex<double> d_conductance;
};
ReflectionSlopes reflection_slopes(const TankCircuit& circuit, double v_s, double f);

struct MatchResult {
  double frequency = 0.0;
  double depth_db = 0.0;      // 20 log10 |Gamma|
  bool at_boundary = false;   // no interior minimum on [f_lo, f_hi]
};

struct MatchOptions {
  std::size_t coarse_points = 401;
  double rel_tol = 1e-10;
};

/// Frequency minimising |Gamma| on [f_lo, f_hi]: coarse grid, then
/// golden-section refinement around the best grid cell.
MatchResult find_best_match(const TankCircuit& circuit, double v_s, double f_lo, double f_hi,
                            const MatchOptions& options = {});

}  // namespace rflect

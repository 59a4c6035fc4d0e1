#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace rflect {

/// Single quantum dot in the Coulomb-blockade regime.
///
/// Each charge transition contributes a thermally broadened peak
/// G_max cosh^-2(alpha e d / 2.5 k_B T_e), where d is the gate-voltage
/// distance from the bias window of that transition. The window opens
/// linearly with bias: [V_n - s V_B / alpha, V_n + (1 - s) V_B / alpha],
/// s being the fraction of the bias dropped on the source (0.5 by default).
struct DotModel {
  std::vector<double> peak_positions;     // V_L at the Coulomb peaks for V_B = 0, V
  double peak_conductance = 1.0 / 6.7e6;  // G_max, S
  double lever_arm = 0.05;                // alpha, gate
  double charging_energy = 1e-3;          // E_C, eV
  double electron_temperature = 0.1;      // T_e, K
  double bias_asymmetry = 0.5;            // s
  std::optional<double> peak_spacing;     // Delta V_CB override, V

  /// Placeholder device: five peaks spaced by E_C / (alpha e).
  static DotModel placeholder();

  void validate() const;

  /// Delta V_CB: the configured value, otherwise the mean spacing of the peaks.
  double coulomb_peak_spacing() const;
  /// Spacing between the peak nearest to `v_l` and its neighbour on the
  /// `v_l` side. Falls back to coulomb_peak_spacing() when configured.
  double local_peak_spacing(double v_l) const;
  /// Thermal width scale 2.5 k_B T_e / (alpha e), in gate volts.
  double thermal_width() const;
};

/// Double dot probed by its quantum capacitance.
struct DoubleDotModel {
  double tunnel_coupling = 0.0;  // t, J
  double lever_arm = 0.3;        // lambda

  /// t = h x 500 MHz, lambda = 0.3.
  static DoubleDotModel singlet_triplet_default();

  void validate() const;
  /// Width 2t / (lambda e) of the capacitance peak, V.
  double peak_width() const;
};

double conductance(const DotModel& dot, double v_l, double v_b);
double dc_current(const DotModel& dot, double v_l, double v_b);

/// Partial derivative dG/dV_L at zero bias, analytic.
double conductance_slope(const DotModel& dot, double v_l);

/// rms charge modulation e dV_L / Delta V_CB induced by an rms gate modulation.
double gate_charge_modulation(const DotModel& dot, double dv_l);
double gate_charge_modulation(const DotModel& dot, double dv_l, double near_v_l);

double quantum_capacitance(const DoubleDotModel& dd, double v);
/// Closed-form antiderivative of quantum_capacitance, odd, limits +-lambda e / 2.
double stored_charge(const DoubleDotModel& dd, double v);

struct StabilityPoint {
  double v_l = 0.0;
  double v_b = 0.0;
  double g = 0.0;
  double i = 0.0;
};

struct GridAxis {
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 1;
  double at(std::size_t k) const;
};

/// Row-major (V_B outer, V_L inner) conductance/current map.
std::vector<StabilityPoint> stability_grid(const DotModel& dot, const GridAxis& v_l,
                                           const GridAxis& v_b);

/// Columns V_L, V_B, G, I; a V_D column is appended when `v_d` is non-empty.
void write_stability_csv(std::ostream& out, const std::vector<StabilityPoint>& grid,
                         std::span<const double> v_d = {});

}  // namespace rflect

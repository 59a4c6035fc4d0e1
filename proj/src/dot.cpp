#include "rflect/dot.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "rflect/error.hpp"
#include "rflect/format.hpp"
#include "rflect/units.hpp"

namespace rflect {

namespace {

// sech^2(x) without overflow for large |x|.
double sech2(double x) {
  const double e = std::exp(-2.0 * std::abs(x));
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

}  // namespace

DotModel DotModel::placeholder() {
  DotModel dot;
  const double spacing = dot.charging_energy / dot.lever_arm;
  for (int k = 0; k < 5; ++k) dot.peak_positions.push_back(-0.3553 + spacing * k);
  return dot;
}

void DotModel::validate() const {
  if (peak_positions.empty()) throw DomainError("dot: at least one Coulomb peak is required");
  for (std::size_t i = 1; i < peak_positions.size(); ++i)
    if (!(peak_positions[i] > peak_positions[i - 1]))
      throw DomainError("dot: peak positions must be strictly increasing");
  if (!(peak_conductance > 0.0)) throw DomainError("dot: G_max must be positive");
  if (!(lever_arm > 0.0 && lever_arm <= 1.0)) throw DomainError("dot: lever arm must be in (0, 1]");
  if (!(charging_energy > 0.0)) throw DomainError("dot: charging energy must be positive");
  if (!(electron_temperature > 0.0)) throw DomainError("dot: electron temperature must be positive");
  if (!(bias_asymmetry >= 0.0 && bias_asymmetry <= 1.0))
    throw DomainError("dot: bias asymmetry must be in [0, 1]");
  if (peak_spacing) {
    if (!(*peak_spacing > 0.0)) throw DomainError("dot: peak spacing must be positive");
    for (std::size_t i = 1; i < peak_positions.size(); ++i) {
      const double gap = peak_positions[i] - peak_positions[i - 1];
      if (std::abs(gap - *peak_spacing) > 1e-9 * *peak_spacing)
        throw DomainError("dot: configured peak spacing disagrees with peak positions");
    }
  }
}

double DotModel::coulomb_peak_spacing() const {
  if (peak_spacing) return *peak_spacing;
  if (peak_positions.size() >= 2)
    return (peak_positions.back() - peak_positions.front()) /
           static_cast<double>(peak_positions.size() - 1);
  return charging_energy / lever_arm;
}

double DotModel::local_peak_spacing(double v_l) const {
  if (peak_spacing || peak_positions.size() < 2) return coulomb_peak_spacing();
  const auto& p = peak_positions;
  std::size_t k = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (std::abs(p[i] - v_l) < std::abs(p[k] - v_l)) k = i;
  if (v_l >= p[k] && k + 1 < p.size()) return p[k + 1] - p[k];
  if (k > 0) return p[k] - p[k - 1];
  return p[k + 1] - p[k];
}

double DotModel::thermal_width() const {
  return 2.5 * phys::kBoltzmann * electron_temperature / (lever_arm * phys::kElementaryCharge);
}

DoubleDotModel DoubleDotModel::singlet_triplet_default() {
  return {phys::kPlanck * 500e6, 0.3};
}

void DoubleDotModel::validate() const {
  if (!(tunnel_coupling > 0.0)) throw DomainError("double dot: tunnel coupling must be positive");
  if (!(lever_arm > 0.0 && lever_arm <= 1.0))
    throw DomainError("double dot: lever arm must be in (0, 1]");
}

double DoubleDotModel::peak_width() const {
  return 2.0 * tunnel_coupling / (lever_arm * phys::kElementaryCharge);
}

double conductance(const DotModel& dot, double v_l, double v_b) {
  const double w = dot.thermal_width();
  const double s = dot.bias_asymmetry;
  const double edge_a = -s * v_b / dot.lever_arm;
  const double edge_b = (1.0 - s) * v_b / dot.lever_arm;
  const double lo_off = std::min(edge_a, edge_b);
  const double hi_off = std::max(edge_a, edge_b);
  double g = 0.0;
  for (double peak : dot.peak_positions) {
    const double lo = peak + lo_off;
    const double hi = peak + hi_off;
    const double d = v_l < lo ? lo - v_l : (v_l > hi ? v_l - hi : 0.0);
    g += dot.peak_conductance * sech2(d / w);
  }
  return g;
}

double dc_current(const DotModel& dot, double v_l, double v_b) {
  return conductance(dot, v_l, v_b) * v_b;
}

double conductance_slope(const DotModel& dot, double v_l) {
  const double w = dot.thermal_width();
  double slope = 0.0;
  for (double peak : dot.peak_positions) {
    const double u = (v_l - peak) / w;
    slope += -2.0 * dot.peak_conductance * sech2(u) * std::tanh(u) / w;
  }
  return slope;
}

double gate_charge_modulation(const DotModel& dot, double dv_l) {
  if (!(dv_l >= 0.0)) throw DomainError("gate modulation amplitude must be >= 0");
  const double spacing = dot.coulomb_peak_spacing();
  if (!(spacing > 0.0)) throw DomainError("Coulomb peak spacing must be positive");
  return phys::kElementaryCharge * dv_l / spacing;
}

double gate_charge_modulation(const DotModel& dot, double dv_l, double near_v_l) {
  if (!(dv_l >= 0.0)) throw DomainError("gate modulation amplitude must be >= 0");
  const double spacing = dot.local_peak_spacing(near_v_l);
  if (!(spacing > 0.0)) throw DomainError("Coulomb peak spacing must be positive");
  return phys::kElementaryCharge * dv_l / spacing;
}

double quantum_capacitance(const DoubleDotModel& dd, double v) {
  const double u = dd.lever_arm * phys::kElementaryCharge * v / (2.0 * dd.tunnel_coupling);
  const double e_lambda = phys::kElementaryCharge * dd.lever_arm;
  return e_lambda * e_lambda / (4.0 * dd.tunnel_coupling) * std::pow(1.0 + u * u, -1.5);
}

double stored_charge(const DoubleDotModel& dd, double v) {
  const double u = dd.lever_arm * phys::kElementaryCharge * v / (2.0 * dd.tunnel_coupling);
  return 0.5 * dd.lever_arm * phys::kElementaryCharge * u / std::sqrt(u * u + 1.0);
}

double GridAxis::at(std::size_t k) const {
  if (count <= 1) return start;
  return start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1);
}

std::vector<StabilityPoint> stability_grid(const DotModel& dot, const GridAxis& v_l,
                                           const GridAxis& v_b) {
  if (v_l.count == 0 || v_b.count == 0) throw DomainError("stability grid: empty axis");
  std::vector<StabilityPoint> grid;
  grid.reserve(v_l.count * v_b.count);
  for (std::size_t j = 0; j < v_b.count; ++j) {
    const double vb = v_b.at(j);
    for (std::size_t i = 0; i < v_l.count; ++i) {
      const double vl = v_l.at(i);
      const double g = conductance(dot, vl, vb);
      grid.push_back({vl, vb, g, g * vb});
    }
  }
  return grid;
}

void write_stability_csv(std::ostream& out, const std::vector<StabilityPoint>& grid,
                         std::span<const double> v_d) {
  if (!v_d.empty() && v_d.size() != grid.size())
    throw DomainError("stability CSV: V_D column length mismatch");
  out << (v_d.empty() ? "V_L,V_B,G,I\n" : "V_L,V_B,G,I,V_D\n");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& p = grid[k];
    out << format_number(p.v_l) << ',' << format_number(p.v_b) << ',' << format_number(p.g) << ',' << format_number(p.i);
    if (!v_d.empty()) out << ',' << format_number(v_d[k]);
    out << '\n';
  }
}

}  // namespace rflect

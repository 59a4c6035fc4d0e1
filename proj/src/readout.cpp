#include "rflect/readout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "rflect/error.hpp"
#include "rflect/format.hpp"
#include "rflect/numerics.hpp"
#include "rflect/units.hpp"

namespace rflect {

ScCurve::ScCurve(std::vector<ScAnchor> anchors) : anchors_(std::move(anchors)) {
  if (anchors_.empty()) throw DomainError("S_C curve: no anchors");
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    if (!(anchors_[i].s_c > 0.0) || !std::isfinite(anchors_[i].s_c))
      throw DomainError("S_C curve: sensitivities must be positive");
    if (!std::isfinite(anchors_[i].p1_dbm)) throw DomainError("S_C curve: non-finite power");
    if (i > 0 && !(anchors_[i].p1_dbm > anchors_[i - 1].p1_dbm))
      throw DomainError("S_C curve: anchor powers must be strictly increasing");
  }
}

ScCurve ScCurve::default_anchors() {
  return ScCurve({{-60.0, 0.9e-18},
                  {-31.0, 0.07e-18},
                  {-21.0, 0.07e-18},
                  {-10.0, 0.07e-18 * db_to_amplitude_ratio(2.0 * 11.0)}});
}

bool ScCurve::covers(double p1_dbm) const {
  return p1_dbm >= anchors_.front().p1_dbm && p1_dbm <= anchors_.back().p1_dbm;
}

double ScCurve::at(double p1_dbm) const {
  if (!covers(p1_dbm)) throw DomainError("P1 outside the S_C table");
  if (anchors_.size() == 1) return anchors_.front().s_c;
  auto hi = std::upper_bound(anchors_.begin(), anchors_.end(), p1_dbm,
                             [](double p, const ScAnchor& a) { return p < a.p1_dbm; });
  if (hi == anchors_.end()) return anchors_.back().s_c;
  const auto lo = std::prev(hi);
  const double t = (p1_dbm - lo->p1_dbm) / (hi->p1_dbm - lo->p1_dbm);
  return std::exp((1.0 - t) * std::log(lo->s_c) + t * std::log(hi->s_c));
}

ScCurve ScCurve::scaled(double factor) const {
  auto copy = anchors_;
  for (auto& a : copy) a.s_c *= factor;
  return ScCurve(std::move(copy));
}

double V0Map::operator()(double p1_dbm) const {
  return electrode_scale * ref_v0 * db_to_amplitude_ratio(p1_dbm - ref_p1_dbm);
}

double average_capacitance(const DoubleDotModel& dd, double v0, double rel_tol) {
  if (!(v0 > 0.0)) throw DomainError("average_capacitance: V0 must be positive");
  const double v_pk = std::numbers::sqrt2 * v0;
  const auto q = integrate_adaptive([&](double v) { return quantum_capacitance(dd, v); }, 0.0,
                                    v_pk, rel_tol);
  return q.value / v_pk;
}

double average_capacitance_closed_form(const DoubleDotModel& dd, double v0) {
  if (!(v0 > 0.0)) throw DomainError("average_capacitance_closed_form: V0 must be positive");
  return dd.lever_arm * phys::kElementaryCharge / (2.0 * std::numbers::sqrt2 * v0);
}

double readout_bandwidth(double c_bar, double s_c) {
  if (!(s_c > 0.0)) throw DomainError("readout_bandwidth: S_C must be positive");
  const double ratio = c_bar / s_c;
  return ratio * ratio;
}

double readout_time(double delta_f) {
  if (!(delta_f > 0.0)) throw DomainError("readout_time: bandwidth must be positive");
  return 0.5 / delta_f;
}

ReadoutEstimate estimate_readout(const DoubleDotModel& dd, double p1_dbm, double s_c,
                                 const V0Map& v0_map, bool closed_form) {
  ReadoutEstimate e;
  e.p1_dbm = p1_dbm;
  e.v0 = v0_map(p1_dbm);
  e.s_c = s_c;
  e.used_closed_form = closed_form;
  e.c_bar = closed_form ? average_capacitance_closed_form(dd, e.v0) : average_capacitance(dd, e.v0);
  e.delta_f = readout_bandwidth(e.c_bar, s_c);
  e.tau = readout_time(e.delta_f);
  return e;
}

ReadoutSweep readout_time_sweep(const DoubleDotModel& dd, const ScCurve& curve,
                                const V0Map& v0_map, const std::vector<double>& p1_grid,
                                bool closed_form, unsigned threads) {
  dd.validate();
  if (!(v0_map.electrode_scale > 0.0) || !(v0_map.ref_v0 > 0.0))
    throw DomainError("V0 map: reference voltage and electrode scale must be positive");
  ReadoutSweep sweep;
  std::vector<double> usable;
  for (double p : p1_grid) {
    if (curve.covers(p)) {
      usable.push_back(p);
    } else {
      sweep.excluded.push_back(p);
      sweep.warnings.push_back("P1 = " + format_number(p) + " dBm outside the S_C table; skipped");
    }
  }
  sweep.points = parallel_map<ReadoutEstimate>(
      usable.size(),
      [&](std::size_t i) {
        return estimate_readout(dd, usable[i], curve.at(usable[i]), v0_map, closed_form);
      },
      threads);
  for (std::size_t i = 1; i < sweep.points.size(); ++i)
    if (sweep.points[i].tau < sweep.points[sweep.best].tau) sweep.best = i;
  return sweep;
}

std::vector<double> default_p1_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 90; ++k) grid.push_back(-60.0 + 0.5 * k);
  return grid;
}

void write_readout_csv(std::ostream& out, const ReadoutSweep& sweep) {
  out << "P1_dBm,V0_vrms,Cbar_F,delta_f_Hz,tau_s\n";
  for (const auto& e : sweep.points)
    out << format_number(e.p1_dbm) << ',' << format_number(e.v0) << ',' << format_number(e.c_bar)
        << ',' << format_number(e.delta_f) << ',' << format_number(e.tau) << '\n';
}

}  // namespace rflect

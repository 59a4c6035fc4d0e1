#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "rflect/dot.hpp"

namespace rflect {

struct ScAnchor {
  double p1_dbm = 0.0;
  double s_c = 0.0;  // F/sqrt(Hz)
};

/// S_C(P1) table, interpolated linearly in (P1 dB, log S_C), which is
/// log-log in power and sensitivity.
class ScCurve {
 public:
  explicit ScCurve(std::vector<ScAnchor> anchors);

  /// 0.9 aF at -60 dBm, 0.07 aF flat from -31 to -21 dBm, then +2 dB/dB.
  static ScCurve default_anchors();

  bool covers(double p1_dbm) const;
  /// Throws DomainError outside the anchored range.
  double at(double p1_dbm) const;
  ScCurve scaled(double factor) const;
  const std::vector<ScAnchor>& anchors() const { return anchors_; }

 private:
  std::vector<ScAnchor> anchors_;
};

/// V0 = electrode_scale * ref_v0 * 10^((P1 - ref_p1) / 20).
struct V0Map {
  double ref_p1_dbm = -29.0;
  double ref_v0 = 192e-6;
  double electrode_scale = 1.0;
  double operator()(double p1_dbm) const;
};

struct ReadoutEstimate {
  double p1_dbm = 0.0;
  double v0 = 0.0;      // rms voltage on the coupling electrode
  double s_c = 0.0;
  double c_bar = 0.0;
  double delta_f = 0.0;
  double tau = 0.0;
  bool used_closed_form = false;
};

/// Cycle average of C_Q over a sinusoid of rms amplitude `v0`, by adaptive
/// quadrature over the half period [0, sqrt(2) v0] (C_Q is even).
double average_capacitance(const DoubleDotModel& dd, double v0, double rel_tol = 1e-8);
/// Large-amplitude limit lambda e / (2 sqrt(2) v0).
double average_capacitance_closed_form(const DoubleDotModel& dd, double v0);
/// Unit-SNR bandwidth (C_bar / S_C)^2.
double readout_bandwidth(double c_bar, double s_c);
double readout_time(double delta_f);

ReadoutEstimate estimate_readout(const DoubleDotModel& dd, double p1_dbm, double s_c,
                                 const V0Map& v0_map, bool closed_form = false);

struct ReadoutSweep {
  std::vector<ReadoutEstimate> points;
  std::vector<double> excluded;       // grid powers outside the S_C table
  std::vector<std::string> warnings;
  std::size_t best = 0;               // index of the smallest tau
};

/// Grid order is preserved; points are computed on up to `threads` workers.
ReadoutSweep readout_time_sweep(const DoubleDotModel& dd, const ScCurve& curve,
                                const V0Map& v0_map, const std::vector<double>& p1_grid,
                                bool closed_form = false, unsigned threads = 0);

/// -60 to -15 dBm in 0.5 dB steps.
std::vector<double> default_p1_grid();

void write_readout_csv(std::ostream& out, const ReadoutSweep& sweep);

}  // namespace rflect

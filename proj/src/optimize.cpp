#include "rflect/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "rflect/error.hpp"
#include "rflect/format.hpp"
#include "rflect/numerics.hpp"

namespace rflect {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_target(const ChainState& state, ModulationTarget target, std::string_view what) {
  if (state.drive.modulation.target != target)
    throw ConfigError("drive.modulation.target",
                      std::string(what) + " needs " +
                          (target == ModulationTarget::gate ? "gate" : "varactor") +
                          " modulation");
}

}  // namespace

void validate_plan(const SweepPlan& plan, const ChainState& state) {
  plan.validate();
  if (plan.objective == Objective::s_q) require_target(state, ModulationTarget::gate, "objective S_Q");
  if (plan.objective == Objective::s_c)
    require_target(state, ModulationTarget::varactor, "objective S_C");
  for (const auto& axis : plan.axes) {
    if (axis.parameter == SweepParameter::v_m)
      require_target(state, ModulationTarget::varactor, "sweeping V_M");
    if (axis.parameter == SweepParameter::dv_l)
      require_target(state, ModulationTarget::gate, "sweeping dV_L");
  }
}

namespace {

std::string flank_warning(const ChainState& state, double v_l) {
  const double slope = std::abs(conductance_slope(state.dot, v_l));
  if (slope >= state.analysis.flank_slope_floor) return {};
  return "V_L = " + format_number(v_l) + " V: |dG/dV_L| = " + format_number(slope) +
         " S/V is below the flank floor; gate sidebands will be weak";
}

}  // namespace

std::string_view to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::v_l: return "V_L";
    case SweepParameter::v_s: return "V_S";
    case SweepParameter::p1: return "P1";
    case SweepParameter::v_m: return "V_M";
    case SweepParameter::dv_l: return "dV_L";
  }
  return "?";
}

std::string_view to_string(Objective o) { return o == Objective::s_c ? "S_C" : "S_Q"; }

std::optional<SweepParameter> parse_sweep_parameter(std::string_view name) {
  for (auto p : {SweepParameter::v_l, SweepParameter::v_s, SweepParameter::p1,
                 SweepParameter::v_m, SweepParameter::dv_l})
    if (to_string(p) == name) return p;
  return std::nullopt;
}

std::optional<Objective> parse_objective(std::string_view name) {
  if (name == "S_C") return Objective::s_c;
  if (name == "S_Q") return Objective::s_q;
  return std::nullopt;
}

void SweepPlan::validate() const {
  std::set<SweepParameter> seen;
  for (const auto& axis : axes) {
    if (axis.grid.empty())
      throw ConfigError(std::string(to_string(axis.parameter)), "empty sweep grid");
    if (!seen.insert(axis.parameter).second)
      throw ConfigError(std::string(to_string(axis.parameter)),
                        "parameter appears more than once in a pass");
    for (double v : axis.grid)
      if (!std::isfinite(v))
        throw ConfigError(std::string(to_string(axis.parameter)), "non-finite grid value");
  }
  if (modulation_frequency && !(*modulation_frequency > 0.0))
    throw ConfigError("modulation_frequency_hz", "must be positive");
}

void apply_parameter(ChainState& state, SweepParameter p, double value) {
  switch (p) {
    case SweepParameter::v_l: state.drive.v_l = value; break;
    case SweepParameter::v_s: state.drive.v_s = value; break;
    case SweepParameter::p1: state.drive.p1_dbm = value; break;
    case SweepParameter::v_m:
    case SweepParameter::dv_l: state.drive.modulation.amplitude = value; break;
  }
}

double parameter_value(const ChainState& state, SweepParameter p) {
  switch (p) {
    case SweepParameter::v_l: return state.drive.v_l;
    case SweepParameter::v_s: return state.drive.v_s;
    case SweepParameter::p1: return state.drive.p1_dbm;
    case SweepParameter::v_m:
    case SweepParameter::dv_l: return state.drive.modulation.amplitude;
  }
  return 0.0;
}

double evaluate_objective(const ChainState& state, Objective objective, std::uint64_t seed) {
  const auto m = measure_chain(state, seed);
  if (m.sensitivity.flagged) return kInf;
  const auto& value = objective == Objective::s_c ? m.sensitivity.s_c : m.sensitivity.s_q;
  return value ? *value : kInf;
}

SweepResult run_pass(const SweepPlan& plan, const ChainState& state, std::size_t pass_index) {
  SweepResult result;
  result.pass_index = pass_index;

  ChainState current = state;
  if (plan.modulation_frequency) current.drive.modulation.frequency = *plan.modulation_frequency;
  validate_plan(plan, current);
  if (!current.drive.carrier_frequency) current.drive.carrier_frequency = carrier_frequency(current);
  current.validate();

  result.incumbent_before =
      evaluate_objective(current, plan.objective, keyed_seed(plan.seed, "incumbent", pass_index));
  double incumbent = result.incumbent_before;
  result.best_point.sensitivity = kInf;
  bool have_best = false;

  for (const auto& axis : plan.axes) {
    const auto points = parallel_map<SweepRecord>(
        axis.grid.size(),
        [&](std::size_t i) {
          const double value = axis.grid[i];
          ChainState point = current;
          apply_parameter(point, axis.parameter, value);
          if (axis.parameter == SweepParameter::v_s && plan.rematch_carrier) {
            point.drive.carrier_frequency.reset();
            point.drive.carrier_frequency = carrier_frequency(point);
          }
          SweepRecord r;
          r.parameter = axis.parameter;
          r.value = value;
          r.seed = keyed_seed(plan.seed, to_string(axis.parameter), value);
          const auto m = measure_chain(point, r.seed);
          r.v_l = point.drive.v_l;
          r.v_s = point.drive.v_s;
          r.p1_dbm = point.drive.p1_dbm;
          r.amplitude = point.drive.modulation.amplitude;
          r.carrier_frequency = m.response.carrier_frequency;
          r.snr_db = m.snr.snr_db;
          r.flagged = m.sensitivity.flagged;
          const auto& s = plan.objective == Objective::s_c ? m.sensitivity.s_c : m.sensitivity.s_q;
          r.sensitivity = r.flagged || !s ? kInf : *s;
          return r;
        },
        current.analysis.threads);

    // First minimum in grid order; equal values keep the earlier point.
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].sensitivity < points[best].sensitivity) best = i;

    if (current.drive.modulation.target == ModulationTarget::gate &&
        axis.parameter == SweepParameter::v_l) {
      const auto weak = std::count_if(points.begin(), points.end(), [&](const SweepRecord& p) {
        return !flank_warning(current, p.value).empty();
      });
      if (weak > 0)
        result.warnings.push_back(std::to_string(weak) + " of " + std::to_string(points.size()) +
                                  " V_L points lie off the Coulomb-peak flanks");
    }
    const auto undetected =
        std::count_if(points.begin(), points.end(), [](const SweepRecord& p) { return p.flagged; });
    if (undetected > 0)
      result.warnings.push_back(std::to_string(undetected) + " of " + std::to_string(points.size()) +
                                " " + std::string(to_string(axis.parameter)) +
                                " points have undetected sidebands");

    const auto& winner = points[best];
    if (!have_best || winner.sensitivity < result.best_point.sensitivity) {
      result.best_point = winner;
      have_best = true;
    }
    if (winner.sensitivity < incumbent) {
      apply_parameter(current, axis.parameter, winner.value);
      current.drive.carrier_frequency = winner.carrier_frequency;
      incumbent = winner.sensitivity;
      result.improved = true;
    }
    result.records.insert(result.records.end(), points.begin(), points.end());
  }
  if (current.drive.modulation.target == ModulationTarget::gate)
    if (auto w = flank_warning(current, current.drive.v_l); !w.empty())
      result.warnings.push_back(w);

  result.incumbent_after = incumbent;
  result.state_after = std::move(current);
  return result;
}

ProtocolResult run_protocol(const std::vector<SweepPlan>& passes, const ChainState& state) {
  ProtocolResult out;
  out.final_state = state;
  if (passes.empty()) return out;
  for (std::size_t k = 0; k < passes.size(); ++k) {
    auto pass = run_pass(passes[k], out.final_state, k);
    if (k == 0) out.initial_objective = pass.incumbent_before;
    out.final_state = pass.state_after;
    out.final_objective = pass.incumbent_after;
    out.history.push_back(std::move(pass));
  }
  return out;
}

void write_pass_csv(std::ostream& out, const SweepResult& result) {
  out << "pass,parameter,value,V_L_V,V_S_V,P1_dBm,amplitude_Vrms,f_C_Hz,snr_dB,sensitivity,flagged,"
         "seed\n";
  for (const auto& r : result.records) {
    out << result.pass_index << ',' << to_string(r.parameter) << ',' << format_number(r.value)
        << ',' << format_number(r.v_l) << ',' << format_number(r.v_s) << ','
        << format_number(r.p1_dbm) << ',' << format_number(r.amplitude) << ','
        << format_number(r.carrier_frequency) << ',' << format_number(r.snr_db) << ','
        << format_number(r.sensitivity) << ',' << (r.flagged ? 1 : 0) << ',' << r.seed << '\n';
  }
}

}  // namespace rflect

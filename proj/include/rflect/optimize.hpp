#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rflect/chain.hpp"

namespace rflect {

enum class SweepParameter { v_l, v_s, p1, v_m, dv_l };
enum class Objective { s_c, s_q };

std::string_view to_string(SweepParameter p);
std::string_view to_string(Objective o);
std::optional<SweepParameter> parse_sweep_parameter(std::string_view name);
std::optional<Objective> parse_objective(std::string_view name);

struct SweepAxis {
  SweepParameter parameter = SweepParameter::v_l;
  std::vector<double> grid;
};

/// One pass of the coordinate descent. Axes are scanned in order; each
/// axis's best value is kept before the next axis is scanned.
struct SweepPlan {
  std::string label;
  std::vector<SweepAxis> axes;
  Objective objective = Objective::s_q;
  bool rematch_carrier = true;
  std::uint64_t seed = 0;
  std::optional<double> modulation_frequency;  // f_M override for this pass

  void validate() const;
};

struct SweepRecord {
  SweepParameter parameter = SweepParameter::v_l;
  double value = 0.0;
  double v_l = 0.0;
  double v_s = 0.0;
  double p1_dbm = 0.0;
  double amplitude = 0.0;
  double carrier_frequency = 0.0;
  double snr_db = 0.0;
  double sensitivity = 0.0;  // F/sqrt(Hz) or e/sqrt(Hz); +inf when flagged
  bool flagged = false;
  std::uint64_t seed = 0;
};

struct SweepResult {
  std::size_t pass_index = 0;
  std::vector<SweepRecord> records;
  SweepRecord best_point;
  double incumbent_before = 0.0;
  double incumbent_after = 0.0;
  bool improved = false;
  std::vector<std::string> warnings;
  ChainState state_after;
};

/// Plan checks plus compatibility with the chain's modulation target
/// (S_Q and dV_L need gate modulation, S_C and V_M varactor modulation).
void validate_plan(const SweepPlan& plan, const ChainState& state);

/// Set one swept parameter on the chain state.
void apply_parameter(ChainState& state, SweepParameter p, double value);
double parameter_value(const ChainState& state, SweepParameter p);

/// Objective at the current state; +inf when the sidebands are not detected.
double evaluate_objective(const ChainState& state, Objective objective, std::uint64_t seed);

/// Exhaustive scan of the plan's grids. Every point uses a noise stream keyed
/// by (plan seed, parameter, value). Varying V_S with rematch_carrier moves
/// the carrier to the best match; otherwise f_C stays where it was on entry.
SweepResult run_pass(const SweepPlan& plan, const ChainState& state, std::size_t pass_index = 0);

struct ProtocolResult {
  ChainState final_state;
  std::vector<SweepResult> history;
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

/// Passes run strictly in sequence, each starting from the previous state.
ProtocolResult run_protocol(const std::vector<SweepPlan>& passes, const ChainState& state);

void write_pass_csv(std::ostream& out, const SweepResult& result);

}  // namespace rflect

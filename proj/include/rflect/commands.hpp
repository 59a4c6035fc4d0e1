#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rflect/analysis.hpp"
#include "rflect/config.hpp"
#include "rflect/optimize.hpp"
#include "rflect/readout.hpp"

namespace rflect {

struct MatchReport {
  double best_v_s = 0.0;
  double best_frequency = 0.0;
  double best_depth_db = 0.0;
  bool best_at_boundary = false;
};

/// |Gamma(f)| traces for every configured V_S plus the best (V_S, f_C).
/// Writes match_traces.csv and match_summary.json.
MatchReport cmd_match(const Config& cfg, const std::filesystem::path& out_dir);

/// Synthesizes a spectrum (spectrum.csv) or ingests `analyze_file`, then
/// writes sensitivity.json.
SensitivityResult cmd_spectrum(const Config& cfg, const std::filesystem::path& out_dir,
                               const std::optional<std::filesystem::path>& analyze_file);

/// readout_sweep.csv and readout_summary.json; warnings go to `log`.
ReadoutSweep cmd_readout(const Config& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// stability.csv with columns V_L, V_B, G, I, V_D.
StabilityMap cmd_stability(const Config& cfg, const std::filesystem::path& out_dir);

/// pass_<k>.csv per pass and protocol_summary.json.
ProtocolResult cmd_optimize(const Config& cfg, const std::vector<SweepPlan>& passes,
                            const std::filesystem::path& out_dir, std::ostream& log);

/// Full command line: returns the process exit code (0 ok, 2 config/usage,
/// 3 I/O or malformed input).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rflect

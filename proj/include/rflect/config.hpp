#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "rflect/chain.hpp"
#include "rflect/dot.hpp"
#include "rflect/optimize.hpp"
#include "rflect/readout.hpp"

namespace rflect {

struct MatchSettings {
  std::vector<double> v_s{6.0, 6.4, 6.8, 7.2, 7.6};
  double f_lo = 180e6;
  double f_hi = 210e6;
  std::size_t points = 601;  // trace rows per V_S
};

struct ReadoutSettings {
  std::vector<double> p1_grid = default_p1_grid();
  ScCurve curve = ScCurve::default_anchors();
  V0Map v0_map;
  bool closed_form = false;
};

struct StabilitySettings {
  GridAxis v_l{-0.37, -0.26, 221};
  GridAxis v_b{-2e-3, 2e-3, 81};
};

struct Config {
  ChainState chain = ChainState::defaults();
  MatchSettings match;
  ReadoutSettings readout;
  StabilitySettings stability;
};

/// JSON configuration. Unknown keys are rejected and every error carries the
/// dotted key path. Relative file references resolve against `base_dir`.
Config parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

std::vector<SweepPlan> parse_protocol(const std::string& json_text, std::uint64_t default_seed);
std::vector<SweepPlan> load_protocol(const std::filesystem::path& path, std::uint64_t default_seed);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace rflect

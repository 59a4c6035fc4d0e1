#include "rflect/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rflect/error.hpp"
#include "rflect/format.hpp"
#include "rflect/units.hpp"

namespace rflect {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish_output(out, path);
}

// JSON has no infinities; unavailable and unbounded values become null.
json number_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json snr_json(const SnrMeasurement& m) {
  return {{"snr_dB", number_or_null(m.snr_db)},
          {"signal_dBm", number_or_null(m.signal_dbm)},
          {"floor_dBm", number_or_null(m.floor_dbm)},
          {"noise_bins", m.noise_bins},
          {"flagged", m.flagged}};
}

double required_meta(const Spectrum& s, const std::string& key) {
  const auto v = s.meta_number(key);
  if (!v) throw ParseError(0, "metadata " + key + " is not a number");
  return *v;
}

struct SpectrumAnalysis {
  SidebandPair snr;
  SensitivityResult result;
  double f_carrier = 0.0;
  double f_mod = 0.0;
};

// Modulation amplitudes come from the file when recorded there, otherwise
// from the configured chain.
SpectrumAnalysis analyze_spectrum(const Spectrum& s, const Config& cfg) {
  require_metadata(s, {"f_carrier_hz", "f_mod_hz"});
  SpectrumAnalysis a;
  a.f_carrier = required_meta(s, "f_carrier_hz");
  a.f_mod = required_meta(s, "f_mod_hz");
  a.snr = measure_sidebands(s, a.f_carrier, a.f_mod, cfg.chain.analysis.guard_bins);

  std::optional<double> delta_c = s.meta_number("delta_C_F");
  std::optional<double> delta_q = s.meta_number("delta_Q_C");
  std::optional<double> v0 = s.meta_number("V0_vrms");
  if (!delta_c && !delta_q) {
    const auto response = evaluate_chain(cfg.chain);
    delta_c = response.delta_c;
    delta_q = response.delta_q;
  }
  if (!v0) {
    const auto p1 = s.meta_number("P1_dBm");
    v0 = v0_from_power(p1 ? *p1 : cfg.chain.drive.p1_dbm);
  }
  a.result = sensitivities(a.snr, s.rbw, delta_c, delta_q, v0);
  return a;
}

json sensitivity_json(const SpectrumAnalysis& a) {
  const auto& r = a.result;
  std::optional<double> s_s_e;
  if (r.s_s) s_s_e = *r.s_s / phys::kElementaryCharge;
  return {{"f_carrier_hz", a.f_carrier},
          {"f_mod_hz", a.f_mod},
          {"snr_dB", number_or_null(r.snr_db)},
          {"delta_f_Hz", r.delta_f},
          {"S_C_F_per_rtHz", number_or_null(r.s_c)},
          {"S_Q_e_per_rtHz", number_or_null(r.s_q)},
          {"S_S_C_per_rtHz", number_or_null(r.s_s)},
          {"S_S_e_per_rtHz", number_or_null(s_s_e)},
          {"uncertainty_rel", r.uncertainty},
          {"flagged", r.flagged},
          {"sidebands", {{"lower", snr_json(a.snr.lower)}, {"upper", snr_json(a.snr.upper)}}}};
}

json record_json(const SweepRecord& r) {
  return {{"parameter", std::string(to_string(r.parameter))},
          {"value", r.value},
          {"V_L_V", r.v_l},
          {"V_S_V", r.v_s},
          {"P1_dBm", r.p1_dbm},
          {"amplitude_Vrms", r.amplitude},
          {"f_C_hz", r.carrier_frequency},
          {"snr_dB", number_or_null(r.snr_db)},
          {"sensitivity", number_or_null(r.sensitivity)},
          {"flagged", r.flagged}};
}

double match_frequency(const MatchSettings& m, std::size_t k) {
  if (m.points <= 1) return m.f_lo;
  return m.f_lo + (m.f_hi - m.f_lo) * static_cast<double>(k) / static_cast<double>(m.points - 1);
}

}  // namespace

MatchReport cmd_match(const Config& cfg, const fs::path& out_dir) {
  const auto& m = cfg.match;
  const TankCircuit tank = loaded_tank(cfg.chain);
  const fs::path traces_path = out_dir / "match_traces.csv";
  auto traces = open_output(traces_path);
  traces << "V_S_V,frequency_hz,gamma_abs,gamma_dB,gamma_phase_rad\n";

  MatchReport report;
  report.best_depth_db = std::numeric_limits<double>::infinity();
  json per_v_s = json::array();
  for (double v_s : m.v_s) {
    MatchResult best;
    for (std::size_t k = 0; k < m.points; ++k) {
      const double f = match_frequency(m, k);
      const auto gamma = reflection_coefficient(tank, v_s, f);
      const double mag = std::abs(gamma);
      const double db = 20.0 * std::log10(std::max(mag, 1e-30));
      traces << format_number(v_s) << ',' << format_number(f) << ',' << format_number(mag) << ','
             << format_number(db) << ',' << format_number(std::arg(gamma)) << '\n';
      if (m.points == 1) best = {f, db, true};
    }
    if (m.points > 1) best = find_best_match(tank, v_s, m.f_lo, m.f_hi);
    per_v_s.push_back({{"V_S_V", v_s},
                       {"f_C_hz", best.frequency},
                       {"depth_dB", best.depth_db},
                       {"at_boundary", best.at_boundary},
                       {"f0_hz", resonant_frequency(tank, v_s)}});
    if (best.depth_db < report.best_depth_db) {
      report = {v_s, best.frequency, best.depth_db, best.at_boundary};
    }
  }
  finish_output(traces, traces_path);
  write_json(out_dir / "match_summary.json",
             {{"best", {{"V_S_V", report.best_v_s},
                        {"f_C_hz", report.best_frequency},
                        {"depth_dB", report.best_depth_db},
                        {"at_boundary", report.best_at_boundary}}},
              {"per_V_S", per_v_s}});
  return report;
}

SensitivityResult cmd_spectrum(const Config& cfg, const fs::path& out_dir,
                               const std::optional<fs::path>& analyze_file) {
  Spectrum s;
  if (analyze_file) {
    s = load_spectrum_csv(*analyze_file);
  } else {
    s = synthesize_spectrum(cfg.chain, cfg.chain.analysis.seed);
    save_spectrum_csv(out_dir / "spectrum.csv", s);
  }
  const auto analysis = analyze_spectrum(s, cfg);
  write_json(out_dir / "sensitivity.json", sensitivity_json(analysis));
  return analysis.result;
}

ReadoutSweep cmd_readout(const Config& cfg, const fs::path& out_dir, std::ostream& log) {
  const auto& r = cfg.readout;
  if (r.p1_grid.empty()) throw ConfigError("readout.P1_grid_dBm", "empty power grid");
  auto sweep = readout_time_sweep(cfg.chain.double_dot, r.curve, r.v0_map, r.p1_grid, r.closed_form,
                                  cfg.chain.analysis.threads);
  for (const auto& w : sweep.warnings) log << "warning: " << w << '\n';
  if (sweep.points.empty())
    throw ConfigError("readout.P1_grid_dBm", "no grid point lies inside the S_C table");

  const fs::path csv_path = out_dir / "readout_sweep.csv";
  auto csv = open_output(csv_path);
  write_readout_csv(csv, sweep);
  finish_output(csv, csv_path);

  const auto& best = sweep.points[sweep.best];
  write_json(out_dir / "readout_summary.json",
             {{"min_tau_s", best.tau},
              {"argmin_P1_dBm", best.p1_dbm},
              {"V0_vrms", best.v0},
              {"Cbar_F", best.c_bar},
              {"delta_f_Hz", best.delta_f},
              {"S_C_F_per_rtHz", best.s_c},
              {"closed_form", r.closed_form},
              {"electrode_scale", r.v0_map.electrode_scale},
              {"points", sweep.points.size()},
              {"excluded_P1_dBm", sweep.excluded}});
  return sweep;
}

StabilityMap cmd_stability(const Config& cfg, const fs::path& out_dir) {
  auto map = stability_map(cfg.chain, cfg.stability.v_l, cfg.stability.v_b);
  const fs::path path = out_dir / "stability.csv";
  auto out = open_output(path);
  write_stability_csv(out, map.grid, map.v_d);
  finish_output(out, path);
  return map;
}

ProtocolResult cmd_optimize(const Config& cfg, const std::vector<SweepPlan>& passes,
                            const fs::path& out_dir, std::ostream& log) {
  auto result = run_protocol(passes, cfg.chain);
  double best = std::numeric_limits<double>::infinity();
  json history = json::array();
  for (const auto& pass : result.history) {
    const fs::path path = out_dir / ("pass_" + std::to_string(pass.pass_index) + ".csv");
    auto out = open_output(path);
    write_pass_csv(out, pass);
    finish_output(out, path);
    for (const auto& w : pass.warnings) log << "warning: pass " << pass.pass_index << ": " << w << '\n';
    for (const auto& r : pass.records) best = std::min(best, r.sensitivity);
    const auto& plan = passes[pass.pass_index];
    history.push_back({{"index", pass.pass_index},
                       {"label", plan.label},
                       {"objective", std::string(to_string(plan.objective))},
                       {"points", pass.records.size()},
                       {"best_point", record_json(pass.best_point)},
                       {"incumbent_before", number_or_null(pass.incumbent_before)},
                       {"incumbent_after", number_or_null(pass.incumbent_after)},
                       {"improved", pass.improved},
                       {"warnings", pass.warnings}});
  }
  const auto& d = result.final_state.drive;
  write_json(out_dir / "protocol_summary.json",
             {{"passes", history},
              {"initial_objective", number_or_null(result.initial_objective)},
              {"final_objective", number_or_null(result.final_objective)},
              {"best_sensitivity", number_or_null(best)},
              {"final_state",
               {{"V_L_V", d.v_l},
                {"V_S_V", d.v_s},
                {"P1_dBm", d.p1_dbm},
                {"amplitude_Vrms", d.modulation.amplitude},
                {"f_M_hz", d.modulation.frequency},
                {"f_C_hz", number_or_null(d.carrier_frequency)}}}});
  return result;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and analysis of an RF reflectometry readout chain", "rflect"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool dry_run = false;
  app.add_option("--config", config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "Global RNG seed (overrides analysis.seed)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_flag("--dry-run", dry_run, "Validate inputs and report the planned work only");

  auto* match = app.add_subcommand("match", "Reflection traces and best matching point");
  auto* spectrum = app.add_subcommand("spectrum", "Synthesize or analyze a sideband spectrum");
  std::string analyze_path;
  bool synthesize = false;
  auto* analyze_opt = spectrum->add_option("--analyze", analyze_path, "Spectrum CSV to analyze");
  auto* synth_opt = spectrum->add_flag("--synthesize", synthesize, "Synthesize from the chain model (default)");
  analyze_opt->excludes(synth_opt);
  auto* readout = app.add_subcommand("readout", "Readout-time sweep over drive power");
  auto* stability = app.add_subcommand("stability", "Coulomb-diamond map with demodulated output");
  auto* optimize = app.add_subcommand("optimize", "Sequential sensitivity optimization");
  std::string protocol_path;
  optimize->add_option("--protocol", protocol_path, "Protocol JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Config cfg = config_path.empty() ? Config{} : load_config(config_path);
    if (seed_opt->count() > 0) cfg.chain.analysis.seed = seed;
    const fs::path dir = out_dir;

    std::vector<SweepPlan> passes;
    if (optimize->parsed()) {
      passes = load_protocol(protocol_path, cfg.chain.analysis.seed);
      ChainState probe = cfg.chain;
      for (const auto& plan : passes) {
        if (plan.modulation_frequency) probe.drive.modulation.frequency = *plan.modulation_frequency;
        validate_plan(plan, probe);
        probe.validate();
      }
    }
    if (readout->parsed() && cfg.readout.p1_grid.empty())
      throw ConfigError("readout.P1_grid_dBm", "empty power grid");
    std::optional<fs::path> analyze;
    if (!analyze_path.empty()) analyze = analyze_path;

    if (dry_run) {
      out << "configuration ok\n";
      if (match->parsed())
        out << "match: " << cfg.match.v_s.size() << " V_S values x " << cfg.match.points << " frequencies\n";
      if (spectrum->parsed()) {
        if (analyze) {
          const auto s = load_spectrum_csv(*analyze);
          require_metadata(s, {"f_carrier_hz", "f_mod_hz"});
          out << "spectrum: analyze " << s.size() << " bins\n";
        } else {
          out << "spectrum: synthesize with seed " << cfg.chain.analysis.seed << '\n';
        }
      }
      if (readout->parsed()) out << "readout: " << cfg.readout.p1_grid.size() << " power points\n";
      if (stability->parsed())
        out << "stability: " << cfg.stability.v_l.count << " x " << cfg.stability.v_b.count << " grid\n";
      if (optimize->parsed()) {
        std::size_t points = 0;
        for (const auto& p : passes)
          for (const auto& a : p.axes) points += a.grid.size();
        out << "optimize: " << passes.size() << " passes, " << points << " points\n";
      }
      return 0;
    }

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    if (match->parsed()) {
      const auto r = cmd_match(cfg, dir);
      out << "best match: V_S = " << format_number(r.best_v_s) << " V, f_C = "
          << format_number(r.best_frequency) << " Hz, depth = " << format_number(r.best_depth_db)
          << " dB" << (r.best_at_boundary ? " (at window boundary)" : "") << '\n';
    } else if (spectrum->parsed()) {
      const auto r = cmd_spectrum(cfg, dir, analyze);
      out << "SNR = " << format_number(r.snr_db) << " dB" << (r.flagged ? " (flagged: sidebands not detected)" : "")
          << '\n';
    } else if (readout->parsed()) {
      const auto sweep = cmd_readout(cfg, dir, err);
      const auto& b = sweep.points[sweep.best];
      out << "min tau = " << format_number(b.tau) << " s at P1 = " << format_number(b.p1_dbm) << " dBm\n";
    } else if (stability->parsed()) {
      const auto map = cmd_stability(cfg, dir);
      out << "stability: " << map.grid.size() << " points, f_C = " << format_number(map.carrier_frequency)
          << " Hz\n";
    } else if (optimize->parsed()) {
      const auto r = cmd_optimize(cfg, passes, dir, err);
      out << "objective: " << format_number(r.initial_objective) << " -> "
          << format_number(r.final_objective) << " over " << r.history.size() << " passes\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "invalid value: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "malformed input: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rflect

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "rflect/analysis.hpp"
#include "rflect/chain.hpp"
#include "rflect/error.hpp"
#include "rflect/numerics.hpp"
#include "rflect/spectrum.hpp"
#include "rflect/units.hpp"
#include "support.hpp"

using namespace rflect;
using testing::rel_err;

namespace {

constexpr double kE = phys::kElementaryCharge;

// Flat floor of `floor_dbm` with optional lines at the given bins.
Spectrum flat(std::size_t n, double floor_dbm, double f_start = 1e6, double step = 1.0) {
  Spectrum s;
  s.f_start = f_start;
  s.f_step = step;
  s.rbw = step;
  s.powers_dbm.assign(n, floor_dbm);
  return s;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ChainState noiseless_default() {
  auto st = ChainState::defaults();
  st.analysis.noiseless = true;
  return st;
}

}  // namespace

TEST_CASE("spectrum CSV round trip") {
  auto s = flat(5, -120.0, 196e6, 0.5);
  s.powers_dbm[2] = -60.25;
  s.powers_dbm[3] = -std::numeric_limits<double>::infinity();
  s.metadata["seed"] = "42";
  s.set_meta("f_carrier_hz", 196e6 + 1.0);

  std::ostringstream out;
  write_spectrum_csv(out, s);
  std::istringstream in(out.str());
  const Spectrum back = read_spectrum_csv(in);
  CHECK(back.size() == 5);
  CHECK(back.f_start == s.f_start);
  CHECK(back.f_step == s.f_step);
  CHECK(back.rbw == 0.5);
  CHECK(back.powers_dbm[2] == -60.25);
  CHECK(std::isinf(back.powers_dbm[3]));
  CHECK(back.metadata.at("seed") == "42");
  CHECK(back.meta_number("f_carrier_hz").value() == 196e6 + 1.0);

  std::ostringstream again;
  write_spectrum_csv(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("spectrum CSV errors") {
  auto expect_line = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      read_spectrum_csv(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_line("#rbw_hz=1\nfrequency_hz,power_dbm\n1,-100\n2,oops\n", 4);
  expect_line("#rbw_hz=1\nfrequency_hz,power_dbm\n1,-100\n1,-100\n", 4);
  expect_line("#rbw_hz=1\nfrequency_hz,power_dbm\n1,-100\n2\n", 4);
  expect_line("#rbw_hz=1\nfrequency_hz,power_dbm\n1,-100\n#late=1\n", 4);

  std::istringstream no_rbw("frequency_hz,power_dbm\n1,-100\n2,-100\n");
  CHECK_THROWS_AS(read_spectrum_csv(no_rbw), ParseError);
  std::istringstream uneven("#rbw_hz=1\nfrequency_hz,power_dbm\n1,-100\n2,-100\n4,-100\n");
  CHECK_THROWS_AS(read_spectrum_csv(uneven), ParseError);
  std::istringstream empty("#rbw_hz=1\nfrequency_hz,power_dbm\n");
  CHECK_THROWS_AS(read_spectrum_csv(empty), ParseError);

  auto s = flat(3, -100.0);
  try {
    require_metadata(s, {"f_carrier_hz", "f_mod_hz"});
    FAIL("expected missing metadata");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("f_carrier_hz") != std::string::npos);
    CHECK(std::string(e.what()).find("f_mod_hz") != std::string::npos);
  }
  CHECK_THROWS_AS(load_spectrum_csv("/nonexistent/spectrum.csv"), IoError);
}

TEST_CASE("spectrum invariants") {
  auto s = flat(10, -100.0);
  CHECK_NOTHROW(s.validate());
  CHECK(s.nearest_bin(1e6 + 3.4) == 3);
  CHECK_THROWS_AS(s.nearest_bin(1e6 + 20.0), DomainError);
  s.f_step = 0.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = flat(10, -100.0);
  s.rbw = -1.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = flat(0, -100.0);
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("noiseless synthesis with no modulation has a single line") {
  auto st = noiseless_default();
  st.drive.carrier_frequency = 196e6;
  st.drive.modulation.amplitude = 0.0;
  const auto s = synthesize_spectrum(st, 1);
  const double floor = *std::min_element(s.powers_dbm.begin(), s.powers_dbm.end());
  int lines = 0;
  std::size_t where = 0;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s.powers_dbm[k] > floor) {
      ++lines;
      where = k;
    }
  CHECK(lines == 1);
  CHECK(s.frequency(where) == 196e6);
  CHECK(s.size() % 2 == 1);
  CHECK(s.frequency(s.size() / 2) == 196e6);
}

TEST_CASE("synthesis is deterministic per seed") {
  auto st = ChainState::defaults();
  const auto a = synthesize_spectrum(st, 5);
  const auto b = synthesize_spectrum(st, 5);
  const auto c = synthesize_spectrum(st, 6);
  CHECK(a.powers_dbm == b.powers_dbm);
  CHECK(a.powers_dbm != c.powers_dbm);
  std::ostringstream sa, sb;
  write_spectrum_csv(sa, a);
  write_spectrum_csv(sb, b);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("doubling the modulation raises the sidebands by 6.02 dB") {
  auto st = noiseless_default();
  st.drive.modulation.amplitude = 20e-6;
  const auto r1 = evaluate_chain(st);
  st.drive.modulation.amplitude = 40e-6;
  const auto r2 = evaluate_chain(st);
  CHECK(std::abs(power_ratio_to_db(r2.sideband_power / r1.sideband_power) - 6.0206) < 1e-3);
  CHECK(rel_err(*r2.delta_c, 2.0 * *r1.delta_c) < 1e-9);

  // Same check on the synthesized traces, line power above the known floor.
  st.drive.modulation.amplitude = 20e-6;
  const auto s1 = synthesize_spectrum(st, 0);
  st.drive.modulation.amplitude = 40e-6;
  const auto s2 = synthesize_spectrum(st, 0);
  const std::size_t k = s1.nearest_bin(r1.carrier_frequency + st.drive.modulation.frequency);
  const double floor = dbm_to_watts(s1.powers_dbm[0]);
  const double l1 = dbm_to_watts(s1.powers_dbm[k]) - floor;
  const double l2 = dbm_to_watts(s2.powers_dbm[k]) - floor;
  CHECK(std::abs(power_ratio_to_db(l2 / l1) - 6.0206) < 1e-3);

  // Sideband amplitude from direct arithmetic on the chain quantities.
  const double carrier_v = std::sqrt(r1.p_incident * r1.chain_gain * r1.compression * r1.compression);
  const double sb_v = 0.5 * std::abs(r1.gamma_slope) * std::numbers::sqrt2 * *r1.delta_c * carrier_v;
  CHECK(rel_err(r1.sideband_power, sb_v * sb_v) < 1e-9);
}

TEST_CASE("SNR of an injected line") {
  auto s = flat(401, -120.0);
  s.powers_dbm[200] = -90.0;
  const auto m = measure_snr(s, s.frequency(200));
  CHECK(std::abs(m.snr_db - 30.0) < 1e-9);
  CHECK(m.delta_f == 1.0);
  CHECK_FALSE(m.flagged);
  CHECK(m.noise_bins == 401 - 7);

  // Peak searched over +-1 bin.
  CHECK(std::abs(measure_snr(s, s.frequency(201)).snr_db - 30.0) < 1e-9);

  auto quiet = flat(401, -120.0);
  CHECK(measure_snr(quiet, quiet.frequency(200)).flagged);

  auto tiny = flat(15, -120.0);
  CHECK_THROWS_AS(measure_snr(tiny, tiny.frequency(7)), DomainError);
}

TEST_CASE("property: SNR invariant under a constant dB offset") {
  testing::Gen gen(41);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = flat(301, -130.0);
    for (auto& p : s.powers_dbm) p += gen.uniform(-3.0, 3.0);
    s.powers_dbm[150] = gen.uniform(-125.0, -80.0);
    const double before = measure_snr(s, s.frequency(150)).snr_db;
    const double offset = gen.uniform(-50.0, 50.0);
    for (auto& p : s.powers_dbm) p += offset;
    CHECK(std::abs(measure_snr(s, s.frequency(150)).snr_db - before) < 1e-9);
  }
}

TEST_CASE("sideband pair measurement excludes the carrier and mirror") {
  auto s = flat(20001, -120.0, 196e6 - 10000.0);
  const std::size_t c = 10000;
  s.powers_dbm[c] = -20.0;
  s.powers_dbm[c - 3000] = -80.0;
  s.powers_dbm[c + 3000] = -84.0;
  const auto pair = measure_sidebands(s, 196e6, 3000.0);
  CHECK(std::abs(pair.lower.snr_db - 40.0) < 1e-9);
  CHECK(std::abs(pair.upper.snr_db - 36.0) < 1e-9);
  CHECK(std::abs(pair.snr_db - 38.0) < 1e-9);
  CHECK(pair.lower.noise_bins == 2701 - 7);
}

TEST_CASE("median floor is corrected for exponential statistics") {
  auto st = ChainState::defaults();
  auto s = synthesize_spectrum(st, 3);
  const auto r = evaluate_chain(st);
  const double f_sb = r.carrier_frequency + st.drive.modulation.frequency;
  const auto with = measure_snr(s, f_sb);
  s.metadata.erase("noise_statistics");
  const auto without = measure_snr(s, f_sb);
  CHECK(std::abs((without.snr_db - with.snr_db) - power_ratio_to_db(1.0 / std::numbers::ln2)) < 1e-9);
}

TEST_CASE("round trip over 32 seeds recovers the analytic SNR") {
  auto st = ChainState::defaults();
  const auto r = evaluate_chain(st);
  const double expected = r.expected_snr_db(st.analysis.rbw);
  std::vector<double> snr;
  for (std::uint64_t seed = 0; seed < 32; ++seed)
    snr.push_back(measure_chain(st, seed).snr.snr_db);
  CHECK(std::abs(median_of(snr) - expected) < 0.5);
}

TEST_CASE("property: random linear-regime chains round trip S_C within 20 %") {
  testing::Gen gen(42);
  for (int trial = 0; trial < 6; ++trial) {
    auto st = ChainState::defaults();
    st.drive.p1_dbm = gen.uniform(-55.0, -33.0);
    st.drive.modulation.amplitude = gen.log_uniform(20e-6, 200e-6);
    st.squid.base_noise_temperature = gen.uniform(0.3, 1.5);
    const auto r = evaluate_chain(st);
    REQUIRE(r.regime == Regime::linear);
    const double expected_sc =
        capacitance_sensitivity(r.expected_snr_db(st.analysis.rbw), st.analysis.rbw, *r.delta_c);
    std::vector<double> sc;
    for (std::uint64_t seed = 0; seed < 32; ++seed)
      sc.push_back(*measure_chain(st, mix_seed(seed, trial)).sensitivity.s_c);
    CHECK(rel_err(median_of(sc), expected_sc) < 0.2);
  }
}

TEST_CASE("analytic S_C matches the closed-form noise budget") {
  auto st = noiseless_default();
  const auto r = evaluate_chain(st);
  // S_C = sqrt(k T_N / (P_inc g)) / (|dGamma/dC| c) with g the tank-to-squid gain.
  const double analytic = std::sqrt(phys::kBoltzmann * r.t_n / r.p_incident) /
                          (std::abs(r.gamma_slope) * r.compression);
  const double from_snr =
      capacitance_sensitivity(r.expected_snr_db(1.0), 1.0, *r.delta_c);
  CHECK(rel_err(from_snr, analytic) < 1e-9);
}

TEST_CASE("sensitivity formula examples") {
  CHECK(rel_err(capacitance_sensitivity(0.0, 0.5, 6.7e-18), 6.7e-18) < 1e-15);
  CHECK(rel_err(capacitance_sensitivity(20.0, 50.0, 6.7e-18), 0.067e-18) < 1e-12);
  CHECK(rel_err(capacitance_sensitivity(20.0 * std::log10(2.0), 0.5, 6.7e-18), 0.5 * 6.7e-18) < 1e-12);
  CHECK_THROWS_AS(capacitance_sensitivity(10.0, 0.0, 1e-18), DomainError);
  CHECK_THROWS_AS(capacitance_sensitivity(10.0, 1.0, 0.0), DomainError);

  CHECK(rel_err(charge_sensitivity(0.0, 0.5, kE), 1.0) < 1e-15);
  const double sq = charge_sensitivity(66.0, 0.5, 0.1178 * kE);
  CHECK(rel_err(sq, 0.1178 * std::pow(10.0, -3.3)) < 1e-12);
  CHECK(std::abs(sq - 59e-6) < 0.5e-6);
  CHECK_THROWS_AS(charge_sensitivity(10.0, -1.0, kE), DomainError);

  const double ss = oscillating_charge_sensitivity(0.07e-18, 60e-6);
  CHECK(std::abs(ss - 5.9e-24) < 0.05e-24);
  const double ss31 = oscillating_charge_sensitivity(0.07e-18, v0_from_power(-31.0));
  CHECK(std::abs(ss31 / kE - 9.4e-5) < 0.05e-5);
  CHECK(ss31 / kE < 1e-4);
  CHECK_THROWS_AS(oscillating_charge_sensitivity(1e-18, 0.0), DomainError);

  testing::Gen gen(43);
  for (int i = 0; i < 200; ++i) {
    const double snr = gen.uniform(-10.0, 80.0), df = gen.log_uniform(0.1, 1e3);
    const double k = gen.log_uniform(1e-3, 1e3);
    const double x = gen.log_uniform(1e-20, 1e-16);
    CHECK(rel_err(capacitance_sensitivity(snr, df, k * x), k * capacitance_sensitivity(snr, df, x)) < 1e-12);
    CHECK(rel_err(charge_sensitivity(snr, df, k * x * 1e-2), k * charge_sensitivity(snr, df, x * 1e-2)) <
          1e-12);
    CHECK(rel_err(oscillating_charge_sensitivity(x, k * 1e-4), k * oscillating_charge_sensitivity(x, 1e-4)) <
          1e-12);
    CHECK(rel_err(capacitance_sensitivity(snr + 20.0, df, x), 0.1 * capacitance_sensitivity(snr, df, x)) <
          1e-12);
  }
}

TEST_CASE("demodulation and V0 map") {
  CHECK(demodulate(2.0, 0.3, 0.3) == 2.0);
  CHECK(std::abs(demodulate(2.0, 0.3 + std::numbers::pi / 2, 0.3)) < 1e-15);
  testing::Gen gen(44);
  for (int i = 0; i < 100; ++i) {
    const double a = gen.uniform(0.0, 5.0), ph = gen.uniform(-10.0, 10.0), lo = gen.uniform(-3.0, 3.0);
    CHECK(std::abs(demodulate(a, ph, lo) + demodulate(a, ph + std::numbers::pi, lo)) < 1e-12);
  }

  CHECK(v0_from_power(-29.0) == 192e-6);
  CHECK(rel_err(v0_from_power(-49.0), 19.2e-6) < 1e-12);
  CHECK(std::abs(v0_from_power(-31.0) - 152.6e-6) < 0.1e-6);
  CHECK(rel_err(sensitivity_uncertainty(), std::pow(10.0, 0.025) - 1.0) < 1e-15);
}

TEST_CASE("gate modulation conductance swing") {
  const auto dot = DotModel::placeholder();
  const double v_l = dot.peak_positions[0] - 0.6585 * dot.thermal_width();
  const double dv = 1e-7;
  CHECK(rel_err(conductance_modulation(dot, v_l, 0.0, dv), std::abs(conductance_slope(dot, v_l)) * dv) <
        1e-6);
  CHECK(conductance_modulation(dot, v_l, 0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(conductance_modulation(dot, v_l, 0.0, -1e-6), DomainError);
  // Large swings spill into harmonics: the first harmonic grows sublinearly.
  const double small = conductance_modulation(dot, v_l, 0.0, 20e-6);
  const double large = conductance_modulation(dot, v_l, 0.0, 400e-6);
  CHECK(large < 20.0 * small);
}

TEST_CASE("chain validation rejects unresolvable sidebands") {
  auto st = ChainState::defaults();
  CHECK_NOTHROW(st.validate());
  st.analysis.rbw = 400.0;
  CHECK_THROWS_AS(st.validate(), ConfigError);
  st = ChainState::defaults();
  st.analysis.span = 5000.0;
  CHECK_THROWS_AS(st.validate(), ConfigError);
  st = ChainState::defaults();
  st.drive.v_s = 50.0;
  CHECK_THROWS_AS(st.validate(), ConfigError);
}

TEST_CASE("stability map homodyne output") {
  auto st = ChainState::defaults();
  const auto map = stability_map(st, {-0.36, -0.35, 41}, {-1e-3, 1e-3, 5});
  REQUIRE(map.v_d.size() == map.grid.size());
  // Deep blockade gives the open-circuit reflection, in phase with the LO.
  double max_vd = 0.0, min_vd = 1e9;
  for (double v : map.v_d) {
    max_vd = std::max(max_vd, v);
    min_vd = std::min(min_vd, v);
  }
  CHECK(max_vd > min_vd);
}

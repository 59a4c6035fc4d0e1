#include "rflect/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "rflect/error.hpp"
#include "rflect/format.hpp"

namespace rflect {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// strtod rather than from_chars so that "inf" / "-inf" written for empty bins
// round-trip on every standard library.
std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

}  // namespace

void Spectrum::validate() const {
  if (!(f_step > 0.0) || !std::isfinite(f_step)) throw DomainError("spectrum: f_step must be positive");
  if (!(rbw > 0.0) || !std::isfinite(rbw)) throw DomainError("spectrum: rbw must be positive");
  if (powers_dbm.empty()) throw DomainError("spectrum: no bins");
  if (!std::isfinite(f_start)) throw DomainError("spectrum: f_start must be finite");
}

bool Spectrum::contains(double f) const {
  const double half = 0.5 * f_step;
  return f >= f_start - half && f <= f_stop() + half;
}

std::size_t Spectrum::nearest_bin(double f) const {
  if (powers_dbm.empty() || !contains(f))
    throw DomainError("frequency " + format_number(f) + " Hz outside the spectrum span");
  const double k = std::round((f - f_start) / f_step);
  if (k <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(k), size() - 1);
}

std::optional<double> Spectrum::meta_number(const std::string& key) const {
  const auto it = metadata.find(key);
  if (it == metadata.end()) return std::nullopt;
  return parse_double(it->second);
}

void Spectrum::set_meta(const std::string& key, double value) {
  metadata[key] = format_number(value);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  for (const auto& [key, value] : s.metadata) {
    if (key == "rbw_hz" || key == "f_start_hz" || key == "f_step_hz") continue;
    out << '#' << key << '=' << value << '\n';
  }
  out << "#rbw_hz=" << format_number(s.rbw) << '\n';
  out << "#f_start_hz=" << format_number(s.f_start) << '\n';
  out << "#f_step_hz=" << format_number(s.f_step) << '\n';
  out << "frequency_hz,power_dbm\n";
  for (std::size_t k = 0; k < s.size(); ++k)
    out << format_number(s.frequency(k)) << ',' << format_number(s.powers_dbm[k]) << '\n';
}

Spectrum read_spectrum_csv(std::istream& in) {
  Spectrum s;
  std::vector<double> freqs;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      if (header_seen) throw ParseError(line_no, "metadata line after the column header");
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(line_no, "metadata line without '='");
      const std::string key = trim(t.substr(1, eq - 1));
      if (key.empty()) throw ParseError(line_no, "empty metadata key");
      s.metadata[key] = trim(t.substr(eq + 1));
      continue;
    }
    if (!header_seen) {
      if (t.rfind("frequency_hz", 0) != 0)
        throw ParseError(line_no, "expected header 'frequency_hz,power_dbm'");
      header_seen = true;
      continue;
    }
    const auto comma = t.find(',');
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos)
      throw ParseError(line_no, "expected two comma-separated columns");
    const auto f = parse_double(t.substr(0, comma));
    const auto p = parse_double(t.substr(comma + 1));
    if (!f || !std::isfinite(*f)) throw ParseError(line_no, "bad frequency value");
    if (!p || std::isnan(*p) || (std::isinf(*p) && *p > 0.0)) throw ParseError(line_no, "bad power value");
    if (!freqs.empty() && !(*f > freqs.back()))
      throw ParseError(line_no, "frequencies must be strictly increasing");
    freqs.push_back(*f);
    s.powers_dbm.push_back(*p);
  }
  if (!header_seen) throw ParseError(0, "missing column header 'frequency_hz,power_dbm'");
  if (freqs.empty()) throw ParseError(0, "spectrum has no data rows");

  require_metadata(s, {"rbw_hz"});
  const auto rbw = s.meta_number("rbw_hz");
  if (!rbw) throw ParseError(0, "rbw_hz is not a number");
  s.rbw = *rbw;

  const auto step = s.meta_number("f_step_hz");
  if (step) {
    s.f_step = *step;
  } else if (freqs.size() >= 2) {
    s.f_step = (freqs.back() - freqs.front()) / static_cast<double>(freqs.size() - 1);
  } else {
    s.f_step = s.rbw;
  }
  s.f_start = s.meta_number("f_start_hz").value_or(freqs.front());
  if (!(s.f_step > 0.0)) throw ParseError(0, "f_step_hz must be positive");
  if (!(s.rbw > 0.0)) throw ParseError(0, "rbw_hz must be positive");
  // Rows must sit on the uniform grid the analysis assumes.
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (std::abs(freqs[k] - s.frequency(k)) > 1e-3 * s.f_step)
      throw ParseError(0, "row " + std::to_string(k + 1) + " is off the uniform frequency grid");
  }
  return s;
}

void require_metadata(const Spectrum& s, const std::vector<std::string>& keys) {
  std::string missing;
  for (const auto& key : keys) {
    if (s.metadata.count(key)) continue;
    if (!missing.empty()) missing += ", ";
    missing += key;
  }
  if (!missing.empty()) throw ParseError(0, "missing metadata keys: " + missing);
}

Spectrum load_spectrum_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spectrum file " + path.string());
  return read_spectrum_csv(in);
}

void save_spectrum_csv(const std::filesystem::path& path, const Spectrum& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_spectrum_csv(out, s);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace rflect

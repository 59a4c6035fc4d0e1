#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rflect {

/// Power trace on a uniform frequency grid, one bin per resolution bandwidth
/// or finer. Powers are in dBm; empty bins of noiseless traces hold -inf.
struct Spectrum {
  double f_start = 0.0;
  double f_step = 1.0;
  double rbw = 1.0;
  std::vector<double> powers_dbm;
  std::map<std::string, std::string> metadata;

  void validate() const;
  std::size_t size() const { return powers_dbm.size(); }
  double frequency(std::size_t bin) const { return f_start + f_step * static_cast<double>(bin); }
  double f_stop() const { return frequency(size() - 1); }
  bool contains(double f) const;
  /// Bin closest to `f`; throws DomainError outside the span.
  std::size_t nearest_bin(double f) const;

  std::optional<double> meta_number(const std::string& key) const;
  void set_meta(const std::string& key, double value);
};

/// '#key=value' metadata lines, then a "frequency_hz,power_dbm" header and rows.
void write_spectrum_csv(std::ostream& out, const Spectrum& s);

/// Accepts the format written above. rbw_hz metadata is mandatory; f_start_hz
/// and f_step_hz default to the values implied by the rows. Missing keys and
/// malformed rows raise ParseError (the latter with the offending line).
Spectrum read_spectrum_csv(std::istream& in);
Spectrum load_spectrum_csv(const std::filesystem::path& path);
void save_spectrum_csv(const std::filesystem::path& path, const Spectrum& s);

/// Throws ParseError naming every key in `keys` absent from the metadata.
void require_metadata(const Spectrum& s, const std::vector<std::string>& keys);

}  // namespace rflect

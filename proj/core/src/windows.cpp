#include "chronofuse/windows.hpp"

#include <algorithm>
#include <fstream>

#include "chronofuse/errors.hpp"
#include "chronofuse/tokenizer.hpp"

namespace chronofuse {

std::string anchor_kind_name(AnchorKind k) {
  return k == AnchorKind::kEcgRelative ? "ecg_relative" : "admission_relative";
}

AnchorKind anchor_kind_from_name(const std::string& name) {
  if (name == "ecg_relative") return AnchorKind::kEcgRelative;
  if (name == "admission_relative") return AnchorKind::kAdmissionRelative;
  throw ConfigError("unknown anchor kind '" + name + "'");
}

int TimeWindowScheme::raw_window_of(double dt) const {
  const int count = window_count();
  if (count < 1) throw SchemeError("scheme has no windows");
  // Interior boundaries are boundaries[1..count-1]; the outermost two act
  // as -inf/+inf so out-of-range dt clamps to the edge windows.
  int w = 0;
  for (int k = 1; k < count; ++k)
    if (boundaries[static_cast<std::size_t>(k)] <= dt) ++w;
  return w;
}

int TimeWindowScheme::chronological_of(int raw_window) const {
  const int count = window_count();
  if (raw_window < 0 || raw_window >= count)
    throw IndexError("window index " + std::to_string(raw_window) +
                     " outside [0," + std::to_string(count) + ")");
  return anchor == AnchorKind::kEcgRelative ? count - 1 - raw_window
                                            : raw_window;
}

double TimeWindowScheme::dt_of(double event_timestamp,
                               double anchor_timestamp) const {
  return anchor == AnchorKind::kEcgRelative
             ? anchor_timestamp - event_timestamp
             : event_timestamp - anchor_timestamp;
}

void TimeWindowScheme::verify_fingerprint(std::uint64_t expected) const {
  if (fitted_on != expected)
    throw LeakError("window scheme fitted on split " +
                    std::to_string(fitted_on) + " used with split " +
                    std::to_string(expected));
}

TimeWindowScheme build_time_windows(std::vector<double> training_dts,
                                    const std::vector<double>& percentiles,
                                    AnchorKind anchor,
                                    std::uint64_t fitted_on) {
  if (training_dts.empty())
    throw SchemeError("cannot fit time windows on zero observations");
  if (percentiles.size() < 2)
    throw ConfigError("need at least two percentiles");
  for (std::size_t i = 1; i < percentiles.size(); ++i)
    if (percentiles[i] <= percentiles[i - 1])
      throw ConfigError("percentiles must be strictly increasing");
  std::sort(training_dts.begin(), training_dts.end());
  TimeWindowScheme s;
  s.anchor = anchor;
  s.percentiles = percentiles;
  s.fitted_on = fitted_on;
  s.boundaries.reserve(percentiles.size());
  for (double p : percentiles)
    s.boundaries.push_back(empirical_quantile(training_dts, p / 100.0));
  return s;
}

std::vector<double> ecg_anchor_percentiles() {
  return {0, 5, 10, 20, 40, 80, 100};
}

std::vector<double> decile_percentiles() {
  return {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
}

void save_scheme(const TimeWindowScheme& scheme, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "scheme v1\n";
  os << "anchor " << anchor_kind_name(scheme.anchor) << "\n";
  os << "fitted_on " << scheme.fitted_on << "\n";
  os << std::hexfloat;
  os << "percentiles " << scheme.percentiles.size();
  for (double p : scheme.percentiles) os << " " << p;
  os << "\nboundaries " << scheme.boundaries.size();
  for (double b : scheme.boundaries) os << " " << b;
  os << "\n";
  if (!os) throw IoError("write failed for '" + path + "'");
}

TimeWindowScheme load_scheme(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  std::getline(is, header);
  if (header != "scheme v1")
    throw MigrationError("unsupported scheme file header '" + header + "'");
  TimeWindowScheme s;
  std::string key, anchor_name;
  if (!(is >> key >> anchor_name) || key != "anchor")
    throw ParseError("scheme file: expected 'anchor'");
  s.anchor = anchor_kind_from_name(anchor_name);
  if (!(is >> key >> s.fitted_on) || key != "fitted_on")
    throw ParseError("scheme file: expected 'fitted_on'");
  auto read_list = [&](const char* name, std::vector<double>& out) {
    std::size_t n = 0;
    if (!(is >> key >> n) || key != name)
      throw ParseError(std::string("scheme file: expected '") + name + "'");
    out.resize(n);
    for (double& x : out) {
      std::string tok;
      if (!(is >> tok)) throw ParseError("scheme file: truncated list");
      x = std::strtod(tok.c_str(), nullptr);
    }
  };
  read_list("percentiles", s.percentiles);
  read_list("boundaries", s.boundaries);
  return s;
}

}  // namespace chronofuse

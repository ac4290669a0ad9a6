#include "arpsim/csv.hpp"

#include <algorithm>
#include <charconv>
#include <iterator>
#include <cmath>
#include <istream>
#include <ostream>

#include "arpsim/errors.hpp"

namespace arp {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  }
  return out;
}

double to_double(const std::string& s, std::size_t line, const char* col) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(std::string("cannot parse ") + col + " '" + s + "'", line);
  if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + col, line);
  return v;
}

int to_int(const std::string& s, std::size_t line, const char* col) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError(std::string("cannot parse ") + col + " '" + s + "'", line);
  return v;
}

// Calls row(fields, line) for each data row after checking the header.
template <class F>
void read_table(std::istream& in, const std::string& header, std::size_t ncols, F&& row) {
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header) throw ParseError("expected header '" + header + "'", lineno);
      seen_header = true;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != ncols)
      throw ParseError("expected " + std::to_string(ncols) + " columns, got " +
                           std::to_string(fields.size()),
                       lineno);
    row(fields, lineno);
  }
  if (!seen_header) throw ParseError("missing header '" + header + "'", lineno);
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_provenance(std::ostream& os, const Provenance& p) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(p.config_hash));
  os << "# arpsim " << ARPSIM_VERSION << "\n# config_hash=" << hash << "\n# seed=" << p.seed
     << '\n';
}

void write_sweeps_csv(std::ostream& os, const std::vector<SweepRow>& rows, const Provenance& p) {
  write_provenance(os, p);
  os << kSweepsHeader << '\n';
  for (const auto& r : rows)
    os << format_number(r.sweep_time_s) << ',' << format_number(r.r_up) << ',' << r.shots << ','
       << format_number(r.power_dbm) << '\n';
}

std::vector<SweepRow> read_sweeps_csv(std::istream& in) {
  std::vector<SweepRow> rows;
  read_table(in, kSweepsHeader, 4, [&](const std::vector<std::string>& f, std::size_t line) {
    SweepRow r{to_double(f[0], line, "sweep_time_s"), to_double(f[1], line, "r_up"),
               to_int(f[2], line, "shots"), to_double(f[3], line, "power_dbm")};
    if (!(r.sweep_time_s > 0.0)) throw ParseError("sweep_time_s must be > 0", line);
    if (!(r.r_up >= 0.0 && r.r_up <= 1.0)) throw ParseError("r_up must lie in [0, 1]", line);
    if (r.shots < 1) throw ParseError("shots must be >= 1", line);
    rows.push_back(r);
  });
  return rows;
}

void write_spectra_csv(std::ostream& os, const std::vector<SpectrumRow>& rows, const Provenance& p) {
  write_provenance(os, p);
  os << kSpectraHeader << '\n';
  for (const auto& r : rows)
    os << format_number(r.freq_hz) << ',' << format_number(r.r_up) << ',' << r.shots << ','
       << r.snapshot_index << ',' << format_number(r.wallclock_min) << '\n';
}

std::vector<SpectrumRow> read_spectra_csv(std::istream& in) {
  std::vector<SpectrumRow> rows;
  read_table(in, kSpectraHeader, 5, [&](const std::vector<std::string>& f, std::size_t line) {
    SpectrumRow r{to_double(f[0], line, "freq_hz"), to_double(f[1], line, "r_up"),
                  to_int(f[2], line, "shots"), to_int(f[3], line, "snapshot_index"),
                  to_double(f[4], line, "wallclock_min")};
    if (!(r.r_up >= 0.0 && r.r_up <= 1.0)) throw ParseError("r_up must lie in [0, 1]", line);
    if (r.shots < 1) throw ParseError("shots must be >= 1", line);
    if (r.snapshot_index < 0) throw ParseError("snapshot_index must be >= 0", line);
    rows.push_back(r);
  });
  return rows;
}

std::vector<SweepDataset> group_sweeps(const std::vector<SweepRow>& rows, double span,
                                       double center_offset, double attenuation_db) {
  std::vector<SweepDataset> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SweepDataset& d) { return d.power.p_mw_dbm == r.power_dbm; });
    if (it == out.end()) {
      SweepDataset d;
      d.power = {r.power_dbm, attenuation_db};
      d.protocol_span = span;
      d.center_offset = center_offset;
      out.push_back(d);
      it = std::prev(out.end());
    }
    it->points.push_back({r.sweep_time_s, r.r_up, r.shots});
  }
  return out;
}

void write_report(std::ostream& os, const Report& r, const Provenance& p) {
  write_provenance(os, p);
  for (const auto& [k, v] : r) os << k << " = " << v << '\n';
}

}  // namespace arp

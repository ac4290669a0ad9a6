#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "arpsim/estimation.hpp"
#include "arpsim/spectrum.hpp"

namespace arp {

inline constexpr const char* kSweepsHeader = "sweep_time_s,r_up,shots,power_dbm";
inline constexpr const char* kSpectraHeader = "freq_hz,r_up,shots,snapshot_index,wallclock_min";

struct Provenance {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

// "# ..." comment block carried by every emitted CSV.
void write_provenance(std::ostream& os, const Provenance& p);

// Shortest round-trippable text for a double.
std::string format_number(double v);

struct SweepRow {
  double sweep_time_s = 0.0;
  double r_up = 0.0;
  int shots = 1;
  double power_dbm = 0.0;
};

void write_sweeps_csv(std::ostream& os, const std::vector<SweepRow>& rows, const Provenance& p);
std::vector<SweepRow> read_sweeps_csv(std::istream& in);

void write_spectra_csv(std::ostream& os, const std::vector<SpectrumRow>& rows, const Provenance& p);
std::vector<SpectrumRow> read_spectra_csv(std::istream& in);

// Groups rows by power_dbm in order of first appearance.
std::vector<SweepDataset> group_sweeps(const std::vector<SweepRow>& rows, double span,
                                       double center_offset, double attenuation_db);

using Report = std::vector<std::pair<std::string, std::string>>;
void write_report(std::ostream& os, const Report& r, const Provenance& p);

}  // namespace arp

#include "arpsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "arpsim/errors.hpp"

namespace arp {

namespace {

using Field = std::variant<double RunConfig::*, int RunConfig::*, std::uint64_t RunConfig::*,
                           std::string RunConfig::*>;

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = {
      {"b0", &RunConfig::b0},
      {"a_hf", &RunConfig::a_hf},
      {"gamma_e", &RunConfig::gamma_e},
      {"t2", &RunConfig::t2},
      {"dephasing_convention", &RunConfig::dephasing_convention},
      {"f_up", &RunConfig::f_up},
      {"background", &RunConfig::background},
      {"shots", &RunConfig::shots},
      {"span", &RunConfig::span},
      {"attenuation_db", &RunConfig::attenuation_db},
      {"rel_tol", &RunConfig::rel_tol},
      {"abs_tol", &RunConfig::abs_tol},
      {"max_step_fraction", &RunConfig::max_step_fraction},
      {"snapshot_fwhm", &RunConfig::snapshot_fwhm},
      {"snapshot_amplitude", &RunConfig::snapshot_amplitude},
      {"splitting", &RunConfig::splitting},
      {"peak_fwhm", &RunConfig::peak_fwhm},
      {"n_spectra", &RunConfig::n_spectra},
      {"minutes_per_spectrum", &RunConfig::minutes_per_spectrum},
      {"drift_correlation_min", &RunConfig::drift_correlation_min},
      {"freq_halfwidth", &RunConfig::freq_halfwidth},
      {"freq_points", &RunConfig::freq_points},
      {"seed", &RunConfig::seed},
      {"output_dir", &RunConfig::output_dir},
  };
  return f;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ParseError("bad value '" + v + "' for " + key, 0);
  if constexpr (std::is_floating_point_v<T>)
    if (std::isnan(out)) throw ParseError("NaN not allowed for " + key, 0);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ParseError("unknown config key '" + key + "'", 0);
  const std::string v = trim(value);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          if (key == "dephasing_convention" && v != "paper" && v != "conventional")
            throw ParseError("dephasing_convention must be 'paper' or 'conventional', got '" + v + "'", 0);
          this->*member = v;
        } else
          this->*member = parse_number<T>(key, v);
      },
      it->second);
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ParseError("unknown config key '" + key + "'", 0);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>)
          return this->*member;
        else if constexpr (std::is_same_v<T, double>)
          return format_double(this->*member);
        else
          return std::to_string(this->*member);
      },
      it->second);
}

void RunConfig::load(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto sep = line.find('=');
    if (sep == std::string::npos) sep = line.find_first_of(" \t");
    if (sep == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    try {
      set(trim(line.substr(0, sep)), line.substr(sep + 1));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path, 0);
  load(in);
}

void RunConfig::validate() const {
  constants().validate();
  spin_params(0.0).validate();
  readout().validate();
  if (!(background <= f_up)) throw DomainError("background must not exceed f_up");
  if (dephasing_convention != "paper" && dephasing_convention != "conventional")
    throw DomainError("dephasing_convention must be 'paper' or 'conventional'");
  if (!(span > 0.0)) throw DomainError("span must be > 0");
  if (!(attenuation_db >= 0.0)) throw DomainError("attenuation_db must be >= 0");
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("tolerances must be > 0");
  if (!(max_step_fraction > 0.0 && max_step_fraction <= 1.0))
    throw DomainError("max_step_fraction must lie in (0, 1]");
  if (!(snapshot_fwhm > 0.0) || !(peak_fwhm >= snapshot_fwhm))
    throw DomainError("need 0 < snapshot_fwhm <= peak_fwhm");
  if (!(splitting >= 0.0)) throw DomainError("splitting must be >= 0");
  if (!(snapshot_amplitude >= 0.0 && snapshot_amplitude <= 1.0))
    throw DomainError("snapshot_amplitude must lie in [0, 1]");
  if (n_spectra < 1 || freq_points < 8) throw DomainError("need n_spectra >= 1, freq_points >= 8");
  if (!(minutes_per_spectrum > 0.0) || !(drift_correlation_min > 0.0) || !(freq_halfwidth > 0.0))
    throw DomainError("spectrum timing and grid widths must be > 0");
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto& k : keys())
    if (k != "output_dir") os << k << '=' << get(k) << '\n';
  return os.str();
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

PhysConstants RunConfig::constants() const { return {gamma_e}; }

SpinSystemParams RunConfig::spin_params(double nu1) const {
  SpinSystemParams p;
  p.b0 = b0;
  p.a_hf = a_hf;
  p.nu1 = nu1;
  p.t2 = t2;
  return p;
}

ReadoutModel RunConfig::readout() const {
  return ReadoutModel::from_background(f_up, background, shots);
}

EvolutionSettings RunConfig::evolution(double duration) const {
  EvolutionSettings e;
  e.rel_tol = rel_tol;
  e.abs_tol = abs_tol;
  e.max_step = duration * max_step_fraction;
  e.max_step_fraction = max_step_fraction;
  e.dephasing = dephasing_convention == "conventional" ? DephasingConvention::conventional
                                                       : DephasingConvention::paper;
  return e;
}

}  // namespace arp

// arpsim: command-line front end for the sweep, spectrum and fitting code.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arpsim/config.hpp"
#include "arpsim/csv.hpp"
#include "arpsim/dynamics.hpp"
#include "arpsim/errors.hpp"
#include "arpsim/estimation.hpp"
#include "arpsim/kernels.hpp"
#include "arpsim/lz.hpp"
#include "arpsim/readout.hpp"
#include "arpsim/spectrum.hpp"

namespace fs = std::filesystem;
using namespace arp;

namespace {

enum Exit { kOk = 0, kUsage = 2, kParse = 3, kNumeric = 4, kNoConvergence = 5 };

struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> spaced(double lo, double hi, int n, bool log) {
  if (n < 2) throw DomainError("--points must be >= 2");
  if (!(lo > 0.0 && hi > lo)) throw DomainError("need 0 < tmin < tmax");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) / (n - 1);
    v[static_cast<std::size_t>(i)] = log ? lo * std::pow(hi / lo, u) : lo + u * (hi - lo);
  }
  return v;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw DomainError("cannot write " + p.string());
  return os;
}

Provenance provenance(const RunConfig& c) { return {c.hash(), c.seed}; }

double drive_nu1(const std::optional<double>& b1, const std::optional<double>& nu1, const RunConfig& c) {
  if (nu1) return *nu1;
  return nu1_from_b1(*b1, c.constants());
}

// Fitted B1 at the two quoted powers; other powers follow the sqrt(P) law
// through them.
double reference_b1(double dbm, double attenuation) {
  if (dbm == -4.0) return 8.8e-6;
  if (dbm == 5.0) return 30e-6;
  const std::vector<PowerSetting> p{{-4.0, attenuation}, {5.0, attenuation}};
  const std::vector<double> b{8.8e-6, 30e-6};
  return fit_sqrtp_law(b, p).slope * std::sqrt(PowerSetting{dbm, attenuation}.delivered_mw());
}

double parse_power(std::string s) {
  const auto pos = s.find("dBm");
  if (pos != std::string::npos) s.erase(pos);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DomainError("bad --power '" + s + "'");
  }
  if (used != s.size()) throw DomainError("bad --power '" + s + "'");
  return v;
}

std::string tag_for(double dbm) {
  std::string t = format_number(dbm);
  std::replace(t.begin(), t.end(), '-', 'm');
  return t + "dBm";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adiabatic rapid passage simulation and fitting"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(ARPSIM_VERSION));

  std::string config_file;
  app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  std::map<std::string, std::string> overrides;
  for (const auto& key : RunConfig::keys())
    app.add_option("--" + key, overrides[key], "config override")->group("Config overrides");

  RunConfig cfg;
  auto resolve = [&] {
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& [k, v] : overrides)
      if (app.count("--" + k)) cfg.set(k, v);
    cfg.validate();
  };

  // lz-curve
  auto* lz = app.add_subcommand("lz-curve", "Landau-Zener up probability versus sweep time");
  std::optional<double> lz_b1, lz_nu1;
  double lz_tmin = 1e-7, lz_tmax = 50e-6;
  int lz_points = 200;
  std::string lz_spacing = "log", lz_out;
  auto* lz_b1_opt = lz->add_option("--b1", lz_b1, "rotating-frame B1 (T)");
  lz->add_option("--nu1", lz_nu1, "coupling nu1 (Hz)")->excludes(lz_b1_opt);
  lz->add_option("--tmin", lz_tmin, "shortest sweep time (s)");
  lz->add_option("--tmax", lz_tmax, "longest sweep time (s)");
  lz->add_option("--points", lz_points, "number of sweep times");
  lz->add_option("--spacing", lz_spacing)->check(CLI::IsMember({"lin", "log"}));
  lz->add_option("--out", lz_out, "output CSV (default stdout)");

  // simulate-sweep
  auto* sim = app.add_subcommand("simulate-sweep", "Integrate one sweep of the master equation");
  std::optional<double> sim_b1, sim_nu1;
  double sim_ts = 0.0, sim_offset = 0.0;
  std::string sim_direction = "up", sim_traj, sim_method = "adaptive";
  auto* sim_b1_opt = sim->add_option("--b1", sim_b1, "rotating-frame B1 (T)");
  sim->add_option("--nu1", sim_nu1, "coupling nu1 (Hz)")->excludes(sim_b1_opt);
  sim->add_option("--ts", sim_ts, "sweep time (s)")->required();
  sim->add_option("--offset", sim_offset, "sweep center minus resonance (Hz)");
  sim->add_option("--direction", sim_direction)->check(CLI::IsMember({"up", "down"}));
  sim->add_option("--method", sim_method)->check(CLI::IsMember({"adaptive", "fixed"}));
  sim->add_option("--trajectory", sim_traj, "write the density-matrix trajectory here");

  // reproduce-fig2
  auto* fig = app.add_subcommand("reproduce-fig2", "Ideal, dephased and measured sweep curves plus shot data");
  std::string fig_power;
  std::optional<double> fig_b1;
  int fig_points = 60;
  double fig_tmin = 1e-8, fig_tmax = 50e-6;
  fig->add_option("--power", fig_power, "source power, e.g. -4dBm or 5dBm")->required();
  fig->add_option("--b1", fig_b1, "override the B1 used for this power (T)");
  fig->add_option("--points", fig_points);
  fig->add_option("--tmin", fig_tmin);
  fig->add_option("--tmax", fig_tmax);

  // fit-sweeps
  auto* fs_cmd = app.add_subcommand("fit-sweeps", "Global fit of B1 per power, F_up and T2");
  std::vector<std::string> fs_data;
  std::string fs_t2_param = "log";
  int fs_max_iter = 100;
  fs_cmd->add_option("--data", fs_data, "sweeps CSV files")->required()->check(CLI::ExistingFile);
  fs_cmd->add_option("--t2-param", fs_t2_param)->check(CLI::IsMember({"log", "linear"}));
  fs_cmd->add_option("--max-iterations", fs_max_iter);

  // fit-spectrum
  auto* fsp = app.add_subcommand("fit-spectrum", "Two-Gaussian fit of the averaged spectrum");
  std::string fsp_data;
  fsp->add_option("--data", fsp_data, "spectra CSV")->required()->check(CLI::ExistingFile);

  // synth-spectra
  auto* syn = app.add_subcommand("synth-spectra", "Synthetic drifting spectra series");
  std::string syn_out;
  syn->add_option("--out", syn_out, "output CSV (default <output_dir>/spectra.csv)");

  // convert-fidelity
  auto* cf = app.add_subcommand("convert-fidelity", "Inversion fidelity from angle control fidelity");
  double cf_fc = 0.0;
  cf->add_option("--fc", cf_fc, "angle control fidelity")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    resolve();
    const fs::path out_dir = cfg.output_dir;

    if (*lz) {
      if (!lz_b1 && !lz_nu1) throw DomainError("lz-curve needs --b1 or --nu1");
      const double nu1 = drive_nu1(lz_b1, lz_nu1, cfg);
      const auto ts = spaced(lz_tmin, lz_tmax, lz_points, lz_spacing == "log");
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!lz_out.empty()) {
        file = open_out(lz_out);
        os = &file;
      }
      write_provenance(*os, provenance(cfg));
      *os << "sweep_time_s,p_up\n";
      for (double t : ts)
        *os << format_number(t) << ',' << format_number(inversion_prob_coherent(nu1, cfg.span / t)) << '\n';
      return kOk;
    }

    if (*sim) {
      if (!sim_b1 && !sim_nu1) throw DomainError("simulate-sweep needs --b1 or --nu1");
      SweepProtocol s{cfg.span, sim_ts, sim_offset,
                      sim_direction == "up" ? SweepDirection::up : SweepDirection::down};
      auto ev = cfg.evolution(sim_ts);
      ev.method = sim_method == "fixed" ? StepMethod::fixed : StepMethod::adaptive;
      ev.store_trajectory = !sim_traj.empty();
      const auto tr = evolve(DensityMatrix2::spin_down(), s, cfg.spin_params(drive_nu1(sim_b1, sim_nu1, cfg)), ev);
      const double p = std::clamp(tr.final_state().p_up(), 0.0, 1.0);
      if (!sim_traj.empty()) {
        auto os = open_out(sim_traj);
        write_provenance(os, provenance(cfg));
        write_trajectory_csv(os, tr);
      }
      write_report(std::cout,
                   {{"p_up", format_number(p)},
                    {"r_up", format_number(observe(p, cfg.readout()))},
                    {"accepted_steps", std::to_string(tr.accepted_steps)},
                    {"rejected_steps", std::to_string(tr.rejected_steps)}},
                   provenance(cfg));
      return kOk;
    }

    if (*fig) {
      const double dbm = parse_power(fig_power);
      const PowerSetting power{dbm, cfg.attenuation_db};
      power.validate();
      const double b1 = fig_b1 ? *fig_b1 : reference_b1(dbm, cfg.attenuation_db);
      const double nu1 = nu1_from_b1(b1, cfg.constants());
      const auto ts = spaced(fig_tmin, fig_tmax, fig_points, true);

      SweepProtocol base{cfg.span, 1.0, 0.0};
      auto ev = cfg.evolution(1.0);
      ev.max_step = 0.0;  // relative to each point's duration
      std::vector<double> gray = sweep_curve(ts, base, cfg.spin_params(nu1), ev);
      const auto ro = cfg.readout();
      const auto shots = synthesize_dataset(ts, gray, power, ro, cfg.seed, cfg.span);

      const std::string tag = tag_for(dbm);
      {
        auto os = open_out(out_dir / ("fig2_" + tag + "_curves.csv"));
        write_provenance(os, provenance(cfg));
        os << "# b1_T=" << format_number(b1) << "\n";
        os << "sweep_time_s,black_lz,gray_p_up,red_r_up\n";
        for (std::size_t i = 0; i < ts.size(); ++i)
          os << format_number(ts[i]) << ',' << format_number(inversion_prob_coherent(nu1, cfg.span / ts[i]))
             << ',' << format_number(gray[i]) << ','
             << format_number(observe(std::clamp(gray[i], 0.0, 1.0), ro)) << '\n';
      }
      {
        std::vector<SweepRow> rows;
        for (const auto& p : shots.points) rows.push_back({p.sweep_time, p.r_up, p.shots, dbm});
        auto os = open_out(out_dir / ("fig2_" + tag + "_shots.csv"));
        write_sweeps_csv(os, rows, provenance(cfg));
      }
      std::cout << "b1 = " << format_number(b1) << "\n";
      return kOk;
    }

    if (*fs_cmd) {
      std::vector<SweepRow> rows;
      for (const auto& path : fs_data) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open " + path, 0);
        try {
          auto more = read_sweeps_csv(in);
          rows.insert(rows.end(), more.begin(), more.end());
        } catch (const ParseError& e) {
          throw ParseError(path + ": " + e.what(), 0);
        }
      }
      const auto data = group_sweeps(rows, cfg.span, 0.0, cfg.attenuation_db);
      GlobalFitOptions opts;
      opts.constants = cfg.constants();
      opts.ode.dephasing = cfg.evolution(1.0).dephasing;
      opts.t2_param = fs_t2_param == "log" ? T2Parameterization::log : T2Parameterization::linear;
      opts.lm.max_iterations = fs_max_iter;
      const auto init = initial_guess(data, cfg.background, cfg.f_up, cfg.t2, cfg.constants());
      const auto fit = fit_global(data, init, cfg.background, opts);

      Report rep;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const std::string k = "b1[" + std::to_string(i) + "]";
        rep.push_back({k + ".power_dbm", format_number(data[i].power.p_mw_dbm)});
        rep.push_back({k, format_number(fit.b1_per_power[i])});
        rep.push_back({k + ".std_error", format_number(fit.b1_std_errors[i])});
      }
      rep.push_back({"f_up", format_number(fit.f_up)});
      rep.push_back({"f_up.std_error", format_number(fit.f_up_std_error)});
      rep.push_back({"t2", format_number(fit.t2)});
      rep.push_back({"t2.std_error", format_number(fit.t2_std_error)});
      rep.push_back({"background", format_number(cfg.background)});
      rep.push_back({"residual_norm", format_number(fit.residual_norm)});
      rep.push_back({"iterations", std::to_string(fit.iterations)});
      rep.push_back({"converged", fit.converged ? "true" : "false"});
      rep.push_back({"rank_deficient", fit.rank_deficient ? "true" : "false"});
      rep.push_back({"at_bound", fit.at_bound ? "true" : "false"});
      std::string weak;
      for (const auto& u : fit.unidentifiable) weak += (weak.empty() ? "" : " ") + u;
      rep.push_back({"unidentifiable", weak});
      {
        auto os = open_out(out_dir / "fit_report.txt");
        write_report(os, rep, provenance(cfg));
      }
      {
        auto os = open_out(out_dir / "fit_residuals.csv");
        write_provenance(os, provenance(cfg));
        os << "sweep_time_s,power_dbm,r_up,model,residual\n";
        for (std::size_t i = 0; i < data.size(); ++i)
          for (std::size_t k = 0; k < data[i].points.size(); ++k) {
            const auto& p = data[i].points[k];
            const double m = fit.model[i][k];
            os << format_number(p.sweep_time) << ',' << format_number(data[i].power.p_mw_dbm) << ','
               << format_number(p.r_up) << ',' << format_number(m) << ',' << format_number(p.r_up - m) << '\n';
          }
      }
      write_report(std::cout, rep, provenance(cfg));
      if (!fit.converged) throw NotConverged("fit-sweeps: " + std::to_string(fit.iterations) + " iterations without convergence");
      return kOk;
    }

    if (*fsp) {
      std::ifstream in(fsp_data);
      if (!in) throw ParseError("cannot open " + fsp_data, 0);
      const auto rows = read_spectra_csv(in);
      const auto avg = average_spectrum(rows);
      const auto fit = fit_bimodal(avg, guess_bimodal(avg));
      std::vector<double> f, v;
      const double lo = avg.front().freq_hz, hi = avg.back().freq_hz;
      for (int i = 0; i < 4001; ++i) {
        f.push_back(lo + (hi - lo) * i / 4000.0);
        v.push_back(spectrum_value(f.back(), fit.model));
      }
      const auto& m = fit.model;
      Report rep{{"fwhm_hz", format_number(m.fwhm)},
                 {"fwhm_hz.std_error", format_number(fit.fwhm_err)},
                 {"splitting_hz", format_number(m.splitting())},
                 {"splitting_hz.std_error", format_number(fit.splitting_err)},
                 {"center0_hz", format_number(m.center[0])},
                 {"center1_hz", format_number(m.center[1])},
                 {"amplitude0", format_number(m.amplitude[0])},
                 {"amplitude1", format_number(m.amplitude[1])},
                 {"baseline", format_number(m.baseline)},
                 {"envelope_fwhm_hz", format_number(fwhm_numeric(f, v, m.baseline))},
                 {"snapshots", std::to_string(rows.empty() ? 0 : rows.back().snapshot_index + 1)},
                 {"residual_sum", format_number(fit.residual_sum)},
                 {"iterations", std::to_string(fit.iterations)},
                 {"converged", fit.converged ? "true" : "false"},
                 {"rank_deficient", fit.rank_deficient ? "true" : "false"}};
      {
        auto os = open_out(out_dir / "spectrum_report.txt");
        write_report(os, rep, provenance(cfg));
      }
      write_report(std::cout, rep, provenance(cfg));
      if (!fit.converged) throw NotConverged("fit-spectrum: no convergence");
      return kOk;
    }

    if (*syn) {
      const auto snap = BimodalModel::symmetric(0.0, cfg.splitting, cfg.snapshot_fwhm, cfg.snapshot_amplitude);
      const DriftProcess drift{drift_stddev_for_fwhm(cfg.snapshot_fwhm, cfg.peak_fwhm),
                               cfg.drift_correlation_min * 60.0, cfg.seed};
      std::vector<double> grid;
      for (int i = 0; i < cfg.freq_points; ++i)
        grid.push_back(-cfg.freq_halfwidth + 2.0 * cfg.freq_halfwidth * i / (cfg.freq_points - 1));
      SpectrumSynthOptions o;
      o.n_spectra = cfg.n_spectra;
      o.per_point_shots = cfg.shots;
      o.minutes_per_spectrum = cfg.minutes_per_spectrum;
      const auto series = synth_spectrum_series(snap, drift, grid, cfg.readout(), o);
      const fs::path path = syn_out.empty() ? out_dir / "spectra.csv" : fs::path(syn_out);
      auto os = open_out(path);
      os << "# assumed snapshot_fwhm_hz=" << format_number(cfg.snapshot_fwhm)
         << " drift_stddev_hz=" << format_number(drift.stddev)
         << " drift_correlation_s=" << format_number(drift.correlation_time) << "\n";
      write_spectra_csv(os, series.rows, provenance(cfg));
      return kOk;
    }

    if (*cf) {
      std::cout << "f_i = " << format_number(inversion_fidelity_from_control(cf_fc)) << "\n";
      return kOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NotConverged& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}

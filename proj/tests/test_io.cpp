#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "arpsim/config.hpp"
#include "arpsim/csv.hpp"
#include "arpsim/errors.hpp"

using namespace arp;

TEST_CASE("config defaults and overrides") {
  RunConfig c;
  CHECK(c.get("b0") == "1.3");
  CHECK(c.get("gamma_e") == "27970000000");
  CHECK(c.get("dephasing_convention") == "paper");
  CHECK(c.keys().size() == 24);
  for (const auto& k : c.keys()) CHECK_NOTHROW(c.set(k, c.get(k)));

  c.set("t2", "20e-6");
  CHECK(c.t2 == 20e-6);
  c.set("shots", "250");
  CHECK(c.shots == 250);
  c.set("seed", "18446744073709551615");
  CHECK(c.seed == 18446744073709551615ULL);
  c.set("dephasing_convention", "conventional");
  CHECK(c.evolution(1e-6).dephasing == DephasingConvention::conventional);

  CHECK_THROWS_AS(c.set("no_such_key", "1"), ParseError);
  CHECK_THROWS_AS(c.set("t2", "abc"), ParseError);
  CHECK_THROWS_AS(c.set("t2", "1.0x"), ParseError);
  CHECK_THROWS_AS(c.set("t2", "nan"), ParseError);
  CHECK_THROWS_AS(c.set("shots", "2.5"), ParseError);
  CHECK_THROWS_AS(c.set("dephasing_convention", "other"), ParseError);

  RunConfig bad;
  bad.t2 = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("config file format") {
  RunConfig c;
  std::istringstream in(
      "# comment\n"
      "\n"
      "t2 = 30e-6\n"
      "f_up 0.9   # trailing comment\n"
      "  span=20e6\n");
  c.load(in);
  CHECK(c.t2 == 30e-6);
  CHECK(c.f_up == 0.9);
  CHECK(c.span == 20e6);

  RunConfig d;
  std::istringstream bad("t2 = 30e-6\nbogus = 1\n");
  try {
    d.load(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(d.load_file("/nonexistent/config.txt"), ParseError);
}

TEST_CASE("config hash") {
  RunConfig a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.canonical() == b.canonical());
  b.output_dir = "/tmp/elsewhere";
  CHECK(a.hash() == b.hash());
  b.t2 = 45e-6;
  CHECK(a.hash() != b.hash());
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("config derived objects") {
  RunConfig c;
  CHECK(c.constants().gamma_e == 27.97e9);
  CHECK(c.readout().background() == doctest::Approx(0.022));
  CHECK(c.readout().shots == 100);
  const auto sp = c.spin_params(1e5);
  CHECK(sp.nu1 == 1e5);
  CHECK(sp.t2 == 44e-6);
  const auto ev = c.evolution(6e-6);
  CHECK(ev.max_step == doctest::Approx(6e-9));
  CHECK(ev.rel_tol == 1e-8);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-7, 6.02214076e23, 0.9632107708359166,
                   std::numeric_limits<double>::denorm_min()}) {
    const std::string s = format_number(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("sweeps CSV") {
  const std::vector<SweepRow> rows{{1e-6, 0.25, 100, -4.0}, {2e-6, 0.5, 100, -4.0}, {1e-6, 0.3, 100, 5.0}};
  std::ostringstream os;
  write_sweeps_csv(os, rows, {0xabcdefULL, 7});
  const std::string text = os.str();
  CHECK(text.rfind("# arpsim ", 0) == 0);
  CHECK(text.find("# config_hash=0000000000abcdef") != std::string::npos);
  CHECK(text.find("# seed=7") != std::string::npos);
  CHECK(text.find(std::string(kSweepsHeader) + "\n") != std::string::npos);

  std::istringstream is(text);
  const auto back = read_sweeps_csv(is);
  REQUIRE(back.size() == 3);
  CHECK(back[1].sweep_time_s == 2e-6);
  CHECK(back[2].power_dbm == 5.0);

  const auto groups = group_sweeps(back, 25e6, 0.0, 30.0);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].power.p_mw_dbm == -4.0);
  CHECK(groups[0].points.size() == 2);
  CHECK(groups[1].points[0].r_up == 0.3);

  auto expect_line = [](const std::string& body, std::size_t line) {
    std::istringstream in(body);
    try {
      read_sweeps_csv(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  const std::string h = std::string(kSweepsHeader) + "\n";
  expect_line("# c\n" + h + "1e-6,0.2,100,-4\n1e-6,oops,100,-4\n", 4);
  expect_line(h + "1e-6,nan,100,-4\n", 2);
  expect_line(h + "1e-6,0.2,100\n", 2);
  expect_line(h + "1e-6,0.2,100,-4,9\n", 2);
  expect_line(h + "inf,0.2,100,-4\n", 2);
  expect_line("time,r,shots,power\n", 1);
  expect_line("", 0);
}

TEST_CASE("spectra CSV") {
  const std::vector<SpectrumRow> rows{{-1e6, 0.1, 100, 0, 0.0}, {0.0, 0.4, 100, 0, 0.05}, {-1e6, 0.2, 100, 1, 8.8}};
  std::ostringstream os;
  write_spectra_csv(os, rows, {1, 2});
  std::istringstream is(os.str());
  const auto back = read_spectra_csv(is);
  REQUIRE(back.size() == 3);
  CHECK(back[2].snapshot_index == 1);
  CHECK(back[2].wallclock_min == 8.8);
  const auto avg = average_spectrum(back);
  REQUIRE(avg.size() == 2);
  CHECK(avg[0].freq_hz == -1e6);
  CHECK(avg[0].r_up == doctest::Approx(0.15));
  CHECK(avg[0].shots == 200);

  std::istringstream bad(std::string(kSpectraHeader) + "\n1e6,0.1,100,0,0\n1e6,0.1,NaN,0,0\n");
  CHECK_THROWS_AS(read_spectra_csv(bad), ParseError);
}

TEST_CASE("report") {
  std::ostringstream os;
  write_report(os, {{"b1_0", "8.8e-06"}, {"converged", "true"}}, {3, 4});
  const std::string s = os.str();
  CHECK(s.find("b1_0 = 8.8e-06\n") != std::string::npos);
  CHECK(s.find("converged = true\n") != std::string::npos);
  CHECK(s.find("# seed=4") != std::string::npos);
}

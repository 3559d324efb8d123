#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "carleman/error.hpp"
#include "carleman/harness.hpp"
#include "carleman/io.hpp"
#include "carleman/scenario.hpp"
#include "json.hpp"

using namespace carleman;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("carleman_lab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

int run_quiet(const std::string& cmd, const Scenario& sc, const fs::path& out) {
  std::ostringstream log;
  return run(cmd, sc, out, log);
}

Scenario small_paper() {
  Scenario sc = load_scenario("paper-1d");
  for (const char* o : {"carleman.nx=41", "carleman.nt=101", "carleman.family=4", "qr.nx=41", "qr.nt=101",
                        "stability.nx=31", "stability.nt=76", "stability.levels=4", "stability.seeds=2",
                        "coefficient.nx=31", "coefficient.nt=76", "coefficient.deltas=5"})
    sc.apply_override(o);
  return sc;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("scenario registry") {
  const auto list = list_scenarios();
  REQUIRE(list.size() >= 2);
  CHECK(list.front().name == "paper-1d");
  bool rot = false;
  for (const auto& s : list)
    if (s.name == "rotational-2d") rot = s.expect == "not-dissipative";
  CHECK(rot);
  std::ostringstream a, b;
  print_scenarios(a);
  print_scenarios(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("paper-1d") != std::string::npos);
}

TEST_CASE("paper-1d resolves to the one-dimensional example") {
  const Scenario sc = load_scenario("paper-1d");
  const SpatialDomain d = scenario_domain(sc, "geometry");
  CHECK(d.dim == 1);
  CHECK(d.lo.x == 0.0);
  CHECK(d.hi.x == 1.0);
  CHECK(sc.num("beta") == 0.5);
  CHECK(sc.num("T") == 2.5);
  const SpaceTimeField f = scenario_field(sc);
  for (double x : {0.0, 0.3, 1.0}) {
    CHECK(f.a0({x, 0}, 1.0) == 1.0);
    CHECK(f.a({x, 0}, 1.0) == Vec2{1.0, 0.0});
  }
  const TimeAxis t = scenario_time(sc, "geometry");
  const BoundaryMask sigma = scenario_sigma(sc, f, d, t);
  for (std::size_t b = 0; b < sigma.mesh.size(); ++b) CHECK(sigma.at(b, 1) == (sigma.mesh[b].position.x == 1.0));
}

TEST_CASE("override hygiene") {
  Scenario sc = load_scenario("paper-1d");
  sc.apply_override("beta=0.25");
  CHECK(sc.num("beta") == 0.25);
  for (const char* bad : {"no_such_key=1", "beta", "=3"}) {
    try {
      sc.apply_override(bad);
      FAIL("expected BadOverride for " << bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BadOverride);
    }
  }
  try {
    load_scenario("does-not-exist");
    FAIL("expected UnknownScenario");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownScenario);
  }
}

TEST_CASE("scenario files with sections") {
  const auto list = parse_scenarios("# comment\nT = 3\n[scenario a]\nbeta = 0.3\n[scenario b]\n");
  REQUIRE(list.size() == 2);
  CHECK(list[0].name() == "a");
  CHECK(list[0].num("T") == 3.0);
  CHECK(list[0].num("beta") == 0.3);
  CHECK(list[1].num("T") == 3.0);
  CHECK(list[1].num("beta") == Scenario().num("beta"));
  CHECK_THROWS_AS(parse_scenarios("[scenario x]\nbogus = 1\n"), Error);

  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "s.cfg") << "[scenario from-file]\nfield = affine\ngx = 1\n";
  const Scenario sc = load_scenario((dir / "s.cfg").string());
  CHECK(sc.name() == "from-file");
  CHECK(scenario_field(sc).a({0.5, 0}, 0).x == 1.5);
}

TEST_CASE("csv writer") {
  const fs::path dir = scratch("csv");
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "a.csv", {"x", "label"});
    w << 0.1 << std::string("plain");
    w.end_row();
    w << 2.0 << std::string("a,\"b\"");
    w.end_row();
    w << 1.0;
    CHECK_THROWS_AS(w.end_row(), Error);
  }
  const std::string text = slurp(dir / "a.csv");
  CHECK(text.rfind("x,label\n0.10000000000000001,plain\n2,\"a,\"\"b\"\"\"\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("svg plot") {
  const fs::path dir = scratch("svg");
  fs::create_directories(dir);
  write_svg_plot(dir / "p.svg", {"t", "x", "y", true, true, {{{1e-3, 1e-2, 1e-1}, {1e-4, 1e-3, 1e-2}, "s", false}}});
  const std::string svg = slurp(dir / "p.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
}

TEST_CASE("geometry run on paper-1d") {
  const fs::path out = scratch("geometry");
  CHECK(run_quiet("geometry", load_scenario("paper-1d"), out) == 0);
  const auto rows = read_csv(out / "phi0.csv");
  REQUIRE(rows.size() == 402);
  CHECK(rows[0] == std::vector<std::string>{"x", "phi0", "sigma_minus"});
  double err = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) err = std::max(err, std::abs(std::stod(rows[i][1]) - std::stod(rows[i][0])));
  CHECK(err < 1e-8);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["pass"] == true);
  CHECK(m["scenario"] == "paper-1d");
  for (const auto& f : m["files"]) CHECK(fs::exists(out / f.get<std::string>()));
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string name = e.path().filename().string();
    if (name == "manifest.json") continue;
    bool listed = false;
    for (const auto& f : m["files"]) listed |= f.get<std::string>() == name;
    CHECK_MESSAGE(listed, name);
  }
}

TEST_CASE("exit codes") {
  Scenario beta = load_scenario("paper-1d");
  beta.apply_override("beta=1.0");
  std::ostringstream log;
  CHECK(run("carleman", beta, scratch("beta"), log) == 2);
  CHECK(log.str().find("rho / sup A0") != std::string::npos);

  Scenario short_t = load_scenario("paper-1d");
  short_t.apply_override("T=1");
  CHECK(run_quiet("geometry", short_t, scratch("short")) == 2);

  CHECK(run_quiet("geometry", load_scenario("rotational-2d"), scratch("rot")) == 2);
  CHECK(run_quiet("nonsense", load_scenario("paper-1d"), scratch("nonsense")) == 1);
}

TEST_CASE("runs are reproducible") {
  const Scenario sc = small_paper();
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  CHECK(run_quiet("all", sc, a) == run_quiet("all", sc, b));
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".csv" || e.path().extension() == ".svg") {
      CHECK_MESSAGE(slurp(e.path()) == slurp(b / name), name);
      ++compared;
    }
  }
  CHECK(compared >= 10);
  auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  ma.erase("wall_clock_seconds");
  mb.erase("wall_clock_seconds");
  CHECK(ma == mb);
}

TEST_CASE("command line tool") {
  const std::string exe = CARLEMAN_LAB_PATH;
  const fs::path out = scratch("cli");
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(exe + " list") == 0);
  CHECK(status(exe + " geometry --scenario paper-1d --out " + out.string()) == 0);
  CHECK(fs::exists(out / "phi0.csv"));
  CHECK(status(exe + " carleman --scenario paper-1d --set beta=1.0 --out " + out.string()) == 2);
  CHECK(status(exe + " geometry --scenario paper-1d --set nope=1 --out " + out.string()) == 1);
  CHECK(status(exe + " geometry --scenario missing --out " + out.string()) == 1);
  CHECK(status(exe + " geometry --scenario paper-1d --seed 9 --out " + out.string()) == 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(m["seed"] == "9");
}

}  // TEST_SUITE

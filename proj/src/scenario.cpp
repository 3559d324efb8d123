#include "carleman/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "carleman/error.hpp"

namespace carleman {

const std::vector<std::pair<std::string, std::string>>& scenario_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"description", ""},
      {"expect", "dissipative"},
      {"dim", "1"},
      {"x_min", "0"},
      {"x_max", "1"},
      {"y_min", "0"},
      {"y_max", "1"},
      {"T", "2.5"},
      {"field", "const"},
      {"a0", "1"},
      {"ax", "1"},
      {"ay", "0"},
      {"gx", "0"},
      {"gy", "0"},
      {"omega", "1"},
      {"lambda", "0"},
      {"rho", "1"},
      {"M", "3"},
      {"beta", "0.5"},
      {"eps_star", "0"},
      {"eps", "auto"},
      {"sigma", "plus"},
      {"p", "0"},
      {"r", "1"},
      {"r_slope", "0"},
      {"f", "sin"},
      {"m0", "auto"},
      {"ode_step", "1e-3"},
      {"seed", "1"},
      {"geometry.nx", "401"},
      {"geometry.ny", "1"},
      {"geometry.nt", "51"},
      {"carleman.nx", "201"},
      {"carleman.ny", "1"},
      {"carleman.nt", "501"},
      {"carleman.family", "20"},
      {"carleman.s_min", "1"},
      {"carleman.s_max", "64"},
      {"qr.nx", "201"},
      {"qr.ny", "1"},
      {"qr.nt", "501"},
      {"qr.s", "8"},
      {"stability.mode", "A"},
      {"stability.nx", "101"},
      {"stability.ny", "1"},
      {"stability.nt", "251"},
      {"stability.levels", "8"},
      {"stability.level_min", "1e-4"},
      {"stability.level_max", "1e-1"},
      {"stability.seeds", "5"},
      {"coefficient.nx", "101"},
      {"coefficient.ny", "1"},
      {"coefficient.nt", "251"},
      {"coefficient.p", "2"},
      {"coefficient.m0", "1"},
      {"coefficient.deltas", "9"},
      {"coefficient.delta_min", "1e-3"},
      {"coefficient.delta_max", "1e-1"},
      {"coefficient.bump_x", "0.6"},
      {"coefficient.bump_y", "0.5"},
      {"coefficient.bump_width", "0.15"},
  };
  return keys;
}

Scenario::Scenario() {
  for (const auto& [k, v] : scenario_keys()) values_[k] = v;
}

void Scenario::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::BadOverride, "unknown scenario key '" + key + "'");
  it->second = value;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Scenario::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::BadOverride, "override '" + assignment + "' lacks '='");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw Error(ErrorKind::BadOverride, "override '" + assignment + "' has an empty key");
  set(key, trim(assignment.substr(eq + 1)));
}

const std::string& Scenario::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::BadOverride, "unknown scenario key '" + key + "'");
  return it->second;
}

double Scenario::num(const std::string& key) const {
  const std::string& s = str(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorKind::BadOverride, "key '" + key + "' expects a number, got '" + s + "'");
  return v;
}

int Scenario::integer(const std::string& key) const {
  const std::string& s = str(key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorKind::BadOverride, "key '" + key + "' expects an integer, got '" + s + "'");
  return v;
}

std::vector<Scenario> parse_scenarios(const std::string& text) {
  std::vector<Scenario> out;
  std::vector<std::pair<std::string, std::string>> common;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::BadOverride, "line " + std::to_string(lineno) + ": bad header");
      std::string inner = trim(line.substr(1, line.size() - 2));
      if (inner.rfind("scenario", 0) != 0)
        throw Error(ErrorKind::BadOverride, "line " + std::to_string(lineno) + ": expected [scenario NAME]");
      const std::string name = trim(inner.substr(8));
      if (name.empty()) throw Error(ErrorKind::BadOverride, "line " + std::to_string(lineno) + ": missing name");
      Scenario sc;
      sc.set_name(name);
      for (const auto& [k, v] : common) sc.set(k, v);
      out.push_back(std::move(sc));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::BadOverride, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (out.empty()) {
      Scenario probe;
      probe.set(key, value);
      common.emplace_back(key, value);
    } else {
      out.back().set(key, value);
    }
  }
  return out;
}

namespace {

const char* kBuiltins = R"(
[scenario paper-1d]
description = Omega=(0,1), A0=1, A=1, beta=0.5, T=2.5, Sigma={1}x(0,T)

[scenario affine-1d]
description = Omega=(0,1), A(x)=1+x, A0=1
field = affine
gx = 1
M = 5

[scenario exp-in-time-1d]
description = Omega=(0,1), A(x,t)=exp(0.2 t), A0=1
field = exp-in-time
lambda = 0.2
M = 5

[scenario const-2d]
description = unit square, A=(1,0.5), A0=1, Sigma=Sigma_+
dim = 2
ay = 0.5
M = 4
geometry.nx = 51
geometry.ny = 51
geometry.nt = 21
carleman.nx = 41
carleman.ny = 41
carleman.nt = 101
qr.nx = 21
qr.ny = 21
qr.nt = 51
stability.nx = 21
stability.ny = 21
stability.nt = 51
stability.levels = 5
stability.seeds = 3
coefficient.nx = 21
coefficient.ny = 21
coefficient.nt = 51
coefficient.deltas = 5

[scenario rotational-2d]
description = square (-1,1)^2, A=(-y,x): closed orbits, not dissipative
expect = not-dissipative
dim = 2
field = rotational
x_min = -1
y_min = -1
rho = 0
geometry.nx = 51
geometry.ny = 51
carleman.nx = 51
carleman.ny = 51
carleman.nt = 51
)";

const std::vector<Scenario>& builtins() {
  static const std::vector<Scenario> list = parse_scenarios(kBuiltins);
  return list;
}

}  // namespace

std::vector<ScenarioInfo> list_scenarios() {
  std::vector<ScenarioInfo> out;
  for (const auto& sc : builtins()) out.push_back({sc.name(), sc.str("description"), sc.str("expect")});
  return out;
}

Scenario load_scenario(const std::string& name_or_path) {
  for (const auto& sc : builtins())
    if (sc.name() == name_or_path) return sc;
  std::error_code ec;
  if (std::filesystem::is_regular_file(name_or_path, ec)) {
    std::ifstream f(name_or_path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    auto list = parse_scenarios(ss.str());
    if (list.empty()) throw Error(ErrorKind::UnknownScenario, name_or_path + " declares no [scenario NAME] section");
    return list.front();
  }
  throw Error(ErrorKind::UnknownScenario, "no built-in scenario or file named '" + name_or_path + "'");
}

SpatialDomain scenario_domain(const Scenario& sc, const std::string& prefix) {
  const int dim = sc.integer("dim");
  if (dim == 1) return SpatialDomain::interval(sc.num("x_min"), sc.num("x_max"), sc.integer(prefix + ".nx"));
  if (dim == 2)
    return SpatialDomain::rectangle({sc.num("x_min"), sc.num("y_min")}, {sc.num("x_max"), sc.num("y_max")},
                                    sc.integer(prefix + ".nx"), sc.integer(prefix + ".ny"));
  throw Error(ErrorKind::BadOverride, "dim must be 1 or 2");
}

TimeAxis scenario_time(const Scenario& sc, const std::string& prefix) {
  const int levels = sc.integer(prefix + ".nt");
  if (levels < 3) throw Error(ErrorKind::BadOverride, prefix + ".nt must be at least 3");
  return TimeAxis{levels, sc.num("T")};
}

SpaceTimeField scenario_field(const Scenario& sc) {
  SpaceTimeField f;
  const bool two = sc.integer("dim") == 2;
  const double a0 = sc.num("a0");
  const double ax = sc.num("ax");
  const double ay = two ? sc.num("ay") : 0.0;
  const std::string& kind = sc.str("field");
  f.a0 = [a0](const Vec2&, double) { return a0; };
  f.rho = sc.num("rho");
  f.M = sc.num("M");
  f.T = sc.num("T");
  if (kind == "const") {
    f.a = [ax, ay](const Vec2&, double) { return Vec2{ax, ay}; };
    f.time_independent = true;
  } else if (kind == "affine") {
    const double gx = sc.num("gx");
    const double gy = two ? sc.num("gy") : 0.0;
    f.a = [ax, ay, gx, gy](const Vec2& x, double) { return Vec2{ax + gx * x.x, ay + gy * x.y}; };
    f.time_independent = true;
  } else if (kind == "rotational") {
    if (!two) throw Error(ErrorKind::BadOverride, "field 'rotational' needs dim = 2");
    const double w = sc.num("omega");
    f.a = [w](const Vec2& x, double) { return Vec2{-w * x.y, w * x.x}; };
    f.time_independent = true;
  } else if (kind == "exp-in-time") {
    const double lam = sc.num("lambda");
    f.a = [ax, ay, lam](const Vec2&, double t) { return Vec2{ax, ay} * std::exp(lam * t); };
    f.dt_a = [ax, ay, lam](const Vec2&, double t) { return Vec2{ax, ay} * (lam * std::exp(lam * t)); };
    f.time_independent = lam == 0.0;
  } else {
    throw Error(ErrorKind::BadOverride, "unknown field token '" + kind + "'");
  }
  return f;
}

SourceSpec scenario_source(const Scenario& sc) {
  SourceSpec s;
  const double p = sc.num("p");
  const double r = sc.num("r");
  const double rs = sc.num("r_slope");
  s.p = [p](const Vec2&, double) { return p; };
  s.r = [r, rs](const Vec2& x, double) { return r + rs * x.x; };
  const bool two = sc.integer("dim") == 2;
  const double x0 = sc.num("x_min"), lx = sc.num("x_max") - x0;
  const double y0 = sc.num("y_min"), ly = sc.num("y_max") - y0;
  const std::string& kind = sc.str("f");
  if (kind == "sin") {
    s.f = [=](const Vec2& x) {
      double v = std::sin(std::numbers::pi * (x.x - x0) / lx);
      if (two) v *= std::sin(std::numbers::pi * (x.y - y0) / ly);
      return v;
    };
  } else if (kind == "one") {
    s.f = [](const Vec2&) { return 1.0; };
  } else if (kind == "zero") {
    s.f = [](const Vec2&) { return 0.0; };
  } else {
    throw Error(ErrorKind::BadOverride, "unknown source token '" + kind + "'");
  }
  if (sc.str("m0") == "auto") {
    // |R(x, 0)| is affine in x, so its minimum over the box is at an end
    s.m0 = std::min(std::abs(r + rs * sc.num("x_min")), std::abs(r + rs * sc.num("x_max")));
    if (r + rs * sc.num("x_min") < 0 && r + rs * sc.num("x_max") > 0) s.m0 = 0.0;
    if (r + rs * sc.num("x_min") > 0 && r + rs * sc.num("x_max") < 0) s.m0 = 0.0;
  } else {
    s.m0 = sc.num("m0");
  }
  return s;
}

TraceOptions scenario_trace(const Scenario& sc) {
  TraceOptions t;
  t.ode_step = sc.num("ode_step");
  return t;
}

double scenario_eps(const Scenario& sc, const WeightField& weight) {
  if (sc.str("eps") == "auto") return 0.1 * weight.max_phi0();
  return sc.num("eps");
}

BoundaryMask scenario_sigma(const Scenario& sc, const SpaceTimeField& field, const SpatialDomain& domain,
                            const TimeAxis& time) {
  const std::string& kind = sc.str("sigma");
  BoundaryMask m = compute_sigma_plus(field, domain, time);
  if (kind == "plus") return m;
  if (kind == "all") {
    std::fill(m.mask.begin(), m.mask.end(), 1);
    return m;
  }
  throw Error(ErrorKind::BadOverride, "sigma must be 'plus' or 'all'");
}

}  // namespace carleman

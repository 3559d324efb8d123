#include "carleman/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "carleman/carleman.hpp"
#include "carleman/error.hpp"
#include "carleman/inverse_coefficient.hpp"
#include "carleman/inverse_source.hpp"
#include "carleman/io.hpp"
#include "json.hpp"

namespace carleman {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string>& run_commands() {
  static const std::vector<std::string> c = {"geometry", "carleman", "inverse-source", "inverse-coefficient", "all"};
  return c;
}

void print_scenarios(std::ostream& out) {
  for (const auto& s : list_scenarios()) out << s.name << "\t" << s.expect << "\t" << s.description << "\n";
}

namespace {

struct Context {
  const Scenario& sc;
  fs::path out;
  std::ostream& log;
  Json manifest;
  std::vector<std::string> files;
  bool pass = true;
};

void record_file(Context& cx, const std::string& name) { cx.files.push_back(name); }

Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

void write_coords(CsvWriter& csv, const SpatialDomain& d, std::size_t n) {
  const Vec2 x = d.node(n);
  csv << x.x;
  if (d.dim == 2) csv << x.y;
}

std::vector<std::string> coord_header(const SpatialDomain& d, std::vector<std::string> rest) {
  std::vector<std::string> h{"x"};
  if (d.dim == 2) h.push_back("y");
  h.insert(h.end(), rest.begin(), rest.end());
  return h;
}

WeightField build_weight(const Scenario& sc, const SpaceTimeField& field, const SpatialDomain& domain,
                         const TimeAxis& time) {
  return make_weight(compute_phi0(field, domain, scenario_trace(sc)), field, sc.num("beta"), time);
}

void write_solution(const fs::path& path, const GridFunction& u) {
  const SpatialDomain& d = u.domain();
  CsvWriter csv(path, coord_header(d, {"t", "u"}));
  for (int k = 0; k < u.time().levels; ++k)
    for (std::size_t n = 0; n < d.size(); ++n) {
      write_coords(csv, d, n);
      csv << u.time().at(k) << u(n, k);
      csv.end_row();
    }
}

void write_trace(const fs::path& path, const CauchyData& data) {
  CsvWriter csv(path, {"boundary_index", "t", "g", "dg_dt"});
  const std::size_t nb = data.boundary_size();
  for (int k = 0; k < data.sigma.time.levels; ++k)
    for (std::size_t b = 0; b < nb; ++b) {
      if (!data.sigma.at(b, k)) continue;
      const std::size_t i = static_cast<std::size_t>(k) * nb + b;
      csv << static_cast<long long>(b) << data.sigma.time.at(k) << data.g[i] << data.dg_dt[i];
      csv.end_row();
    }
}

Json fit_json(const StabilityFit& fit) {
  Json j;
  j["theta_hat"] = number(fit.theta_hat);
  j["raw_slope"] = number(fit.raw_slope);
  j["intercept_log10"] = number(fit.intercept);
  j["residual_log10"] = number(fit.residual);
  j["C_fit"] = number(fit.c_fit);
  j["floor"] = number(fit.floor);
  j["samples_in_fit"] = fit.used;
  j["pointwise_bound_holds"] = fit.pointwise_ok;
  j["smallest_noise_below_largest"] = fit.monotone_ok;
  return j;
}

void fit_plot(const fs::path& path, const StabilityFit& fit, const std::string& title, const std::string& xl,
              const std::string& yl) {
  PlotSeries pts{{}, {}, "samples", false};
  for (const auto& s : fit.samples)
    if (s.d > 0 && s.err > 0) {
      pts.x.push_back(s.d);
      pts.y.push_back(s.err);
    }
  PlotSeries line{{}, {}, "fit: theta = " + format_number(std::round(fit.theta_hat * 1e4) / 1e4), true};
  double lo = 0, hi = 0;
  bool first = true;
  for (const auto& s : fit.samples)
    if (s.in_fit) {
      lo = first ? s.d : std::min(lo, s.d);
      hi = first ? s.d : std::max(hi, s.d);
      first = false;
    }
  if (!first)
    for (double d : {lo, hi}) {
      line.x.push_back(d);
      line.y.push_back(std::pow(10.0, fit.intercept + fit.theta_hat * std::log10(d)));
    }
  write_svg_plot(path, {title, xl, yl, true, true, {pts, line}});
}

// ---------------------------------------------------------------------------

void run_geometry(Context& cx) {
  const Scenario& sc = cx.sc;
  const SpatialDomain domain = scenario_domain(sc, "geometry");
  const TimeAxis time = scenario_time(sc, "geometry");
  const SpaceTimeField field = scenario_field(sc);
  const TraceOptions trace = scenario_trace(sc);
  Json j;

  const FieldBoundsReport bounds = check_field_bounds(field, domain, time);
  j["min_a0"] = number(bounds.min_a0);
  j["min_speed"] = number(bounds.min_speed);
  j["field_bounds_hold"] = bounds.ok();

  const DissipativenessReport dis = check_dissipative(field, domain, trace);
  {
    CsvWriter csv(cx.out / "dissipativeness.csv",
                  coord_header(domain, {"exit_backward", "exit_forward", "sigma_minus", "sigma_plus"}));
    for (std::size_t n = 0; n < domain.size(); ++n) {
      write_coords(csv, domain, n);
      csv << std::string(to_string(dis.exit_backward[n])) << std::string(to_string(dis.exit_forward[n]))
          << dis.sigma_minus[n] << dis.sigma_plus[n];
      csv.end_row();
    }
    record_file(cx, "dissipativeness.csv");
  }
  j["dissipative"] = dis.dissipative;
  j["failure_count"] = dis.failures.size();
  j["sigma_minus_smoothness_proxy"] = number(dis.smoothness_proxy);
  cx.manifest["geometry"] = j;
  if (!dis.dissipative) {
    const Vec2 w = domain.node(dis.failures.front());
    std::ostringstream msg;
    msg << dis.failures.size() << " integral curves do not exit; witness (" << w.x << ", " << w.y
        << ") exits as " << to_string(dis.exit_backward[dis.failures.front()]) << " backward";
    throw Error(ErrorKind::NotDissipative, msg.str());
  }

  const WeightField weight = build_weight(sc, field, domain, time);
  const double eps = scenario_eps(sc, weight);
  {
    CsvWriter csv(cx.out / "phi0.csv", coord_header(domain, {"phi0", "sigma_minus"}));
    for (std::size_t n = 0; n < domain.size(); ++n) {
      write_coords(csv, domain, n);
      csv << weight.phi0[n] << weight.sigma_minus[n];
      csv.end_row();
    }
    record_file(cx, "phi0.csv");
  }
  const RegionMask region = region_mask(weight, eps, time);
  {
    CsvWriter csv(cx.out / "weight.csv", coord_header(domain, {"t", "phi", "in_Qeps"}));
    for (int k = 0; k < time.levels; ++k)
      for (std::size_t n = 0; n < domain.size(); ++n) {
        write_coords(csv, domain, n);
        csv << time.at(k) << weight.phi_node(n, time.at(k))
            << static_cast<long long>(region.q[static_cast<std::size_t>(k) * domain.size() + n]);
        csv.end_row();
      }
    record_file(cx, "weight.csv");
  }

  const SpdReport spd = check_spd_condition(field, domain, time, domain.dim + 3, static_cast<std::uint64_t>(sc.integer("seed")));
  const ExponentialRepresentationReport rep = check_exponential_representation(field, domain, time);
  const BoundaryMask sigma = scenario_sigma(sc, field, domain, time);
  const double eps_star = sc.num("eps_star");
  const GeometricConditionReport geo = check_geometric_condition(weight, eps_star, sigma);
  {
    CsvWriter csv(cx.out / "geometric_violations.csv", coord_header(domain, {"t", "phi", "part"}));
    for (const auto& v : geo.violations) {
      csv << v.x.x;
      if (domain.dim == 2) csv << v.x.y;
      csv << v.t << v.phi << std::string(v.part == BoundaryPart::TopLid ? "top_lid" : "lateral_outside_sigma");
      csv.end_row();
    }
    record_file(cx, "geometric_violations.csv");
  }
  Json& g = cx.manifest["geometry"];
  g["beta"] = weight.beta;
  g["beta_bound"] = number(weight.beta_bound);
  g["max_phi0"] = number(weight.max_phi0());
  g["eps"] = number(eps);
  g["spd_condition"] = spd.ok;
  g["spd_constant"] = number(spd.constant);
  g["exponential_representation_deviation"] = number(rep.max_relative_deviation);
  g["geometric_condition"] = geo.ok;
  g["geometric_violations"] = geo.violations.size();
  cx.log << "geometry: dissipative, max phi0 = " << weight.max_phi0() << ", geometric condition "
         << (geo.ok ? "holds" : "fails") << "\n";
  if (!geo.ok) {
    std::ostringstream msg;
    msg << (geo.nonempty ? std::to_string(geo.violations.size()) + " boundary nodes with phi > eps* lie outside Sigma"
                         : "no boundary node has phi > eps*");
    throw Error(ErrorKind::GeometricConditionViolated, msg.str());
  }
  if (!bounds.ok() || !spd.ok) cx.pass = false;
}

void run_carleman(Context& cx) {
  const Scenario& sc = cx.sc;
  const SpatialDomain domain = scenario_domain(sc, "carleman");
  const TimeAxis time = scenario_time(sc, "carleman");
  const SpaceTimeField field = scenario_field(sc);
  const SourceSpec src = scenario_source(sc);
  const WeightField weight = build_weight(sc, field, domain, time);
  const CarlemanEvaluator ev(field, src.p, weight, time);
  const auto family = carleman_test_family(domain, time, sc.integer("carleman.family"),
                                           static_cast<std::uint64_t>(sc.integer("seed")));
  const auto grid = doubling_grid(sc.num("carleman.s_min"), sc.num("carleman.s_max"));
  const CarlemanReport rep = sweep_s(family, ev, grid);
  {
    CsvWriter csv(cx.out / "carleman.csv", {"member", "s", "lhs1", "lhs2", "rhs1", "rhs2", "ratio"});
    for (std::size_t m = 0; m < rep.terms.size(); ++m)
      for (const auto& t : rep.terms[m]) {
        const CarlemanTerms u = t.unscaled();
        csv << static_cast<long long>(m) << u.s << u.lhs1 << u.lhs2 << u.rhs1 << u.rhs2 << t.ratio();
        csv.end_row();
      }
    record_file(cx, "carleman.csv");
  }
  write_svg_plot(cx.out / "carleman.svg",
                 {"Carleman ratio (max over family)", "s", "(LHS1+LHS2)/(RHS1+RHS2)", true, true,
                  {{rep.s_grid, rep.max_ratio, "max ratio", true}}});
  record_file(cx, "carleman.svg");
  Json j;
  j["C_est"] = number(rep.c_est);
  j["s_star_est"] = number(rep.s_star_est);
  j["top_octave_growth"] = number(rep.top_octave_growth);
  j["all_ratios_finite"] = rep.all_finite;
  j["degenerate"] = rep.degenerate;
  j["pass"] = rep.pass;
  cx.manifest["carleman"] = j;
  cx.log << "carleman: C_est = " << rep.c_est << ", s*_est = " << rep.s_star_est << ", "
         << (rep.pass ? "pass" : "FAIL") << "\n";
  if (!rep.pass) cx.pass = false;
}

double quick_carleman_constant(const Scenario& sc, const SpaceTimeField& field, const SourceSpec& src,
                               const WeightField& weight, const TimeAxis& time) {
  const CarlemanEvaluator ev(field, src.p, weight, time);
  const auto family = carleman_test_family(weight.domain, time, 5, static_cast<std::uint64_t>(sc.integer("seed")));
  const CarlemanReport rep = sweep_s(family, ev, doubling_grid(1, 64));
  return std::isfinite(rep.c_est) ? rep.c_est : 1.0;
}

void run_inverse_source(Context& cx) {
  const Scenario& sc = cx.sc;
  const SpaceTimeField field = scenario_field(sc);
  const SourceSpec src = scenario_source(sc);
  const double eps_star = sc.num("eps_star");
  Json j;

  // Noiseless reconstruction
  {
    const SpatialDomain domain = scenario_domain(sc, "qr");
    const TimeAxis time = scenario_time(sc, "qr");
    const WeightField weight = build_weight(sc, field, domain, time);
    const double eps = scenario_eps(sc, weight);
    const InitialData zero = [](const Vec2&) { return 0.0; };
    ForwardOptions opt;
    opt.upwind = false;
    const GridFunction u =
        solve_forward(field, src, domain, time, zero, free_transport_inflow(field, src, zero, time.step()), opt)
            .characteristics;
    write_solution(cx.out / "solution.csv", u);
    record_file(cx, "solution.csv");
    const BoundaryMask sigma = scenario_sigma(sc, field, domain, time);
    const RegionMask star = region_mask(weight, eps_star, time);
    const CauchyData data = extract_trace(u, sigma, star.omega);
    write_trace(cx.out / "trace.csv", data);
    record_file(cx, "trace.csv");

    const auto f_direct = reconstruct_direct(field, src, u);
    ReconstructionProblem pb;
    pb.field = field;
    pb.src = src;
    pb.weight = weight;
    pb.time = time;
    pb.eps_star = eps_star;
    pb.eps = eps;
    pb.data = data;
    pb.s = sc.num("qr.s");
    const ReconstructionResult rec = reconstruct_qr(pb);
    const RegionMask local = region_mask(weight, 3.0 * eps, time);
    std::vector<double> e_direct(domain.size()), e_qr(domain.size());
    {
      CsvWriter csv(cx.out / "source_reconstruction.csv", coord_header(domain, {"f_true", "f_direct", "f_qr", "in_Omega_3eps"}));
      for (std::size_t n = 0; n < domain.size(); ++n) {
        const double ft = src.f(domain.node(n));
        e_direct[n] = f_direct[n] - ft;
        e_qr[n] = rec.f[n] - ft;
        write_coords(csv, domain, n);
        csv << ft << f_direct[n] << rec.f[n] << static_cast<long long>(local.omega[n]);
        csv.end_row();
      }
      record_file(cx, "source_reconstruction.csv");
    }
    const double err_qr = l2_norm(domain, e_qr, local.omega);
    const double tol = 10.0 * domain.h();
    Json q;
    q["eps"] = number(eps);
    q["s"] = pb.s;
    q["direct_error_L2"] = number(l2_norm(domain, e_direct));
    q["qr_error_L2_Omega_3eps"] = number(err_qr);
    q["qr_tolerance"] = number(tol);
    q["cg_iterations"] = rec.iterations;
    q["cg_relative_residual"] = number(rec.relative_residual);
    q["cg_converged"] = rec.converged;
    q["alpha_r"] = number(rec.alpha_r);
    q["J"] = Json{{"pde", number(rec.j_pde)},
                  {"boundary", number(rec.j_boundary)},
                  {"initial", number(rec.j_initial)},
                  {"regularization", number(rec.j_regularization)}};
    q["pass"] = rec.converged && err_qr <= tol;
    j["reconstruction"] = q;
    cx.log << "inverse-source: QR error on Omega_3eps = " << err_qr << " (tolerance " << tol << ")\n";
    if (!(rec.converged && err_qr <= tol)) cx.pass = false;
  }

  // Stability sweep
  {
    SourceExperiment ex;
    ex.field = field;
    ex.src = src;
    ex.domain = scenario_domain(sc, "stability");
    ex.time = scenario_time(sc, "stability");
    ex.weight = build_weight(sc, field, ex.domain, ex.time);
    ex.sigma = scenario_sigma(sc, field, ex.domain, ex.time);
    ex.eps_star = eps_star;
    ex.eps = scenario_eps(sc, ex.weight);
    ex.qr_s = sc.num("qr.s");
    const int levels = sc.integer("stability.levels");
    const double lmin = sc.num("stability.level_min"), lmax = sc.num("stability.level_max");
    for (int i = 0; i < levels; ++i)
      ex.noise_levels.push_back(levels == 1 ? lmax : lmin * std::pow(lmax / lmin, static_cast<double>(i) / (levels - 1)));
    ex.noise_levels.push_back(0.0);
    const auto base_seed = static_cast<std::uint64_t>(sc.integer("seed"));
    for (int i = 0; i < sc.integer("stability.seeds"); ++i) ex.seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
    ex.carleman_c = quick_carleman_constant(sc, field, src, ex.weight, ex.time);
    const std::string mode = sc.str("stability.mode");
    StabilityFit fit;
    if (mode == "A") fit = source_stability_mode_a(ex);
    else if (mode == "B") fit = source_stability_mode_b(ex);
    else throw Error(ErrorKind::BadOverride, "stability.mode must be A or B");
    {
      CsvWriter csv(cx.out / "stability.csv", {"noise", "seed", "D", "F", "err", "s_used", "in_fit"});
      for (const auto& s : fit.samples) {
        csv << s.noise << static_cast<long long>(s.seed) << s.d << s.f << s.err << s.s_used
            << static_cast<long long>(s.in_fit);
        csv.end_row();
      }
      record_file(cx, "stability.csv");
    }
    fit_plot(cx.out / "fit.svg", fit, "Hoelder fit, source (mode " + mode + ")", "D", "error on Omega_eps");
    record_file(cx, "fit.svg");
    Json f = fit_json(fit);
    const bool pass = fit.theta_hat > 0 && fit.theta_hat <= 1 && fit.residual < 0.2 && fit.monotone_ok && fit.pointwise_ok;
    f["mode"] = mode;
    f["eps"] = number(ex.eps);
    f["carleman_C"] = number(ex.carleman_c);
    f["theta_from_C"] = number(ex.eps / (ex.carleman_c + ex.eps));
    f["pass"] = pass;
    j["stability"] = f;
    cx.log << "inverse-source: theta_hat = " << fit.theta_hat << ", residual = " << fit.residual << "\n";
    if (!pass) cx.pass = false;
  }
  cx.manifest["inverse-source"] = j;
}

void run_inverse_coefficient(Context& cx) {
  const Scenario& sc = cx.sc;
  const SpaceTimeField field = scenario_field(sc);
  if (!field.time_independent)
    throw Error(ErrorKind::MembershipViolated, "coefficient pairs must be time-independent");
  CoefficientExperiment ex;
  ex.domain = scenario_domain(sc, "coefficient");
  ex.time = scenario_time(sc, "coefficient");
  const auto a0 = field.a0;
  const auto a = field.a;
  ex.pair2.a0 = [a0](const Vec2& x) { return a0(x, 0.0); };
  ex.pair2.a = [a](const Vec2& x) { return a(x, 0.0); };
  ex.pair2.M = sc.num("M");
  ex.pair2.rho = sc.num("rho");
  for (const auto& bp : ex.domain.boundary_mesh())
    ex.pair2.gamma.push_back(dot(ex.pair2.a(bp.position), bp.normal) > 0.0 ? 1 : 0);
  const Vec2 c{sc.num("coefficient.bump_x"), ex.domain.dim == 2 ? sc.num("coefficient.bump_y") : 0.0};
  const double w = sc.num("coefficient.bump_width");
  ex.direction_a0 = [c, w](const Vec2& x) {
    const Vec2 d = x - c;
    return std::exp(-dot(d, d) / (w * w));
  };
  const double p = sc.num("coefficient.p");
  ex.p = [p](const Vec2&, double) { return p; };
  ex.beta = sc.num("beta");
  ex.eps_star = sc.num("eps_star");
  ex.m0 = sc.num("coefficient.m0");
  ex.trace = scenario_trace(sc);
  const int count = sc.integer("coefficient.deltas");
  const double dmin = sc.num("coefficient.delta_min"), dmax = sc.num("coefficient.delta_max");
  for (int i = 0; i < count; ++i)
    ex.deltas.push_back(count == 1 ? dmax : dmin * std::pow(dmax / dmin, static_cast<double>(i) / (count - 1)));
  ex.deltas.push_back(0.0);
  {
    const WeightField w2 = build_weight(sc, field, ex.domain, ex.time);
    ex.eps = scenario_eps(sc, w2);
  }
  const CoefficientStudy st = coefficient_stability_experiment(ex);
  {
    CsvWriter csv(cx.out / "coefficient_stability.csv", {"delta", "D_frak", "F_frak", "left_norm", "in_fit"});
    for (const auto& s : st.fit.samples) {
      csv << s.noise << s.d << s.f << s.err << static_cast<long long>(s.in_fit);
      csv.end_row();
    }
    record_file(cx, "coefficient_stability.csv");
  }
  fit_plot(cx.out / "coefficient_fit.svg", st.fit, "Hoelder fit, coefficients", "D (data)", "coefficient difference on Omega_eps");
  record_file(cx, "coefficient_fit.svg");
  Json j = fit_json(st.fit);
  Json mem = Json::array();
  for (const auto& cl : st.membership2.clauses)
    mem.push_back(Json{{"clause", cl.name}, {"ok", cl.ok}, {"value", number(cl.value)}, {"bound", number(cl.bound)}});
  j["membership_pair2"] = mem;
  j["determinant_min"] = number(st.determinant.min_value);
  j["det_R_min"] = number(st.determinant.min_det_r);
  j["comparability_factor"] = number(st.determinant.c);
  j["comparability_holds"] = st.determinant.comparability_ok;
  Json eb = Json::array();
  for (double b : st.ensemble_bounds) eb.push_back(number(b));
  j["ensemble_bounds"] = eb;
  j["zero_delta_left"] = number(st.zero_left);
  j["zero_delta_D"] = number(st.zero_d);
  const bool pass = st.fit.theta_hat > 0 && st.fit.theta_hat <= 1 && st.fit.residual < 0.25 && st.zero_left == 0.0 &&
                    st.determinant.comparability_ok;
  j["pass"] = pass;
  cx.manifest["inverse-coefficient"] = j;
  cx.log << "inverse-coefficient: theta_hat = " << st.fit.theta_hat << ", residual = " << st.fit.residual << "\n";
  if (!pass) cx.pass = false;
}

Json resolved(const Scenario& sc) {
  Json j;
  for (const auto& [k, v] : sc.values()) j[k] = v;
  return j;
}

}  // namespace

int run(const std::string& command, const Scenario& scenario, const fs::path& out_dir, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  Context cx{scenario, out_dir, log, Json::object(), {}, true};
  cx.manifest["tool"] = "carleman_lab";
  cx.manifest["version"] = kToolVersion;
  cx.manifest["command"] = command;
  cx.manifest["scenario"] = scenario.name();
  cx.manifest["seed"] = scenario.str("seed");
  cx.manifest["parameters"] = resolved(scenario);
  int code = 0;
  try {
    if (command == "geometry" || command == "all") run_geometry(cx);
    if (command == "carleman" || command == "all") run_carleman(cx);
    if (command == "inverse-source" || command == "all") run_inverse_source(cx);
    if (command == "inverse-coefficient" || command == "all") run_inverse_coefficient(cx);
    if (std::find(run_commands().begin(), run_commands().end(), command) == run_commands().end())
      throw Error(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
    code = cx.pass ? 0 : 1;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    cx.manifest["error"] = e.what();
    cx.manifest["error_kind"] = std::string(to_string(e.kind()));
    code = is_hypothesis_violation(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << "\n";
    cx.manifest["error"] = e.what();
    code = 1;
  }
  cx.manifest["pass"] = code == 0;
  cx.manifest["exit_code"] = code;
  cx.manifest["files"] = cx.files;
  cx.manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream m(out_dir / "manifest.json", std::ios::binary);
  m << cx.manifest.dump(2) << "\n";
  return code;
}

}  // namespace carleman

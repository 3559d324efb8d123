#include "carleman/inverse_coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "carleman/error.hpp"
#include "carleman/parallel.hpp"

namespace carleman {

SpaceTimeField CoefficientPair::field(double T) const {
  SpaceTimeField f;
  const SpatialScalar a0_fn = a0;
  const SpatialVector a_fn = a;
  f.a0 = [a0_fn](const Vec2& x, double) { return a0_fn(x); };
  f.a = [a_fn](const Vec2& x, double) { return a_fn(x); };
  f.rho = rho;
  f.M = M;
  f.T = T;
  f.time_independent = true;
  return f;
}

CoefficientPair perturb(const CoefficientPair& pair, const SpatialScalar& d0, const SpatialVector& d, double delta) {
  CoefficientPair out = pair;
  const SpatialScalar a0 = pair.a0;
  const SpatialVector a = pair.a;
  out.a0 = [a0, d0, delta](const Vec2& x) { return a0(x) + delta * (d0 ? d0(x) : 0.0); };
  out.a = [a, d, delta](const Vec2& x) { return a(x) + (d ? d(x) : Vec2{0.0, 0.0}) * delta; };
  return out;
}

const MembershipClause* MembershipReport::find(const std::string& name) const {
  for (const auto& c : clauses)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

constexpr double kFirstStep = 1e-5;
constexpr double kSecondStep = 1e-4;

Vec2 axis_vec(int axis, double h) { return axis == 0 ? Vec2{h, 0.0} : Vec2{0.0, h}; }

}  // namespace

MembershipReport check_membership(const CoefficientPair& pair, const SpatialDomain& domain,
                                  const TraceOptions& trace) {
  MembershipReport rep;
  const int dim = domain.dim;
  double sup_a0 = 0, sup_grad_a0 = 0, sup_a = 0, sup_da = 0, sup_d2a = 0;
  double min_a0 = std::numeric_limits<double>::infinity();
  double min_speed = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < domain.size(); ++n) {
    const Vec2 x = domain.node(n);
    const double a0 = pair.a0(x);
    const Vec2 a = pair.a(x);
    sup_a0 = std::max(sup_a0, std::abs(a0));
    min_a0 = std::min(min_a0, a0);
    sup_a = std::max(sup_a, norm(a));
    min_speed = std::min(min_speed, norm(a));
    double g2 = 0.0;
    double da2 = 0.0;
    double d2a2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      const Vec2 e = axis_vec(i, kFirstStep);
      const double g = (pair.a0(x + e) - pair.a0(x - e)) / (2 * kFirstStep);
      g2 += g * g;
      const Vec2 da = (pair.a(x + e) - pair.a(x - e)) * (1.0 / (2 * kFirstStep));
      da2 += dot(da, da);
      for (int j = 0; j < dim; ++j) {
        const Vec2 ei = axis_vec(i, kSecondStep);
        const Vec2 ej = axis_vec(j, kSecondStep);
        Vec2 second;
        if (i == j) {
          second = (pair.a(x + ei) - a * 2.0 + pair.a(x - ei)) * (1.0 / (kSecondStep * kSecondStep));
        } else {
          second = (pair.a(x + ei + ej) - pair.a(x + ei - ej) - pair.a(x - ei + ej) + pair.a(x - ei - ej)) *
                   (1.0 / (4 * kSecondStep * kSecondStep));
        }
        d2a2 += dot(second, second);
      }
    }
    sup_grad_a0 = std::max(sup_grad_a0, std::sqrt(g2));
    sup_da = std::max(sup_da, std::sqrt(da2));
    sup_d2a = std::max(sup_d2a, std::sqrt(d2a2));
  }
  rep.c1_a0 = sup_a0 + sup_grad_a0;
  rep.c2_a = sup_a + sup_da + sup_d2a;
  const double total = rep.c1_a0 + rep.c2_a;
  rep.clauses.push_back({"norm_bound", total <= pair.M + 1e-8, total, pair.M});
  rep.clauses.push_back({"min_a0", min_a0 >= pair.rho - 1e-10, min_a0, pair.rho});
  rep.clauses.push_back({"min_speed", min_speed >= pair.rho - 1e-10, min_speed, pair.rho});

  const DissipativenessReport dis = check_dissipative(pair.field(1.0), domain, trace);
  rep.clauses.push_back({"dissipative", dis.dissipative, static_cast<double>(dis.failures.size()), 0.0});

  const auto mesh = domain.boundary_mesh();
  int bad = 0;
  bool sized = pair.gamma.empty() || pair.gamma.size() == mesh.size();
  if (sized)
    for (std::size_t b = 0; b < pair.gamma.size(); ++b)
      if (pair.gamma[b] && !(dot(pair.a(mesh[b].position), mesh[b].normal) > 0.0)) ++bad;
  rep.clauses.push_back({"gamma_outflow", sized && bad == 0, static_cast<double>(bad), 0.0});

  rep.member = std::all_of(rep.clauses.begin(), rep.clauses.end(), [](const auto& c) { return c.ok; });
  return rep;
}

std::vector<InitialData> coordinate_slices(const SpatialDomain& domain) {
  std::vector<InitialData> s;
  s.push_back([](const Vec2&) { return 1.0; });
  s.push_back([](const Vec2& x) { return x.x; });
  if (domain.dim == 2) s.push_back([](const Vec2& x) { return x.y; });
  return s;
}

SolutionEnsemble solve_ensemble(const SpaceTimeField& field, const ScalarField& p, const SpatialDomain& domain,
                                const TimeAxis& time, const std::vector<InitialData>& initial,
                                const std::vector<InflowData>& inflow) {
  if (initial.size() != inflow.size()) throw Error(ErrorKind::InvalidArgument, "initial/inflow count mismatch");
  SourceSpec src = zero_source();
  src.p = p;
  ForwardOptions opt;
  opt.upwind = false;
  SolutionEnsemble ens;
  ens.initial = initial;
  ens.inflow = inflow;
  for (std::size_t m = 0; m < initial.size(); ++m)
    ens.u.push_back(solve_forward(field, src, domain, time, initial[m], inflow[m], opt).characteristics);
  return ens;
}

SolutionEnsemble make_ensemble(const SpaceTimeField& field, const ScalarField& p, const SpatialDomain& domain,
                               const TimeAxis& time) {
  SourceSpec src = zero_source();
  src.p = p;
  const auto initial = coordinate_slices(domain);
  std::vector<InflowData> inflow;
  for (const auto& init : initial) inflow.push_back(free_transport_inflow(field, src, init, time.step()));
  return solve_ensemble(field, p, domain, time, initial, inflow);
}

std::vector<double> ensemble_bounds(const SolutionEnsemble& ens) {
  std::vector<double> out;
  const auto sup = [](const GridFunction& g) {
    double m = 0.0;
    for (double v : g.values()) m = std::max(m, std::abs(v));
    return m;
  };
  for (const auto& u : ens.u) {
    const GridFunction ut = time_derivative(u);
    double total = sup(u) + sup(ut) + sup(time_derivative(ut));
    for (int axis = 0; axis < u.domain().dim; ++axis) {
      total += sup(space_derivative(u, axis));
      total += sup(space_derivative(ut, axis));
    }
    out.push_back(total);
  }
  return out;
}

RMatrix build_r_matrix(const std::vector<GridFunction>& ensemble) {
  if (ensemble.empty()) throw Error(ErrorKind::EnsembleSizeMismatch, "empty ensemble");
  const int dim = ensemble.front().domain().dim;
  if (static_cast<int>(ensemble.size()) != dim + 1) {
    std::ostringstream msg;
    msg << "ensemble has " << ensemble.size() << " members, expected " << dim + 1;
    throw Error(ErrorKind::EnsembleSizeMismatch, msg.str());
  }
  RMatrix r;
  r.dim = dim;
  for (const auto& u : ensemble) {
    std::vector<GridFunction> row;
    GridFunction ut = time_derivative(u);
    ut *= -1.0;
    row.push_back(std::move(ut));
    for (int axis = 0; axis < dim; ++axis) {
      GridFunction g = space_derivative(u, axis);
      g *= -1.0;
      row.push_back(std::move(g));
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

double v_equation_residual(const CoefficientPair& pair1, const CoefficientPair& pair2, const ScalarField& p,
                           const GridFunction& u1, const GridFunction& u2, const std::vector<GridFunction>& r_row,
                           double T) {
  const GridFunction v = u1 - u2;
  const GridFunction lhs = apply_transport(pair1.field(T), p, v);
  const SpatialDomain& d = v.domain();
  const std::size_t ns = d.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 x = d.node(i % ns);
    const double f0 = pair1.a0(x) - pair2.a0(x);
    const Vec2 f1 = pair1.a(x) - pair2.a(x);
    double rf = r_row[0].values()[i] * f0 + r_row[1].values()[i] * f1.x;
    if (d.dim == 2) rf += r_row[2].values()[i] * f1.y;
    worst = std::max(worst, std::abs(lhs.values()[i] - rf));
  }
  return worst;
}

namespace {

double det(const std::vector<std::vector<double>>& m) {
  if (m.size() == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace

DeterminantReport check_determinant_condition(const SpaceTimeField& field, const std::vector<GridFunction>& ensemble,
                                              const ScalarField& p, double m0) {
  const RMatrix r = build_r_matrix(ensemble);
  const int dim = r.dim;
  const int size = dim + 1;
  const SpatialDomain& d = ensemble.front().domain();
  const TimeAxis& tm = ensemble.front().time();
  if (tm.levels < 3) throw Error(ErrorKind::InvalidArgument, "need at least three time levels");
  const std::size_t ns = d.size();
  std::vector<std::vector<double>> grads;  // [m * dim + axis][n]
  for (const auto& u : ensemble)
    for (int axis = 0; axis < dim; ++axis) grads.push_back(space_derivative(d, u.slice(0), axis));

  DeterminantReport rep;
  rep.values.resize(ns);
  rep.det_r.resize(ns);
  double sup_a0 = 0.0;
  for (std::size_t n = 0; n < ns; ++n) sup_a0 = std::max(sup_a0, field.a0(d.node(n), 0.0));
  rep.c = 1.0 / sup_a0;
  const double ht = tm.step();
  std::vector<std::vector<double>> v(size, std::vector<double>(size));
  std::vector<std::vector<double>> rm(size, std::vector<double>(size));
  for (std::size_t n = 0; n < ns; ++n) {
    for (int m = 0; m < size; ++m) {
      const GridFunction& u = ensemble[static_cast<std::size_t>(m)];
      v[0][m] = u(n, 0);
      rm[m][0] = -(-3.0 * u(n, 0) + 4.0 * u(n, 1) - u(n, 2)) / (2.0 * ht);
      for (int axis = 0; axis < dim; ++axis) {
        const double g = grads[static_cast<std::size_t>(m * dim + axis)][n];
        v[1 + axis][m] = g;
        rm[m][1 + axis] = -g;
      }
    }
    rep.values[n] = std::abs(p(d.node(n), 0.0)) * std::abs(det(v));
    rep.det_r[n] = std::abs(det(rm));
  }
  rep.min_value = *std::min_element(rep.values.begin(), rep.values.end());
  rep.min_det_r = *std::min_element(rep.det_r.begin(), rep.det_r.end());
  rep.ok = rep.min_value >= m0 && m0 > 0.0;
  const double scale = *std::max_element(rep.values.begin(), rep.values.end());
  rep.tolerance = (d.h() + ht) * scale;
  rep.comparability_ok = true;
  for (std::size_t n = 0; n < ns; ++n)
    if (rep.det_r[n] < rep.c * rep.values[n] - rep.tolerance) rep.comparability_ok = false;
  return rep;
}

double coefficient_difference_norm(const CoefficientPair& a, const CoefficientPair& b, const SpatialDomain& domain,
                                   std::span<const char> mask) {
  const std::size_t ns = domain.size();
  std::vector<double> d0(ns), dx(ns), dy(ns);
  for (std::size_t n = 0; n < ns; ++n) {
    const Vec2 x = domain.node(n);
    d0[n] = a.a0(x) - b.a0(x);
    const Vec2 da = a.a(x) - b.a(x);
    dx[n] = da.x;
    dy[n] = da.y;
  }
  double total = l2_norm(domain, d0, mask) + l2_norm(domain, dx, mask);
  if (domain.dim == 2) total += l2_norm(domain, dy, mask);
  return total;
}

namespace {

double pair_size(const CoefficientPair& pair, const SolutionEnsemble& ens, const SpatialDomain& domain) {
  CoefficientPair zero = pair;
  zero.a0 = [](const Vec2&) { return 0.0; };
  zero.a = [](const Vec2&) { return Vec2{0.0, 0.0}; };
  double total = coefficient_difference_norm(pair, zero, domain);
  for (const auto& u : ens.u) total += h1_time_l2_space(u);
  return total;
}

BoundaryMask gamma_mask(const CoefficientPair& pair, const SpatialDomain& domain, const TimeAxis& time) {
  BoundaryMask m;
  m.mesh = domain.boundary_mesh();
  m.time = time;
  m.mask.assign(m.mesh.size() * static_cast<std::size_t>(time.levels), 0);
  if (pair.gamma.size() != m.mesh.size()) return m;
  for (int k = 0; k < time.levels; ++k)
    for (std::size_t b = 0; b < m.mesh.size(); ++b) m.mask[static_cast<std::size_t>(k) * m.mesh.size() + b] = pair.gamma[b];
  return m;
}

std::string failed_clauses(const MembershipReport& rep) {
  std::string s;
  for (const auto& c : rep.clauses)
    if (!c.ok) s += (s.empty() ? "" : ", ") + c.name;
  return s;
}

}  // namespace

CoefficientStudy coefficient_stability_experiment(const CoefficientExperiment& ex) {
  CoefficientStudy study;
  study.membership2 = check_membership(ex.pair2, ex.domain, ex.trace);
  if (!study.membership2.member)
    throw Error(ErrorKind::MembershipViolated, "second pair fails: " + failed_clauses(study.membership2));
  const SpaceTimeField field2 = ex.pair2.field(ex.time.T);
  const SolutionEnsemble ens2 = make_ensemble(field2, ex.p, ex.domain, ex.time);
  study.determinant = check_determinant_condition(field2, ens2.u, ex.p, ex.m0);
  if (!study.determinant.ok) {
    std::ostringstream msg;
    msg << "min |p| |det| = " << study.determinant.min_value << " < m0 = " << ex.m0;
    throw Error(ErrorKind::DeterminantConditionViolated, msg.str());
  }
  study.ensemble_bounds = ensemble_bounds(ens2);
  const BoundaryMask gamma = gamma_mask(ex.pair2, ex.domain, ex.time);
  const double size2 = pair_size(ex.pair2, ens2, ex.domain);

  for (double requested : ex.deltas) {
    double delta = requested;
    CoefficientPair pair1 = perturb(ex.pair2, ex.direction_a0, ex.direction_a, delta);
    int halvings = 0;
    while (delta > 0.0 && !check_membership(pair1, ex.domain, ex.trace).member) {
      if (++halvings > 40) throw Error(ErrorKind::MembershipViolated, "perturbation cannot be projected into D");
      delta *= 0.5;
      pair1 = perturb(ex.pair2, ex.direction_a0, ex.direction_a, delta);
    }
    const SpaceTimeField field1 = pair1.field(ex.time.T);
    const WeightField weight1 = make_weight(compute_phi0(field1, ex.domain, ex.trace), field1, ex.beta, ex.time);
    const GeometricConditionReport geo = check_geometric_condition(weight1, ex.eps_star, gamma);
    if (!geo.ok) throw Error(ErrorKind::GeometricConditionViolated, "Gamma does not cover Q_eps* on the lateral boundary");
    const RegionMask star = region_mask(weight1, ex.eps_star, ex.time);
    const RegionMask local = region_mask(weight1, ex.eps, ex.time);
    const SolutionEnsemble ens1 = solve_ensemble(field1, ex.p, ex.domain, ex.time, ens2.initial, ens2.inflow);

    double data = 0.0;
    for (std::size_t m = 0; m < ens1.u.size(); ++m) {
      const CauchyData d1 = extract_trace(ens1.u[m], gamma, star.omega);
      const CauchyData d2 = extract_trace(ens2.u[m], gamma, star.omega);
      data += coefficient_data_norm(data_difference(d1, d2));
    }
    StabilitySample smp;
    smp.noise = delta;
    smp.d = data;
    smp.f = std::max(size2, pair_size(pair1, ens1, ex.domain));
    smp.err = coefficient_difference_norm(pair1, ex.pair2, ex.domain, local.omega);
    smp.s_used = data > 0 ? balance_s(data, smp.f, ex.carleman_c, ex.eps).s : 0.0;
    if (delta == 0.0) {
      study.zero_left = smp.err;
      study.zero_d = smp.d;
    }
    study.requested.push_back(requested);
    study.fit.samples.push_back(smp);
  }
  fit_holder(study.fit);
  return study;
}

}  // namespace carleman

#include "carleman/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "carleman/error.hpp"
#include "carleman/parallel.hpp"

namespace carleman {

std::string_view to_string(CurveExit e) {
  switch (e) {
    case CurveExit::Boundary: return "boundary";
    case CurveExit::LengthBudget: return "length budget";
    case CurveExit::ClosedOrbit: return "closed orbit";
  }
  return "unknown";
}

namespace {

constexpr double kBisectionWidth = 1e-14;
constexpr double kStagnationSpeed = 1e-14;
constexpr double kClosedOrbitCosine = 0.99;
constexpr std::size_t kMaxSteps = 20'000'000;

struct CurveState {
  Vec2 c;
  double length = 0.0;
};

// RK4 step of dc/ds = dir * A(c, 0), dl/ds = |A(c, 0)| with s = |sigma|.
CurveState rk4_step(const SpaceTimeField& field, const CurveState& y, double h, double dir) {
  const auto rhs = [&](const Vec2& c, Vec2& dc, double& dl) {
    const Vec2 v = field.initial(c);
    dc = v * dir;
    dl = norm(v);
  };
  Vec2 k1, k2, k3, k4;
  double l1 = 0, l2 = 0, l3 = 0, l4 = 0;
  rhs(y.c, k1, l1);
  rhs(y.c + k1 * (0.5 * h), k2, l2);
  rhs(y.c + k2 * (0.5 * h), k3, l3);
  rhs(y.c + k3 * h, k4, l4);
  return {y.c + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0), y.length + h / 6.0 * (l1 + 2 * l2 + 2 * l3 + l4)};
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + ab * t));
}

void validate_trace(const SpaceTimeField& field, const SpatialDomain& domain, const Vec2& x,
                    const TraceOptions& options) {
  if (!(options.ode_step > 0)) throw Error(ErrorKind::InvalidArgument, "ode_step must be positive");
  if (field.rho > 0 && options.ode_step > 0.1 * field.rho / field.M) {
    std::ostringstream msg;
    msg << "ode_step " << options.ode_step << " exceeds 0.1 rho/M = " << 0.1 * field.rho / field.M;
    throw Error(ErrorKind::StepTooLarge, msg.str());
  }
  if (!domain.contains(x)) throw Error(ErrorKind::OutsideDomain, "start point is not in the closed domain");
}

}  // namespace

BranchEnd trace_branch(const SpaceTimeField& field, const SpatialDomain& domain, const Vec2& x, int direction,
                       const TraceOptions& options, std::vector<CurveSample>* samples) {
  validate_trace(field, domain, x, options);
  const double dir = direction >= 0 ? 1.0 : -1.0;
  const double h = options.ode_step;
  const double budget = options.length_budget > 0 ? options.length_budget : 10.0 * domain.diameter();

  const Vec2 start_tangent = field.initial(x);
  const double start_speed = norm(start_tangent);
  BranchEnd end;
  end.end = x;
  if (start_speed < kStagnationSpeed) {
    end.exit = CurveExit::ClosedOrbit;
    return end;
  }

  CurveState y{x, 0.0};
  double s = 0.0;
  bool left_start = false;
  for (std::size_t step = 0; step < kMaxSteps; ++step) {
    if (y.length >= budget) {
      end.exit = CurveExit::LengthBudget;
      break;
    }
    const CurveState next = rk4_step(field, y, h, dir);
    if (!domain.contains(next.c)) {
      double lo = 0.0;
      double hi = h;
      while (hi - lo > kBisectionWidth) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (domain.contains(rk4_step(field, y, mid, dir).c)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      if (lo > 0) {
        y = rk4_step(field, y, lo, dir);
        s += lo;
        if (samples) samples->push_back({dir * s, y.c});
      }
      end.exit = CurveExit::Boundary;
      break;
    }
    const Vec2 tangent = field.initial(next.c);
    if (norm(tangent) < kStagnationSpeed) {
      y = next;
      s += h;
      if (samples) samples->push_back({dir * s, y.c});
      end.exit = CurveExit::ClosedOrbit;
      break;
    }
    if (!left_start && norm(y.c - x) > h) left_start = true;
    if (left_start && segment_distance(x, y.c, next.c) <= 0.5 * h &&
        dot(tangent, start_tangent) / (norm(tangent) * start_speed) > kClosedOrbitCosine) {
      y = next;
      s += h;
      if (samples) samples->push_back({dir * s, y.c});
      end.exit = CurveExit::ClosedOrbit;
      break;
    }
    y = next;
    s += h;
    if (samples) samples->push_back({dir * s, y.c});
    if (step + 1 == kMaxSteps) end.exit = CurveExit::LengthBudget;
  }
  end.sigma = dir * s;
  end.length = y.length;
  end.end = y.c;
  return end;
}

IntegralCurve trace_integral_curve(const SpaceTimeField& field, const SpatialDomain& domain, const Vec2& x,
                                   const TraceOptions& options) {
  IntegralCurve curve;
  curve.base = x;
  std::vector<CurveSample> back;
  std::vector<CurveSample> fwd;
  const BranchEnd b = trace_branch(field, domain, x, -1, options, &back);
  const BranchEnd f = trace_branch(field, domain, x, +1, options, &fwd);
  curve.samples.reserve(back.size() + fwd.size() + 1);
  for (auto it = back.rbegin(); it != back.rend(); ++it) curve.samples.push_back(*it);
  curve.samples.push_back({0.0, x});
  curve.samples.insert(curve.samples.end(), fwd.begin(), fwd.end());
  curve.sigma_minus = b.sigma;
  curve.sigma_plus = f.sigma;
  curve.length_minus = b.length;
  curve.length_plus = f.length;
  curve.exit_backward = b.exit;
  curve.exit_forward = f.exit;
  return curve;
}

namespace {

double sigma_smoothness_proxy(const SpatialDomain& domain, const std::vector<double>& sigma) {
  double proxy = 0.0;
  for (std::size_t n = 0; n < domain.size(); ++n) {
    const int i = domain.ix(n);
    const int j = domain.iy(n);
    const auto probe = [&](std::size_t a, std::size_t c, double h) {
      const double v = (sigma[a] - 2.0 * sigma[n] + sigma[c]) / (h * h);
      if (std::isfinite(v)) proxy = std::max(proxy, std::abs(v));
    };
    if (i > 0 && i < domain.nx - 1) probe(domain.index(i - 1, j), domain.index(i + 1, j), domain.hx());
    if (domain.dim == 2 && j > 0 && j < domain.ny - 1)
      probe(domain.index(i, j - 1), domain.index(i, j + 1), domain.hy());
  }
  return proxy;
}

}  // namespace

DissipativenessReport check_dissipative(const SpaceTimeField& field, const SpatialDomain& domain,
                                        const TraceOptions& options) {
  const std::size_t n = domain.size();
  DissipativenessReport r;
  r.exit_backward.assign(n, CurveExit::Boundary);
  r.exit_forward.assign(n, CurveExit::Boundary);
  r.sigma_minus.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.sigma_plus.assign(n, std::numeric_limits<double>::quiet_NaN());
  r.backward_length.assign(n, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n, [&](std::size_t k) {
    const Vec2 x = domain.node(k);
    const BranchEnd b = trace_branch(field, domain, x, -1, options);
    const BranchEnd f = trace_branch(field, domain, x, +1, options);
    r.exit_backward[k] = b.exit;
    r.exit_forward[k] = f.exit;
    if (b.exit == CurveExit::Boundary) {
      r.sigma_minus[k] = b.sigma;
      r.backward_length[k] = b.length;
    }
    if (f.exit == CurveExit::Boundary) r.sigma_plus[k] = f.sigma;
  });
  for (std::size_t k = 0; k < n; ++k)
    if (r.exit_backward[k] != CurveExit::Boundary || r.exit_forward[k] != CurveExit::Boundary) r.failures.push_back(k);
  r.dissipative = r.failures.empty();
  r.smoothness_proxy = sigma_smoothness_proxy(domain, r.sigma_minus);
  return r;
}

SpdReport check_spd_condition(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time,
                              int probe_count, std::uint64_t seed) {
  if (probe_count < domain.dim + 1) throw Error(ErrorKind::InvalidArgument, "probe_count must be at least d+1");
  std::vector<Vec2> probes;
  probes.push_back({1.0, 0.0});
  if (domain.dim == 2) probes.push_back({0.0, 1.0});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::acos(-1.0));
  while (static_cast<int>(probes.size()) < probe_count) {
    if (domain.dim == 1) {
      probes.push_back({-1.0, 0.0});
      continue;
    }
    const double a = angle(rng);
    probes.push_back({std::cos(a), std::sin(a)});
  }

  SpdReport r;
  r.ok = true;
  for (int k = 0; k < time.levels; ++k) {
    const double t = time.at(k);
    for (std::size_t n = 0; n < domain.size(); ++n) {
      const Vec2 x = domain.node(n);
      const Vec2 a = field.a(x, t);
      const Vec2 da = field.dt_a_at(x, t);
      for (const Vec2& xi : probes) {
        const double lhs = std::abs(dot(da, xi));
        const double rhs = std::abs(dot(a, xi));
        if (rhs < 1e-12) {
          if (lhs > 1e-10) {
            r.ok = false;
            r.witness = SpdWitness{x, t, xi};
            return r;
          }
          continue;
        }
        r.constant = std::max(r.constant, lhs / rhs);
      }
    }
  }
  return r;
}

double WeightField::max_phi0() const { return *std::max_element(phi0.begin(), phi0.end()); }

WeightField compute_phi0(const SpaceTimeField& field, const SpatialDomain& domain, const TraceOptions& options) {
  WeightField w;
  w.domain = domain;
  w.phi0.assign(domain.size(), 0.0);
  w.sigma_minus.assign(domain.size(), 0.0);
  std::vector<char> failed(domain.size(), 0);
  parallel_for(domain.size(), [&](std::size_t k) {
    const BranchEnd b = trace_branch(field, domain, domain.node(k), -1, options);
    if (b.exit != CurveExit::Boundary) {
      failed[k] = 1;
      return;
    }
    w.phi0[k] = b.length;
    w.sigma_minus[k] = b.sigma;
  });
  const auto bad = std::count(failed.begin(), failed.end(), 1);
  if (bad > 0) {
    std::ostringstream msg;
    msg << bad << " grid node(s) have a backward integral curve that does not reach the boundary";
    throw Error(ErrorKind::NotDissipative, msg.str());
  }
  return w;
}

WeightField make_weight(WeightField phi0, const SpaceTimeField& field, double beta, const TimeAxis& time) {
  const double bound = field.rho / sup_a0(field, phi0.domain, time);
  phi0.beta_bound = bound;
  if (!(beta > 0.0) || !(beta < bound)) {
    std::ostringstream msg;
    msg << "beta = " << beta << " violates 0 < beta < rho / sup A0 = " << bound;
    throw Error(ErrorKind::InvalidBeta, msg.str());
  }
  phi0.beta = beta;
  phi0.has_beta = true;
  return phi0;
}

RegionMask region_mask(const WeightField& weight, double level, const TimeAxis& time) {
  RegionMask m;
  m.level = level;
  const std::size_t ns = weight.domain.size();
  m.omega.resize(ns);
  for (std::size_t n = 0; n < ns; ++n) m.omega[n] = weight.phi0[n] > level;
  m.q.resize(ns * static_cast<std::size_t>(time.levels));
  for (int k = 0; k < time.levels; ++k)
    for (std::size_t n = 0; n < ns; ++n)
      m.q[static_cast<std::size_t>(k) * ns + n] = weight.phi_node(n, time.at(k)) > level;
  return m;
}

std::size_t BoundaryMask::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

BoundaryMask compute_sigma_plus(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time) {
  BoundaryMask m;
  m.mesh = domain.boundary_mesh();
  m.time = time;
  m.mask.resize(m.mesh.size() * static_cast<std::size_t>(time.levels));
  for (int k = 0; k < time.levels; ++k)
    for (std::size_t b = 0; b < m.mesh.size(); ++b)
      m.mask[static_cast<std::size_t>(k) * m.mesh.size() + b] =
          dot(field.a(m.mesh[b].position, time.at(k)), m.mesh[b].normal) > 0.0;
  return m;
}

BoundaryMask complement(const BoundaryMask& m) {
  BoundaryMask c = m;
  for (auto& v : c.mask) v = !v;
  return c;
}

GeometricConditionReport check_geometric_condition(const WeightField& weight, double eps_star,
                                                   const BoundaryMask& sigma) {
  if (!weight.has_beta) throw Error(ErrorKind::InvalidArgument, "weight has no beta installed");
  GeometricConditionReport r;
  const TimeAxis& time = sigma.time;
  const SpatialDomain& domain = weight.domain;
  // lateral surface, including its bottom and top rims
  for (int k = 0; k < time.levels; ++k) {
    const double t = time.at(k);
    for (std::size_t b = 0; b < sigma.mesh.size(); ++b) {
      const double phi = weight.phi_node(sigma.mesh[b].node, t);
      if (!(phi > eps_star)) continue;
      r.nonempty = true;
      if (k == 0 || sigma.at(b, k)) continue;
      r.violations.push_back({sigma.mesh[b].position, t, phi, BoundaryPart::LateralOutsideSigma});
    }
  }
  // bottom slice: always admissible, only contributes to non-emptiness
  for (std::size_t n = 0; n < domain.size(); ++n)
    if (weight.phi_node(n, 0.0) > eps_star) r.nonempty = true;
  // interior of the top lid
  for (std::size_t n = 0; n < domain.size(); ++n) {
    if (domain.on_boundary_node(n)) continue;
    const double phi = weight.phi_node(n, time.T);
    if (phi > eps_star) {
      r.nonempty = true;
      r.violations.push_back({domain.node(n), time.T, phi, BoundaryPart::TopLid});
    }
  }
  r.ok = r.nonempty && r.violations.empty();
  return r;
}

double smoothstep5(double r) {
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return 1.0;
  // rounding can push the polynomial past 1 just below r = 1
  return std::min(1.0, r * r * r * (10.0 + r * (-15.0 + 6.0 * r)));
}

double smoothstep5_derivative(double r) {
  if (r <= 0.0 || smoothstep5(r) == 1.0) return 0.0;
  const double q = r * (1.0 - r);
  return 30.0 * q * q;
}

CutoffField::CutoffField(WeightField weight, double eps) : weight_(std::move(weight)), eps_(eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "cutoff level must be positive");
  if (!weight_.has_beta) throw Error(ErrorKind::InvalidArgument, "weight has no beta installed");
  if (!(weight_.max_phi0() > 2.0 * eps)) {
    std::ostringstream msg;
    msg << "no grid point has phi > 2 eps = " << 2.0 * eps;
    throw Error(ErrorKind::EmptyPlateau, msg.str());
  }
  grad_x_ = space_derivative(weight_.domain, weight_.phi0, 0);
  if (weight_.domain.dim == 2) grad_y_ = space_derivative(weight_.domain, weight_.phi0, 1);
}

double CutoffField::value(const Vec2& x, double t) const { return smoothstep5(ramp(x, t)); }

double CutoffField::dt(const Vec2& x, double t) const {
  return smoothstep5_derivative(ramp(x, t)) / eps_ * (-weight_.beta);
}

Vec2 CutoffField::grad(const Vec2& x, double t) const {
  const double ds = smoothstep5_derivative(ramp(x, t)) / eps_;
  if (ds == 0.0) return {0.0, 0.0};
  Vec2 g{weight_.domain.interpolate(grad_x_, x), 0.0};
  if (weight_.domain.dim == 2) g.y = weight_.domain.interpolate(grad_y_, x);
  return g * ds;
}

double CutoffField::apply_operator(const SpaceTimeField& field, const Vec2& x, double t) const {
  return field.a0(x, t) * dt(x, t) + dot(field.a(x, t), grad(x, t));
}

CutoffField build_cutoff(const WeightField& weight, double eps) { return CutoffField(weight, eps); }

}  // namespace carleman

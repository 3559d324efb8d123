#include "carleman/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "carleman/error.hpp"
#include "carleman/parallel.hpp"

namespace carleman {

double CarlemanTerms::ratio() const {
  const double den = rhs1 + rhs2;
  if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (lhs1 + lhs2) / den;
}

CarlemanTerms CarlemanTerms::unscaled() const {
  CarlemanTerms out = *this;
  const double f = std::exp(2.0 * s * shift);
  out.lhs1 *= f;
  out.lhs2 *= f;
  out.rhs1 *= f;
  out.rhs2 *= f;
  out.shift = 0.0;
  return out;
}

CarlemanEvaluator::CarlemanEvaluator(const SpaceTimeField& field, ScalarField p, const WeightField& weight,
                                     const TimeAxis& time)
    : field_(field), weight_(weight), time_(time) {
  const double bound = field.rho / sup_a0(field, weight.domain, time);
  if (!weight.has_beta || !(weight.beta > 0.0) || !(weight.beta < bound)) {
    std::ostringstream msg;
    msg << "beta = " << weight.beta << " is outside 0 < beta < rho / sup A0 = " << bound;
    throw Error(ErrorKind::InadmissibleWeight, msg.str());
  }
  const SpatialDomain& d = weight.domain;
  const std::size_t ns = d.size();
  const std::size_t total = ns * static_cast<std::size_t>(time.levels);
  a0_.resize(total);
  ax_.resize(total);
  ay_.resize(total);
  p_.resize(total);
  phi_.resize(total);
  parallel_for(total, [&](std::size_t i) {
    const std::size_t n = i % ns;
    const double t = time.at(static_cast<int>(i / ns));
    const Vec2 x = d.node(n);
    a0_[i] = field.a0(x, t);
    const Vec2 a = field.a(x, t);
    ax_[i] = a.x;
    ay_[i] = a.y;
    p_[i] = p ? p(x, t) : 0.0;
    phi_[i] = weight.phi_node(n, t);
  });
  phi_max_ = *std::max_element(phi_.begin(), phi_.end());
  sigma_plus_ = compute_sigma_plus(field, d, time);
}

GridFunction CarlemanEvaluator::apply_operator(const GridFunction& u) const {
  const GridFunction ut = time_derivative(u);
  const GridFunction ux = space_derivative(u, 0);
  GridFunction out(u.domain(), u.time());
  auto o = out.values();
  const auto uv = u.values();
  const auto tv = ut.values();
  const auto xv = ux.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a0_[i] * tv[i] + ax_[i] * xv[i] + p_[i] * uv[i];
  if (u.domain().dim == 2) {
    const GridFunction uy = space_derivative(u, 1);
    const auto yv = uy.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += ay_[i] * yv[i];
  }
  return out;
}

CarlemanTerms CarlemanEvaluator::evaluate(const GridFunction& u, double s) const {
  const SpatialDomain& d = weight_.domain;
  const std::size_t ns = d.size();
  const int last = time_.levels - 1;
  for (std::size_t n = 0; n < ns; ++n) {
    if (std::abs(u(n, last)) > 1e-12) {
      std::ostringstream msg;
      msg << "u(x, T) = " << u(n, last) << " at node " << n;
      throw Error(ErrorKind::FinalTimeNotZero, msg.str());
    }
  }
  const GridFunction pu = apply_operator(u);
  const auto wx = d.quadrature_weights();
  const auto wt = time_.quadrature_weights();
  CarlemanTerms r;
  r.s = s;
  r.shift = phi_max_;
  double q_u = 0.0;
  double q_pu = 0.0;
  for (int k = 0; k <= last; ++k) {
    for (std::size_t n = 0; n < ns; ++n) {
      const std::size_t i = static_cast<std::size_t>(k) * ns + n;
      const double w = wt[static_cast<std::size_t>(k)] * wx[n] * std::exp(2.0 * s * (phi_[i] - phi_max_));
      q_u += w * u(n, k) * u(n, k);
      q_pu += w * pu.values()[i] * pu.values()[i];
    }
  }
  double q0 = 0.0;
  for (std::size_t n = 0; n < ns; ++n) q0 += wx[n] * std::exp(2.0 * s * (phi_[n] - phi_max_)) * u(n, 0) * u(n, 0);
  double qb = 0.0;
  const std::size_t nb = sigma_plus_.mesh.size();
  for (int k = 0; k <= last; ++k) {
    for (std::size_t b = 0; b < nb; ++b) {
      if (!sigma_plus_.at(b, k)) continue;
      const std::size_t node = sigma_plus_.mesh[b].node;
      const std::size_t i = static_cast<std::size_t>(k) * ns + node;
      const double w = wt[static_cast<std::size_t>(k)] * sigma_plus_.mesh[b].weight *
                       std::exp(2.0 * s * (phi_[i] - phi_max_));
      qb += w * u(node, k) * u(node, k);
    }
  }
  r.lhs1 = s * s * q_u;
  r.lhs2 = s * q0;
  r.rhs1 = q_pu;
  r.rhs2 = s * qb;
  return r;
}

double CarlemanEvaluator::weight_concentration(double eps, double s) const {
  const SpatialDomain& d = weight_.domain;
  const std::size_t ns = d.size();
  const auto wx = d.quadrature_weights();
  const auto wt = time_.quadrature_weights();
  double inside = 0.0;
  double all = 0.0;
  for (int k = 0; k < time_.levels; ++k) {
    for (std::size_t n = 0; n < ns; ++n) {
      const std::size_t i = static_cast<std::size_t>(k) * ns + n;
      const double w = wt[static_cast<std::size_t>(k)] * wx[n] * std::exp(2.0 * s * (phi_[i] - phi_max_));
      all += w;
      if (phi_[i] > eps) inside += w;
    }
  }
  return inside / all;
}

CarlemanTerms evaluate_carleman(const GridFunction& u, const SpaceTimeField& field, const ScalarField& p,
                                const WeightField& weight, double s) {
  return CarlemanEvaluator(field, p, weight, u.time()).evaluate(u, s);
}

namespace {

struct Profile {
  double b0, b1, b2, c1, c2;
  double operator()(double xi) const {
    return b0 + b1 * xi + b2 * xi * xi + c1 * std::sin(std::numbers::pi * xi) + c2 * std::cos(std::numbers::pi * xi);
  }
};

Profile random_profile(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Profile p{};
  p.b0 = u(rng);
  p.b1 = u(rng);
  p.b2 = u(rng);
  p.c1 = u(rng);
  p.c2 = u(rng);
  return p;
}

}  // namespace

std::vector<GridFunction> carleman_test_family(const SpatialDomain& domain, const TimeAxis& time, int count,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<GridFunction> family;
  family.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    // psi(t) = (T - t)(c0 + c1 tau + c2 tau^2), c0 kept away from zero
    const double c0 = 1.0 + 0.5 * unit(rng);
    const double c1 = unit(rng);
    const double c2 = unit(rng);
    const Profile wx = random_profile(rng);
    const Profile wy = random_profile(rng);
    GridFunction u(domain, time);
    const double lx = domain.hi.x - domain.lo.x;
    const double ly = domain.dim == 2 ? domain.hi.y - domain.lo.y : 1.0;
    for (int k = 0; k < time.levels; ++k) {
      const double t = time.at(k);
      const double tau = t / time.T;
      const double psi = (time.T - t) * (c0 + c1 * tau + c2 * tau * tau);
      for (std::size_t n = 0; n < domain.size(); ++n) {
        const Vec2 x = domain.node(n);
        double w = wx((x.x - domain.lo.x) / lx);
        if (domain.dim == 2) w *= wy((x.y - domain.lo.y) / ly);
        u(n, k) = psi * w;
      }
    }
    family.push_back(std::move(u));
  }
  return family;
}

CarlemanReport sweep_s(const std::vector<GridFunction>& family, const CarlemanEvaluator& evaluator,
                       const std::vector<double>& s_grid) {
  if (s_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty s grid");
  for (std::size_t j = 0; j < s_grid.size(); ++j) {
    if (!(s_grid[j] > 0.0) || (j > 0 && !(s_grid[j] > s_grid[j - 1])))
      throw Error(ErrorKind::InvalidArgument, "s grid must be positive and increasing");
  }
  CarlemanReport rep;
  rep.s_grid = s_grid;
  const std::size_t ns = s_grid.size();
  rep.terms.assign(family.size(), std::vector<CarlemanTerms>(ns));
  parallel_for(family.size() * ns, [&](std::size_t idx) {
    const std::size_t m = idx / ns;
    const std::size_t j = idx % ns;
    rep.terms[m][j] = evaluator.evaluate(family[m], s_grid[j]);
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.max_ratio.assign(ns, nan);
  rep.all_finite = !family.empty();
  bool any_defined = false;
  for (std::size_t j = 0; j < ns; ++j) {
    for (std::size_t m = 0; m < family.size(); ++m) {
      const double r = rep.terms[m][j].ratio();
      if (!std::isfinite(r)) {
        rep.all_finite = false;
        continue;
      }
      any_defined = true;
      if (std::isnan(rep.max_ratio[j]) || r > rep.max_ratio[j]) rep.max_ratio[j] = r;
    }
  }
  rep.degenerate = !any_defined;
  if (rep.degenerate) {
    rep.c_est = nan;
    rep.s_star_est = nan;
    rep.top_octave_growth = nan;
    rep.pass = false;
    return rep;
  }

  rep.c_est = 0.0;
  for (std::size_t j = ns / 2; j < ns; ++j)
    if (std::isfinite(rep.max_ratio[j])) rep.c_est = std::max(rep.c_est, rep.max_ratio[j]);

  std::size_t start = ns - 1;
  while (start > 0) {
    const double prev = rep.max_ratio[start - 1];
    const double cur = rep.max_ratio[start];
    if (!std::isfinite(prev) || !std::isfinite(cur) || cur > 1.01 * prev) break;
    --start;
  }
  rep.s_star_est = s_grid[start];

  // running max over the top octave [s_max / 2, s_max]
  const double s_max = s_grid.back();
  double before = nan;
  double running = nan;
  for (std::size_t j = 0; j < ns; ++j) {
    const double r = rep.max_ratio[j];
    if (std::isfinite(r)) running = std::isnan(running) ? r : std::max(running, r);
    if (s_grid[j] <= 0.5 * s_max * (1.0 + 1e-12)) before = running;
  }
  if (std::isnan(before)) before = running;
  rep.top_octave_growth = running / before - 1.0;
  rep.pass = rep.all_finite && rep.top_octave_growth <= 0.01;
  return rep;
}

std::vector<double> doubling_grid(double s_min, double s_max) {
  std::vector<double> g;
  for (double s = s_min; s <= s_max * (1.0 + 1e-12); s *= 2.0) g.push_back(s);
  return g;
}

}  // namespace carleman

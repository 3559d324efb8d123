#include "carleman/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "carleman/error.hpp"
#include "carleman/parallel.hpp"

namespace carleman {

SourceSpec zero_source() {
  SourceSpec s;
  s.p = [](const Vec2&, double) { return 0.0; };
  s.r = [](const Vec2&, double) { return 0.0; };
  s.f = [](const Vec2&) { return 0.0; };
  return s;
}

double cfl_number(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time) {
  double worst = 0.0;
  for (int k = 0; k < time.levels; ++k) {
    for (std::size_t n = 0; n < domain.size(); ++n) {
      const Vec2 x = domain.node(n);
      const double t = time.at(k);
      const Vec2 a = field.a(x, t);
      double rate = std::abs(a.x) / domain.hx();
      if (domain.dim == 2) rate += std::abs(a.y) / domain.hy();
      worst = std::max(worst, rate / field.a0(x, t));
    }
  }
  return worst * time.step();
}

namespace {

// Characteristic state in the reversed time tau = t - s: position, the
// homogeneous propagator a and the accumulated source contribution b, so
// that u(x, t) = a * u(start) + b.
struct CharState {
  Vec2 x;
  double a = 1.0;
  double b = 0.0;
};

struct CharRhs {
  Vec2 dx;
  double da = 0.0;
  double db = 0.0;
};

CharRhs char_rhs(const SpaceTimeField& field, const SourceSpec& src, const CharState& y, double s) {
  const double a0 = field.a0(y.x, s);
  const Vec2 v = field.a(y.x, s);
  const double q = src.p(y.x, s) / a0;
  const double g = src.r(y.x, s) * src.f(y.x) / a0;
  return {v * (-1.0 / a0), -y.a * q, y.a * g};
}

CharState char_step(const SpaceTimeField& field, const SourceSpec& src, const CharState& y, double s, double h) {
  const auto shifted = [](const CharState& y0, const CharRhs& k, double c) {
    return CharState{y0.x + k.dx * c, y0.a + k.da * c, y0.b + k.db * c};
  };
  const CharRhs k1 = char_rhs(field, src, y, s);
  const CharRhs k2 = char_rhs(field, src, shifted(y, k1, 0.5 * h), s - 0.5 * h);
  const CharRhs k3 = char_rhs(field, src, shifted(y, k2, 0.5 * h), s - 0.5 * h);
  const CharRhs k4 = char_rhs(field, src, shifted(y, k3, h), s - h);
  const double c = h / 6.0;
  return {y.x + (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx) * c, y.a + c * (k1.da + 2 * k2.da + 2 * k3.da + k4.da),
          y.b + c * (k1.db + 2 * k2.db + 2 * k3.db + k4.db)};
}

struct CharEnd {
  CharState state;
  double s = 0.0;
  bool hit_boundary = false;
};

// Integrates from (x, t) backward to s = 0, stopping at the boundary of
// `domain` when it is non-null.
CharEnd trace_characteristic(const SpaceTimeField& field, const SourceSpec& src, const Vec2& x, double t,
                             double step, const SpatialDomain* domain) {
  CharEnd end;
  end.state.x = x;
  end.s = t;
  if (t <= 0.0) return end;
  const int n = std::max(1, static_cast<int>(std::ceil(t / step - 1e-9)));
  const double h = t / n;
  for (int i = 0; i < n; ++i) {
    const double s = t - i * h;
    const CharState next = char_step(field, src, end.state, s, h);
    if (domain && !domain->contains(next.x)) {
      double lo = 0.0;
      double hi = h;
      while (hi - lo > 1e-15 * std::max(1.0, t)) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (domain->contains(char_step(field, src, end.state, s, mid).x)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      if (lo > 0.0) end.state = char_step(field, src, end.state, s, lo);
      end.s = s - lo;
      end.hit_boundary = true;
      return end;
    }
    end.state = next;
    end.s = (i + 1 == n) ? 0.0 : t - (i + 1) * h;
  }
  return end;
}

// A . nu at a boundary point; at corners the most inward of the faces.
double boundary_flux(const SpaceTimeField& field, const SpatialDomain& d, const Vec2& x, double t) {
  const Vec2 a = field.a(x, t);
  const double tol = 1e-9 * std::max(1.0, d.diameter());
  double flux = std::numeric_limits<double>::infinity();
  double nearest = std::numeric_limits<double>::infinity();
  double nearest_flux = 0.0;
  const auto face = [&](double dist, const Vec2& nu) {
    const double f = dot(a, nu);
    if (dist <= tol) flux = std::min(flux, f);
    if (dist < nearest) {
      nearest = dist;
      nearest_flux = f;
    }
  };
  face(std::abs(x.x - d.lo.x), {-1.0, 0.0});
  face(std::abs(x.x - d.hi.x), {1.0, 0.0});
  if (d.dim == 2) {
    face(std::abs(x.y - d.lo.y), {0.0, -1.0});
    face(std::abs(x.y - d.hi.y), {0.0, 1.0});
  }
  return std::isfinite(flux) ? flux : nearest_flux;
}

GridFunction solve_characteristics(const SpaceTimeField& field, const SourceSpec& src, const SpatialDomain& domain,
                                   const TimeAxis& time, const InitialData& u_init, const InflowData& inflow,
                                   double step) {
  GridFunction u(domain, time);
  const std::size_t ns = domain.size();
  const std::size_t total = ns * static_cast<std::size_t>(time.levels);
  std::vector<char> lost(total, 0);
  parallel_for(total, [&](std::size_t idx) {
    const std::size_t n = idx % ns;
    const int k = static_cast<int>(idx / ns);
    const Vec2 x = domain.node(n);
    const double t = time.at(k);
    const CharEnd end = trace_characteristic(field, src, x, t, step, &domain);
    double start = 0.0;
    if (end.hit_boundary) {
      if (boundary_flux(field, domain, end.state.x, end.s) > 1e-12) {
        lost[idx] = 1;
        return;
      }
      start = inflow(end.state.x, end.s);
    } else {
      start = u_init(end.state.x);
    }
    u(n, k) = end.state.a * start + end.state.b;
  });
  if (const auto bad = std::count(lost.begin(), lost.end(), 1); bad > 0) {
    std::ostringstream msg;
    msg << bad << " backward characteristic(s) left through the outflow boundary";
    throw Error(ErrorKind::CharacteristicLost, msg.str());
  }
  return u;
}

GridFunction solve_upwind(const SpaceTimeField& field, const SourceSpec& src, const SpatialDomain& domain,
                          const TimeAxis& time, const InitialData& u_init, const InflowData& inflow) {
  GridFunction u(domain, time);
  const std::size_t ns = domain.size();
  std::vector<double> fvals(ns);
  for (std::size_t n = 0; n < ns; ++n) {
    const Vec2 x = domain.node(n);
    fvals[n] = src.f(x);
    u(n, 0) = u_init(x);
  }
  const double ht = time.step();
  for (int k = 0; k + 1 < time.levels; ++k) {
    const double t = time.at(k);
    const double t_next = time.at(k + 1);
    const auto prev = u.slice(k);
    auto next = u.slice(k + 1);
    parallel_for(ns, [&](std::size_t n) {
      const Vec2 x = domain.node(n);
      const int i = domain.ix(n);
      const int j = domain.iy(n);
      const Vec2 a = field.a(x, t);
      double transport = 0.0;
      bool needs_inflow = false;
      if (a.x > 0) {
        if (i == 0) needs_inflow = true;
        else transport += a.x * (prev[n] - prev[domain.index(i - 1, j)]) / domain.hx();
      } else if (a.x < 0) {
        if (i == domain.nx - 1) needs_inflow = true;
        else transport += a.x * (prev[domain.index(i + 1, j)] - prev[n]) / domain.hx();
      }
      if (domain.dim == 2) {
        if (a.y > 0) {
          if (j == 0) needs_inflow = true;
          else transport += a.y * (prev[n] - prev[domain.index(i, j - 1)]) / domain.hy();
        } else if (a.y < 0) {
          if (j == domain.ny - 1) needs_inflow = true;
          else transport += a.y * (prev[domain.index(i, j + 1)] - prev[n]) / domain.hy();
        }
      }
      if (needs_inflow) {
        next[n] = inflow(x, t_next);
        return;
      }
      const double rhs = src.r(x, t) * fvals[n] - src.p(x, t) * prev[n] - transport;
      next[n] = prev[n] + ht * rhs / field.a0(x, t);
    });
  }
  return u;
}

}  // namespace

double free_transport_value(const SpaceTimeField& field, const SourceSpec& src, const InitialData& u_init,
                            const Vec2& x, double t, double step) {
  const CharEnd end = trace_characteristic(field, src, x, t, step, nullptr);
  return end.state.a * u_init(end.state.x) + end.state.b;
}

InflowData free_transport_inflow(const SpaceTimeField& field, const SourceSpec& src, const InitialData& u_init,
                                 double step) {
  return [field, src, u_init, step](const Vec2& x, double t) {
    return free_transport_value(field, src, u_init, x, t, step);
  };
}

ForwardSolution solve_forward(const SpaceTimeField& field, const SourceSpec& src, const SpatialDomain& domain,
                              const TimeAxis& time, const InitialData& u_init, const InflowData& inflow,
                              const ForwardOptions& options) {
  ForwardSolution sol;
  sol.cfl = cfl_number(field, domain, time);
  if (options.upwind) {
    if (sol.cfl > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "CFL number " << sol.cfl << " exceeds 1 for the upwind path";
      throw Error(ErrorKind::CflViolation, msg.str());
    }
    sol.upwind = solve_upwind(field, src, domain, time, u_init, inflow);
    sol.has_upwind = true;
  }
  if (options.characteristics) {
    const double step = options.characteristic_step > 0 ? options.characteristic_step : time.step();
    sol.characteristics = solve_characteristics(field, src, domain, time, u_init, inflow, step);
    sol.has_characteristics = true;
  }
  if (sol.has_upwind && sol.has_characteristics) {
    const auto a = sol.upwind.values();
    const auto b = sol.characteristics.values();
    for (std::size_t n = 0; n < a.size(); ++n) sol.discrepancy = std::max(sol.discrepancy, std::abs(a[n] - b[n]));
  }
  return sol;
}

GridFunction apply_transport(const SpaceTimeField& field, const ScalarField& p, const GridFunction& u) {
  const SpatialDomain& d = u.domain();
  const std::size_t ns = d.size();
  const GridFunction ut = time_derivative(u);
  const GridFunction ux = space_derivative(u, 0);
  GridFunction uy;
  if (d.dim == 2) uy = space_derivative(u, 1);
  GridFunction out(d, u.time());
  parallel_for(u.size(), [&](std::size_t i) {
    const std::size_t n = i % ns;
    const int k = static_cast<int>(i / ns);
    const Vec2 x = d.node(n);
    const double t = u.time().at(k);
    const Vec2 a = field.a(x, t);
    double v = field.a0(x, t) * ut.values()[i] + a.x * ux.values()[i];
    if (d.dim == 2) v += a.y * uy.values()[i];
    if (p) v += p(x, t) * u.values()[i];
    out.values()[i] = v;
  });
  return out;
}

std::vector<double> trace_time_derivative(std::span<const double> g, std::size_t nb, const TimeAxis& time) {
  std::vector<double> out(g.size());
  const int nt = time.levels;
  const double h = time.step();
  for (std::size_t b = 0; b < nb; ++b) {
    const auto at = [&](int k) { return g[static_cast<std::size_t>(k) * nb + b]; };
    for (int k = 0; k < nt; ++k) {
      double d = 0.0;
      if (k == 0) d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
      else if (k == nt - 1) d = (3.0 * at(nt - 1) - 4.0 * at(nt - 2) + at(nt - 3)) / (2.0 * h);
      else d = (at(k + 1) - at(k - 1)) / (2.0 * h);
      out[static_cast<std::size_t>(k) * nb + b] = d;
    }
  }
  return out;
}

CauchyData extract_trace(const GridFunction& u, const BoundaryMask& sigma, std::span<const char> initial_mask) {
  if (sigma.count() == 0) throw Error(ErrorKind::EmptyMask, "observation mask is empty");
  if (sigma.time.levels != u.time().levels) throw Error(ErrorKind::InvalidArgument, "mask and solution time axes differ");
  CauchyData d;
  d.sigma = sigma;
  d.domain = u.domain();
  const std::size_t nb = sigma.mesh.size();
  d.g.resize(nb * static_cast<std::size_t>(u.time().levels));
  for (int k = 0; k < u.time().levels; ++k)
    for (std::size_t b = 0; b < nb; ++b) d.g[static_cast<std::size_t>(k) * nb + b] = u(sigma.mesh[b].node, k);
  d.dg_dt = trace_time_derivative(d.g, nb, u.time());
  d.initial_mask.assign(initial_mask.begin(), initial_mask.end());
  if (d.initial_mask.empty()) d.initial_mask.assign(u.spatial_size(), 1);
  d.u0.assign(u.spatial_size(), 0.0);
  const auto slice = u.slice(0);
  for (std::size_t n = 0; n < u.spatial_size(); ++n)
    if (d.initial_mask[n]) d.u0[n] = slice[n];
  return d;
}

CauchyData add_noise(const CauchyData& data, double level, std::uint64_t seed) {
  if (level < 0) throw Error(ErrorKind::InvalidArgument, "noise level must be nonnegative");
  CauchyData out = data;
  out.noise_level = level;
  out.noise_seed = seed;
  if (level == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double g_inf = 0.0;
  for (std::size_t i = 0; i < data.g.size(); ++i)
    if (data.sigma.mask[i]) g_inf = std::max(g_inf, std::abs(data.g[i]));
  for (std::size_t i = 0; i < out.g.size(); ++i)
    if (out.sigma.mask[i]) out.g[i] += level * g_inf * unit(rng);
  out.dg_dt = trace_time_derivative(out.g, out.boundary_size(), out.sigma.time);
  double u_inf = 0.0;
  for (std::size_t n = 0; n < data.u0.size(); ++n)
    if (data.initial_mask[n]) u_inf = std::max(u_inf, std::abs(data.u0[n]));
  for (std::size_t n = 0; n < out.u0.size(); ++n)
    if (out.initial_mask[n]) out.u0[n] += level * u_inf * unit(rng);
  return out;
}

CauchyData data_difference(const CauchyData& a, const CauchyData& b) {
  if (a.g.size() != b.g.size() || a.u0.size() != b.u0.size() || a.sigma.mask != b.sigma.mask ||
      a.initial_mask != b.initial_mask)
    throw Error(ErrorKind::InvalidArgument, "Cauchy data sets are not comparable");
  CauchyData d = a;
  for (std::size_t i = 0; i < d.g.size(); ++i) {
    d.g[i] -= b.g[i];
    d.dg_dt[i] -= b.dg_dt[i];
  }
  for (std::size_t n = 0; n < d.u0.size(); ++n) d.u0[n] -= b.u0[n];
  return d;
}

double trace_l2(const CauchyData& data, std::span<const double> w) {
  const std::size_t nb = data.boundary_size();
  const auto wt = data.sigma.time.quadrature_weights();
  double total = 0.0;
  for (int k = 0; k < data.sigma.time.levels; ++k)
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t i = static_cast<std::size_t>(k) * nb + b;
      if (data.sigma.mask[i]) total += wt[static_cast<std::size_t>(k)] * data.sigma.mesh[b].weight * w[i] * w[i];
    }
  return std::sqrt(total);
}

double source_data_norm(const CauchyData& data) {
  return h1_norm(data.domain, data.u0, data.initial_mask) + trace_l2(data, data.g) + trace_l2(data, data.dg_dt);
}

double coefficient_data_norm(const CauchyData& data) {
  const double g = trace_l2(data, data.g);
  const double dg = trace_l2(data, data.dg_dt);
  return h1_norm(data.domain, data.u0, data.initial_mask) + std::sqrt(g * g + dg * dg);
}

}  // namespace carleman

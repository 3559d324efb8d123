#pragma once

#include <cmath>
#include <numbers>

#include "carleman/field.hpp"
#include "carleman/forward.hpp"
#include "carleman/grid.hpp"

namespace testing {

using namespace carleman;

inline SpaceTimeField constant_field(double a0, Vec2 a, double T = 1.0, double rho = 1.0, double M = 3.0) {
  SpaceTimeField f;
  f.a0 = [a0](const Vec2&, double) { return a0; };
  f.a = [a](const Vec2&, double) { return a; };
  f.rho = rho;
  f.M = M;
  f.T = T;
  f.time_independent = true;
  return f;
}

inline SpaceTimeField affine_1d(double T = 1.0) {
  SpaceTimeField f = constant_field(1.0, {1.0, 0.0}, T, 1.0, 3.0);
  f.a = [](const Vec2& x, double) { return Vec2{1.0 + x.x, 0.0}; };
  return f;
}

inline SpaceTimeField rotational_2d() {
  SpaceTimeField f = constant_field(1.0, {0.0, 0.0}, 1.0, 0.0, 3.0);
  f.a = [](const Vec2& x, double) { return Vec2{-x.y, x.x}; };
  return f;
}

inline SourceSpec source(double p, double r, SpatialScalar f, double m0 = 0.0) {
  SourceSpec s;
  s.p = [p](const Vec2&, double) { return p; };
  s.r = [r](const Vec2&, double) { return r; };
  s.f = std::move(f);
  s.m0 = m0;
  return s;
}

inline double sin_pi(const Vec2& x) { return std::sin(std::numbers::pi * x.x); }

inline GridFunction sample(const SpatialDomain& d, const TimeAxis& t, const std::function<double(const Vec2&, double)>& u) {
  GridFunction g(d, t);
  for (int k = 0; k < t.levels; ++k)
    for (std::size_t n = 0; n < d.size(); ++n) g(n, k) = u(d.node(n), t.at(k));
  return g;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Gauss-Legendre nodes and weights on [a, b], n points, by Newton on P_n.
inline void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = 0.5 * (a + b) + 0.5 * (b - a) * z;
    w[static_cast<std::size_t>(i)] = (b - a) / ((1.0 - z * z) * dp * dp);
  }
}

}  // namespace testing

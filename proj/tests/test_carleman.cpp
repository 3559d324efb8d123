#include <doctest.h>

#include <cmath>
#include <numbers>

#include "carleman/carleman.hpp"
#include "carleman/error.hpp"
#include "support.hpp"

using namespace carleman;
using namespace testing;

namespace {

constexpr double kT = 2.5;
constexpr double kBeta = 0.5;

struct Example {
  SpaceTimeField field = constant_field(1.0, {1.0, 0.0}, kT);
  SpatialDomain domain;
  TimeAxis time;
  WeightField weight;
  ScalarField p = [](const Vec2&, double) { return 0.0; };

  Example(int nx, int nt) : domain(SpatialDomain::interval(0, 1, nx)), time{nt, kT} {
    weight = make_weight(compute_phi0(field, domain), field, kBeta, time);
  }
};

GridFunction sine_mode(const Example& ex) {
  return sample(ex.domain, ex.time, [](const Vec2& x, double t) { return (kT - t) * std::sin(std::numbers::pi * x.x); });
}

// Tensor Gauss-Legendre values of the four terms for u = (T - t) sin(pi x),
// phi = x - beta t, P = dt + dx, p = 0. The lateral term vanishes since
// u(1, t) = 0.
CarlemanTerms oracle(double s) {
  std::vector<double> xs, xw, ts, tw;
  gauss_legendre(40, 0.0, 1.0, xs, xw);
  gauss_legendre(60, 0.0, kT, ts, tw);
  const double pi = std::numbers::pi;
  CarlemanTerms c;
  c.s = s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    c.lhs2 += xw[i] * s * std::exp(2 * s * x) * std::pow(kT * std::sin(pi * x), 2);
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const double t = ts[j];
      const double e = std::exp(2 * s * (x - kBeta * t));
      const double u = (kT - t) * std::sin(pi * x);
      const double pu = -std::sin(pi * x) + (kT - t) * pi * std::cos(pi * x);
      c.lhs1 += xw[i] * tw[j] * s * s * e * u * u;
      c.rhs1 += xw[i] * tw[j] * e * pu * pu;
    }
  }
  return c;
}

}  // namespace

TEST_SUITE("carleman") {

TEST_CASE("zero function gives zero terms") {
  const Example ex(51, 101);
  const CarlemanEvaluator ev(ex.field, ex.p, ex.weight, ex.time);
  const CarlemanTerms c = ev.evaluate(GridFunction(ex.domain, ex.time), 3.0).unscaled();
  CHECK(c.lhs1 == 0.0);
  CHECK(c.lhs2 == 0.0);
  CHECK(c.rhs1 == 0.0);
  CHECK(c.rhs2 == 0.0);
  CHECK(std::isnan(c.ratio()));
}

TEST_CASE("quadrature against a Gauss-Legendre oracle") {
  const Example ex(401, 1001);
  const CarlemanTerms c = evaluate_carleman(sine_mode(ex), ex.field, ex.p, ex.weight, 1.0).unscaled();
  const CarlemanTerms o = oracle(1.0);
  CHECK(c.lhs1 == doctest::Approx(o.lhs1).epsilon(1e-4));
  CHECK(c.lhs2 == doctest::Approx(o.lhs2).epsilon(1e-4));
  CHECK(c.rhs1 == doctest::Approx(o.rhs1).epsilon(1e-4));
  CHECK(c.rhs2 >= 0.0);
  CHECK(c.rhs2 < 1e-20);
  for (double v : {c.lhs1, c.lhs2, c.rhs1}) {
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
  }
}

TEST_CASE("regression pin at 401 x 1001, s = 1") {
  const Example ex(401, 1001);
  const CarlemanTerms c = evaluate_carleman(sine_mode(ex), ex.field, ex.p, ex.weight, 1.0).unscaled();
  CHECK(c.lhs1 == doctest::Approx(4.475437939333).epsilon(1e-6));
  CHECK(c.lhs2 == doctest::Approx(9.064476650926).epsilon(1e-6));
  CHECK(c.rhs1 == doctest::Approx(59.04097701587).epsilon(1e-6));
}

TEST_CASE("precondition errors") {
  const Example ex(21, 51);
  GridFunction u = sine_mode(ex);
  u(3, ex.time.levels - 1) = 1.0;
  try {
    evaluate_carleman(u, ex.field, ex.p, ex.weight, 1.0);
    FAIL("expected FinalTimeNotZero");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FinalTimeNotZero);
  }
  WeightField bad = ex.weight;
  bad.beta = 1.0;
  try {
    CarlemanEvaluator(ex.field, ex.p, bad, ex.time);
    FAIL("expected InadmissibleWeight");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InadmissibleWeight);
  }
  WeightField unset = compute_phi0(ex.field, ex.domain);
  CHECK_THROWS_AS(CarlemanEvaluator(ex.field, ex.p, unset, ex.time), Error);
}

TEST_CASE("scaling leaves ratios unchanged") {
  const Example ex(51, 101);
  const CarlemanEvaluator ev(ex.field, ex.p, ex.weight, ex.time);
  const auto family = carleman_test_family(ex.domain, ex.time, 3, 11);
  for (const auto& u : family) {
    GridFunction v = u;
    v *= 3.0;
    for (double s : {1.0, 8.0, 32.0}) {
      const CarlemanTerms a = ev.evaluate(u, s), b = ev.evaluate(v, s);
      CHECK(b.lhs1 == doctest::Approx(9.0 * a.lhs1).epsilon(1e-13));
      CHECK(b.lhs2 == doctest::Approx(9.0 * a.lhs2).epsilon(1e-13));
      CHECK(b.rhs1 == doctest::Approx(9.0 * a.rhs1).epsilon(1e-13));
      CHECK(b.rhs2 == doctest::Approx(9.0 * a.rhs2).epsilon(1e-13));
      CHECK(b.ratio() == doctest::Approx(a.ratio()).epsilon(1e-13));
    }
  }
}

TEST_CASE("test family vanishes at the final time and is seeded") {
  const Example ex(21, 41);
  const auto a = carleman_test_family(ex.domain, ex.time, 20, 5);
  const auto b = carleman_test_family(ex.domain, ex.time, 20, 5);
  REQUIRE(a.size() == 20);
  for (std::size_t m = 0; m < a.size(); ++m) {
    CHECK(max_abs(a[m].slice(ex.time.levels - 1)) <= 1e-12);
    CHECK(std::equal(a[m].values().begin(), a[m].values().end(), b[m].values().begin()));
  }
}

TEST_CASE("weight concentrates on super-level sets as s grows") {
  const Example ex(101, 101);
  const CarlemanEvaluator ev(ex.field, ex.p, ex.weight, ex.time);
  for (double eps : {0.05, 0.2, 0.5}) {
    double prev = 0.0;
    for (double s : doubling_grid(1, 64)) {
      const double c = ev.weight_concentration(eps, s);
      CHECK(c >= prev - 1e-15);
      prev = c;
    }
  }
}

TEST_CASE("sweep on the one-dimensional example") {
  const Example ex(101, 251);
  const CarlemanEvaluator ev(ex.field, ex.p, ex.weight, ex.time);
  const auto grid = doubling_grid(1, 64);
  CHECK(grid == std::vector<double>{1, 2, 4, 8, 16, 32, 64});
  const CarlemanReport r = sweep_s(carleman_test_family(ex.domain, ex.time, 20, 1), ev, grid);
  CHECK(r.all_finite);
  CHECK_FALSE(r.degenerate);
  CHECK(r.pass);
  CHECK(std::isfinite(r.c_est));
  CHECK(r.top_octave_growth <= 0.01);
  for (const auto& row : r.terms)
    for (const auto& t : row) {
      CHECK(t.lhs1 >= 0.0);
      CHECK(t.lhs2 >= 0.0);
      CHECK(t.rhs1 >= 0.0);
      CHECK(t.rhs2 >= 0.0);
    }
}

TEST_CASE("degenerate family") {
  const Example ex(21, 41);
  const CarlemanEvaluator ev(ex.field, ex.p, ex.weight, ex.time);
  const CarlemanReport r = sweep_s({GridFunction(ex.domain, ex.time)}, ev, doubling_grid(1, 8));
  CHECK(r.degenerate);
  CHECK_FALSE(r.pass);
  for (double v : r.max_ratio) CHECK(std::isnan(v));
}

}  // TEST_SUITE

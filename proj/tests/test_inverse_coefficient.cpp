#include <doctest.h>

#include <cmath>

#include "carleman/error.hpp"
#include "carleman/inverse_coefficient.hpp"
#include "support.hpp"

using namespace carleman;
using namespace testing;

namespace {

CoefficientPair unit_pair(const SpatialDomain& d, double rho = 1.0) {
  CoefficientPair p;
  p.a0 = [](const Vec2&) { return 1.0; };
  p.a = [](const Vec2&) { return Vec2{1.0, 0.0}; };
  p.M = 3.0;
  p.rho = rho;
  for (const auto& bp : d.boundary_mesh()) p.gamma.push_back(bp.normal.x > 0 ? 1 : 0);
  return p;
}

ScalarField constant_p(double v) {
  return [v](const Vec2&, double) { return v; };
}

double bump(const Vec2& x) { return std::exp(-std::pow(x.x - 0.6, 2) / (0.15 * 0.15)); }

}  // namespace

TEST_SUITE("inverse_coefficient") {

TEST_CASE("membership clauses") {
  const auto d = SpatialDomain::interval(0, 1, 41);
  const MembershipReport ok = check_membership(unit_pair(d), d);
  CHECK(ok.member);
  for (const auto& c : ok.clauses) CHECK(c.ok);

  const MembershipReport slow = check_membership(unit_pair(d, 2.0), d);
  CHECK_FALSE(slow.member);
  REQUIRE(slow.find("min_speed") != nullptr);
  CHECK_FALSE(slow.find("min_speed")->ok);
  CHECK(slow.find("dissipative")->ok);

  const auto sq = SpatialDomain::rectangle({-1, -1}, {1, 1}, 9, 9);
  CoefficientPair rot;
  rot.a0 = [](const Vec2&) { return 1.0; };
  rot.a = [](const Vec2& x) { return Vec2{-x.y, x.x}; };
  rot.M = 3.0;
  rot.rho = 0.0;
  rot.gamma.assign(sq.boundary_mesh().size(), 0);
  const MembershipReport r = check_membership(rot, sq);
  CHECK_FALSE(r.member);
  CHECK_FALSE(r.find("dissipative")->ok);

  CoefficientPair inflow_gamma = unit_pair(d);
  for (auto& g : inflow_gamma.gamma) g = 1;
  CHECK_FALSE(check_membership(inflow_gamma, d).find("gamma_outflow")->ok);

  CoefficientPair wiggly = unit_pair(d);
  wiggly.a = [](const Vec2& x) { return Vec2{1.0 + 0.5 * std::sin(10 * x.x), 0.0}; };
  const MembershipReport w = check_membership(wiggly, d);
  // |A|_{C^2} picks up 0.5 * 100 from the second derivative
  CHECK_FALSE(w.find("norm_bound")->ok);
  CHECK(w.c2_a > 50.0);
}

TEST_CASE("R matrix rows") {
  const auto d = SpatialDomain::interval(0, 1, 11);
  const TimeAxis t{11, 1.0};
  const GridFunction one = sample(d, t, [](const Vec2&, double) { return 1.0; });
  const GridFunction x = sample(d, t, [](const Vec2& p, double) { return p.x; });
  const RMatrix r = build_r_matrix({one, x});
  REQUIRE(r.rows.size() == 2);
  REQUIRE(r.rows[0].size() == 2);
  CHECK(max_abs(r.rows[0][0].values()) == 0.0);
  CHECK(max_abs(r.rows[0][1].values()) == 0.0);
  CHECK(max_abs(r.rows[1][0].values()) < 1e-12);
  for (double v : r.rows[1][1].values()) CHECK(v == doctest::Approx(-1.0).epsilon(1e-12));
  for (auto bad : {std::vector<GridFunction>{one}, std::vector<GridFunction>{one, x, x}}) {
    try {
      build_r_matrix(bad);
      FAIL("expected EnsembleSizeMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EnsembleSizeMismatch);
    }
  }
}

TEST_CASE("difference equation holds for manufactured perturbations") {
  const auto d = SpatialDomain::interval(0, 1, 101);
  const TimeAxis t{201, 1.0};
  const CoefficientPair pair2 = unit_pair(d);
  const auto p = constant_p(2.0);
  const SolutionEnsemble e2 = make_ensemble(pair2.field(t.T), p, d, t);
  const RMatrix r = build_r_matrix(e2.u);
  for (double delta : {0.0, 0.05}) {
    // supported away from the inflow point, so the data stay compatible at the corner
    const CoefficientPair pair1 = perturb(pair2, bump, [](const Vec2& x) { return Vec2{0.3 * bump(x), 0.0}; }, delta);
    const SolutionEnsemble e1 = solve_ensemble(pair1.field(t.T), p, d, t, e2.initial, e2.inflow);
    for (std::size_t m = 0; m < e1.u.size(); ++m) {
      const double res = v_equation_residual(pair1, pair2, p, e1.u[m], e2.u[m], r.rows[m], t.T);
      if (delta == 0.0) {
        CHECK(max_abs((e1.u[m] - e2.u[m]).values()) == 0.0);
        CHECK(res < 1e-12);
      } else {
        CHECK(res <= 5.0 * (d.h() + t.step()) * delta * 1.3);
        MESSAGE("v-equation residual " << res << " at delta " << delta);
      }
    }
  }
}

TEST_CASE("determinant condition by hand") {
  const auto d = SpatialDomain::interval(0, 1, 11);
  const TimeAxis t{11, 1.0};
  const auto field = constant_field(1.0, {1.0, 0.0});
  const GridFunction one = sample(d, t, [](const Vec2&, double) { return 1.0; });
  const GridFunction x = sample(d, t, [](const Vec2& p, double) { return p.x; });
  const DeterminantReport r = check_determinant_condition(field, {one, x}, constant_p(2.0), 1.0);
  CHECK(r.ok);
  CHECK(r.min_value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_FALSE(check_determinant_condition(field, {one, x}, constant_p(2.0), 2.5).ok);
  const DeterminantReport rep = check_determinant_condition(field, {x, x}, constant_p(2.0), 1e-6);
  CHECK_FALSE(rep.ok);
  CHECK(rep.min_value == 0.0);
  CHECK_FALSE(check_determinant_condition(field, {one, x}, constant_p(0.0), 1e-6).ok);
}

TEST_CASE("manufactured ensemble satisfies the determinant condition") {
  const auto d = SpatialDomain::interval(0, 1, 101);
  const TimeAxis t{201, 1.0};
  const auto field = constant_field(1.0, {1.0, 0.0});
  const SolutionEnsemble e = make_ensemble(field, constant_p(2.0), d, t);
  REQUIRE(e.u.size() == 2);
  const DeterminantReport r = check_determinant_condition(field, e.u, constant_p(2.0), 1.0);
  CHECK(r.ok);
  CHECK(std::abs(r.min_value - 2.0) <= 0.2 * 2.0);
  CHECK(r.comparability_ok);
  CHECK(r.c == doctest::Approx(1.0));
  // the elimination identity |det R| = |p| |det V| / A0 with A0 = 1
  for (std::size_t n = 0; n < d.size(); ++n) CHECK(std::abs(r.det_r[n] - r.values[n]) <= r.tolerance);
  for (double b : ensemble_bounds(e)) CHECK(std::isfinite(b));
}

TEST_CASE("difference norm is symmetric and vanishes on identical pairs") {
  const auto d = SpatialDomain::interval(0, 1, 51);
  const CoefficientPair a = unit_pair(d);
  const CoefficientPair b = perturb(a, bump, [](const Vec2& x) { return Vec2{0.1 * x.x, 0.0}; }, 0.2);
  CHECK(coefficient_difference_norm(a, b, d) == coefficient_difference_norm(b, a, d));
  CHECK(coefficient_difference_norm(a, a, d) == 0.0);
  CHECK(coefficient_difference_norm(a, b, d) > 0.0);
}

TEST_CASE("small coefficient stability experiment") {
  CoefficientExperiment ex;
  ex.domain = SpatialDomain::interval(0, 1, 51);
  ex.time = TimeAxis{126, 2.5};
  ex.pair2 = unit_pair(ex.domain);
  ex.direction_a0 = bump;
  ex.p = constant_p(2.0);
  ex.beta = 0.5;
  ex.eps = 0.1;
  ex.m0 = 1.0;
  ex.deltas = {1e-3, std::pow(10.0, -2.5), 1e-2, std::pow(10.0, -1.5), 1e-1, 0.0};
  const CoefficientStudy st = coefficient_stability_experiment(ex);
  CHECK(st.zero_left == 0.0);
  CHECK(st.zero_d == 0.0);
  CHECK(st.fit.theta_hat > 0.0);
  CHECK(st.fit.theta_hat <= 1.0);
  CHECK(st.fit.residual < 0.25);
  CHECK(st.membership2.member);
  CHECK(st.determinant.ok);
}

TEST_CASE("hypothesis violations in the coefficient experiment") {
  CoefficientExperiment ex;
  ex.domain = SpatialDomain::interval(0, 1, 21);
  ex.time = TimeAxis{51, 2.5};
  ex.pair2 = unit_pair(ex.domain, 2.0);
  ex.direction_a0 = bump;
  ex.p = constant_p(2.0);
  ex.deltas = {1e-2, 0.0};
  try {
    coefficient_stability_experiment(ex);
    FAIL("expected MembershipViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MembershipViolated);
  }
  ex.pair2 = unit_pair(ex.domain);
  ex.p = constant_p(0.0);
  try {
    coefficient_stability_experiment(ex);
    FAIL("expected DeterminantConditionViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DeterminantConditionViolated);
  }
}

}  // TEST_SUITE

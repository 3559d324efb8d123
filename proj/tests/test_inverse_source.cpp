#include <doctest.h>

#include <cmath>
#include <numbers>

#include "carleman/error.hpp"
#include "carleman/inverse_source.hpp"
#include "support.hpp"

using namespace carleman;
using namespace testing;

namespace {

struct Setup {
  SpaceTimeField field = constant_field(1.0, {1.0, 0.0}, 2.5);
  SourceSpec src;
  SpatialDomain domain;
  TimeAxis time;
  WeightField weight;
  BoundaryMask sigma;

  Setup(int nx, int nt, SpatialScalar f = sin_pi)
      : src(source(0.0, 1.0, std::move(f), 1.0)), domain(SpatialDomain::interval(0, 1, nx)), time{nt, 2.5} {
    weight = make_weight(compute_phi0(field, domain), field, 0.5, time);
    sigma = compute_sigma_plus(field, domain, time);
  }

  GridFunction forward() const {
    const InitialData zero = [](const Vec2&) { return 0.0; };
    ForwardOptions o;
    o.upwind = false;
    return solve_forward(field, src, domain, time, zero, free_transport_inflow(field, src, zero, time.step()), o)
        .characteristics;
  }

  ReconstructionProblem problem(const GridFunction& u, double eps_star = 0.0) const {
    ReconstructionProblem pb;
    pb.field = field;
    pb.src = src;
    pb.weight = weight;
    pb.time = time;
    pb.eps_star = eps_star;
    pb.eps = 0.1;
    pb.data = extract_trace(u, sigma, region_mask(weight, eps_star, time).omega);
    return pb;
  }

  std::vector<double> truth() const {
    std::vector<double> f(domain.size());
    for (std::size_t n = 0; n < f.size(); ++n) f[n] = src.f(domain.node(n));
    return f;
  }
};

double error_on(const Setup& s, const std::vector<double>& rec, std::span<const char> mask) {
  const auto f = s.truth();
  std::vector<double> e(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) e[n] = rec[n] - f[n];
  return l2_norm(s.domain, e, mask);
}

}  // namespace

TEST_SUITE("inverse_source") {

TEST_CASE("direct reconstruction converges at second order") {
  std::vector<double> errs;
  for (int nx : {51, 101, 201}) {
    const Setup s(nx, 2 * (nx - 1) + 1);
    const auto rec = reconstruct_direct(s.field, s.src, s.forward());
    errs.push_back(error_on(s, rec, {}));
    CHECK(errs.back() <= 5.0 * s.domain.h() * s.domain.h());
  }
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i - 1] / errs[i] >= 3.5);
}

TEST_CASE("direct reconstruction of zero data") {
  const Setup s(21, 41);
  const auto rec = reconstruct_direct(s.field, s.src, GridFunction(s.domain, s.time));
  CHECK(max_abs(rec) == 0.0);
}

TEST_CASE("source bound is enforced") {
  Setup s(21, 41);
  s.src.r = [](const Vec2& x, double) { return x.x; };
  s.src.m0 = 0.1;
  try {
    reconstruct_direct(s.field, s.src, GridFunction(s.domain, s.time));
    FAIL("expected ViolatesR0");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ViolatesR0);
  }
}

TEST_CASE("quasi-reversibility recovers the source locally") {
  const Setup s(101, 251);
  const auto pb = s.problem(s.forward());
  const ReconstructionResult r = reconstruct_qr(pb);
  CHECK(r.converged);
  CHECK(r.relative_residual < 1e-8);
  const RegionMask local = region_mask(s.weight, 3 * pb.eps, s.time);
  CHECK(error_on(s, r.f, local.omega) <= 10.0 * s.domain.h());
  for (double j : {r.j_pde, r.j_boundary, r.j_initial, r.j_regularization}) CHECK(j >= 0.0);

  // doubling s: logged only
  ReconstructionProblem p2 = pb;
  p2.s = 2 * pb.s;
  const ReconstructionResult r2 = reconstruct_qr(p2);
  MESSAGE("QR error at s = " << pb.s << ": " << error_on(s, r.f, local.omega) << ", at s = " << p2.s << ": "
                             << error_on(s, r2.f, local.omega));
}

TEST_CASE("quasi-reversibility of zero data is zero") {
  Setup s(51, 126, [](const Vec2&) { return 0.0; });
  const ReconstructionResult r = reconstruct_qr(s.problem(GridFunction(s.domain, s.time)));
  CHECK(max_abs(r.f) <= 1e-10);
  CHECK(max_abs(r.u.values()) <= 1e-10);
}

TEST_CASE("local norm differs from the global norm") {
  // With eps* = 0.2 no unknown for f lives on x <= 0.2, so only the local
  // error is controlled.
  const Setup s(101, 251);
  auto pb = s.problem(s.forward(), 0.2);
  pb.eps = 0.25;
  const ReconstructionResult r = reconstruct_qr(pb);
  const RegionMask local = region_mask(s.weight, 3 * pb.eps, s.time);
  const double local_err = error_on(s, r.f, local.omega);
  const double global_err = error_on(s, r.f, {});
  CHECK(local_err <= 10.0 * s.domain.h());
  CHECK(global_err > 10.0 * s.domain.h());
}

TEST_CASE("geometric condition is checked before solving") {
  Setup s(51, 51);
  s.time = TimeAxis{51, 1.0};
  s.field.T = 1.0;
  s.weight = make_weight(compute_phi0(s.field, s.domain), s.field, 0.5, s.time);
  s.sigma = compute_sigma_plus(s.field, s.domain, s.time);
  try {
    reconstruct_qr(s.problem(GridFunction(s.domain, s.time)));
    FAIL("expected GeometricConditionViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GeometricConditionViolated);
  }
}

TEST_CASE("balancing the Carleman parameter") {
  const BalancedS a = balance_s(1.0, 1.0, 1.0, 0.1);
  CHECK(a.s == 0.0);
  CHECK(a.ratio_branch);
  CHECK(balance_s(2.0, 1.0, 1.0, 0.1).ratio_branch);
  const BalancedS b = balance_s(1.0, std::exp(1.0), 0.9, 0.1);
  CHECK(b.s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(b.ratio_branch);
  CHECK(balance_s(1.0, std::exp(2.0), 1.0, 1.0).s == doctest::Approx(1.0).epsilon(1e-14));
  for (auto [d, f] : {std::pair{0.0, 1.0}, std::pair{1.0, 0.0}, std::pair{-1.0, 1.0}}) {
    try {
      balance_s(d, f, 1.0, 0.1);
      FAIL("expected NonpositiveData");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NonpositiveData);
    }
  }
}

TEST_CASE("Hoelder fit on synthetic samples") {
  auto make = [](double theta, double c) {
    StabilityFit fit;
    for (int i = 0; i < 8; ++i) {
      StabilitySample s;
      s.noise = std::pow(10.0, -4 + 0.4 * i);
      s.d = s.noise;
      s.f = 1.0;
      s.err = c * std::pow(s.d, theta);
      fit.samples.push_back(s);
    }
    StabilitySample zero;
    zero.f = 1.0;
    zero.d = 1e-14;
    zero.err = 1e-14;
    fit.samples.push_back(zero);
    return fit;
  };
  StabilityFit half = make(0.5, 2.0);
  fit_holder(half);
  CHECK(half.theta_hat == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(half.residual < 1e-10);
  CHECK(half.used == 8);
  CHECK(half.floor == 1e-14);
  CHECK(half.monotone_ok);
  CHECK(half.pointwise_ok);
  CHECK_FALSE(half.samples.back().in_fit);

  StabilityFit steep = make(1.5, 1.0);
  fit_holder(steep);
  CHECK(steep.raw_slope == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(steep.theta_hat == 1.0);

  StabilityFit few = make(0.5, 1.0);
  few.samples.resize(3);
  try {
    fit_holder(few);
    FAIL("expected DegenerateSamples");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSamples);
  }
}

TEST_CASE("perturbation shapes have unit norm") {
  const auto d = SpatialDomain::interval(0, 1, 101);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = perturbation_shape(d, seed);
    CHECK(l2_norm(d, p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p == perturbation_shape(d, seed));
  }
}

TEST_CASE("mode A fit is invariant under scaling of f") {
  auto run = [](double alpha) {
    const Setup s(41, 101, [alpha](const Vec2& x) { return alpha * sin_pi(x); });
    SourceExperiment ex;
    ex.field = s.field;
    ex.src = s.src;
    ex.domain = s.domain;
    ex.time = s.time;
    ex.weight = s.weight;
    ex.sigma = s.sigma;
    ex.eps = 0.1;
    ex.noise_levels = {1e-4, 1e-3, 1e-2, 1e-1, 0.0};
    ex.seeds = {1, 2};
    return source_stability_mode_a(ex);
  };
  const StabilityFit a = run(1.0), b = run(3.0);
  CHECK(a.theta_hat > 0.0);
  CHECK(a.theta_hat <= 1.0);
  CHECK(b.theta_hat == doctest::Approx(a.theta_hat).epsilon(1e-6));
  CHECK(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (a.samples[i].noise == 0.0) continue;
    CHECK(b.samples[i].err == doctest::Approx(3.0 * a.samples[i].err).epsilon(1e-9));
    CHECK(b.samples[i].d == doctest::Approx(3.0 * a.samples[i].d).epsilon(1e-9));
    CHECK(b.samples[i].f == doctest::Approx(3.0 * a.samples[i].f).epsilon(1e-9));
  }
}

TEST_CASE("mode B error shrinks with the noise") {
  const Setup s(51, 126);
  SourceExperiment ex;
  ex.field = s.field;
  ex.src = s.src;
  ex.domain = s.domain;
  ex.time = s.time;
  ex.weight = s.weight;
  ex.sigma = s.sigma;
  ex.eps = 0.1;
  // differencing the noisy trace amplifies it by about 1/h_t, which puts
  // levels above 1e-3 outside the D <= 0.1 F window
  ex.noise_levels = {1e-3, 1e-4, 1e-5, 1e-6, 0.0};
  ex.seeds = {1};
  const StabilityFit fit = source_stability_mode_b(ex);
  std::vector<double> err;
  for (const auto& smp : fit.samples)
    if (smp.noise > 0) err.push_back(smp.err);
  REQUIRE(err.size() == 4);
  MESSAGE("mode B errors: " << err[0] << " " << err[1] << " " << err[2] << " " << err[3]);
  // decreasing noise: each error at most 10% above the previous one
  for (std::size_t i = 1; i < err.size(); ++i) CHECK(err[i] <= 1.1 * err[i - 1]);
  CHECK(fit.monotone_ok);
}

}  // TEST_SUITE

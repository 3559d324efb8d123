#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "carleman/field.hpp"
#include "carleman/grid.hpp"

namespace carleman {

// ---------------------------------------------------------------------------
// Integral curves of A(., 0)

enum class CurveExit { Boundary, LengthBudget, ClosedOrbit };
std::string_view to_string(CurveExit e);

struct CurveSample {
  double sigma = 0.0;
  Vec2 point;
};

struct IntegralCurve {
  Vec2 base;
  std::vector<CurveSample> samples;  ///< ascending in sigma, contains sigma = 0
  double sigma_minus = 0.0;
  double sigma_plus = 0.0;
  double length_minus = 0.0;  ///< arclength of the backward branch
  double length_plus = 0.0;
  CurveExit exit_backward = CurveExit::Boundary;
  CurveExit exit_forward = CurveExit::Boundary;
};

struct TraceOptions {
  double ode_step = 1e-3;
  double length_budget = 0.0;  ///< 0 selects 10 * diam(Omega)
};

/// Classical RK4 in sigma, forward and backward from x. A crossing of the
/// boundary is refined by bisection on the last step. A return to within
/// ode_step/2 of x with tangent cosine above 0.99 (or a stagnation point)
/// is classified as a closed orbit.
IntegralCurve trace_integral_curve(const SpaceTimeField& field, const SpatialDomain& domain, const Vec2& x,
                                   const TraceOptions& options = {});

/// One branch of a curve without sample storage.
struct BranchEnd {
  double sigma = 0.0;  ///< signed parameter of the end point
  double length = 0.0;
  Vec2 end;
  CurveExit exit = CurveExit::Boundary;
};
BranchEnd trace_branch(const SpaceTimeField& field, const SpatialDomain& domain, const Vec2& x, int direction,
                       const TraceOptions& options, std::vector<CurveSample>* samples = nullptr);

struct DissipativenessReport {
  bool dissipative = false;
  std::vector<std::size_t> failures;  ///< grid nodes whose curve does not exit
  std::vector<CurveExit> exit_backward;
  std::vector<CurveExit> exit_forward;
  std::vector<double> sigma_minus;  ///< NaN where the backward branch does not exit
  std::vector<double> sigma_plus;
  std::vector<double> backward_length;
  /// Max |second difference| / h^2 of sigma_minus over interior neighbours.
  /// A kink indicator, not a regularity certificate.
  double smoothness_proxy = 0.0;
};

DissipativenessReport check_dissipative(const SpaceTimeField& field, const SpatialDomain& domain,
                                        const TraceOptions& options = {});

struct SpdWitness {
  Vec2 x;
  double t = 0.0;
  Vec2 xi;
};

struct SpdReport {
  bool ok = false;
  double constant = 0.0;  ///< max |dt A . xi| / |A . xi| over the probes
  std::optional<SpdWitness> witness;
};

/// Probes |dt A . xi| <= C |A . xi| on the grid of Q-bar with the axis
/// directions plus (probe_count - dim) seeded random unit vectors.
SpdReport check_spd_condition(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time,
                              int probe_count, std::uint64_t seed = 12345);

// ---------------------------------------------------------------------------
// Weight phi(x,t) = phi0(x) - beta t

struct WeightField {
  SpatialDomain domain;
  std::vector<double> phi0;
  std::vector<double> sigma_minus;
  double beta = 0.0;
  bool has_beta = false;
  double beta_bound = 0.0;  ///< rho / sup A0, set by make_weight

  double phi0_at(const Vec2& x) const { return domain.interpolate(phi0, x); }
  double phi(const Vec2& x, double t) const { return phi0_at(x) - beta * t; }
  double phi_node(std::size_t n, double t) const { return phi0[n] - beta * t; }
  double max_phi0() const;
};

/// Backward arclength of every grid node's integral curve.
WeightField compute_phi0(const SpaceTimeField& field, const SpatialDomain& domain, const TraceOptions& options = {});

/// Installs beta after checking 0 < beta < rho / sup A0 on the grid of Q-bar.
WeightField make_weight(WeightField phi0, const SpaceTimeField& field, double beta, const TimeAxis& time);

struct RegionMask {
  double level = 0.0;
  std::vector<char> omega;  ///< phi0 > level, spatial grid
  std::vector<char> q;      ///< phi > level, space-time grid (time-major)
};

RegionMask region_mask(const WeightField& weight, double level, const TimeAxis& time);

// ---------------------------------------------------------------------------
// Boundary pieces of the lateral surface

struct BoundaryMask {
  std::vector<BoundaryPoint> mesh;
  TimeAxis time;
  std::vector<char> mask;  ///< index k * mesh.size() + b

  bool at(std::size_t b, int k) const { return mask[static_cast<std::size_t>(k) * mesh.size() + b] != 0; }
  std::size_t count() const;
};

/// Sigma_+ = {A . nu > 0} on the boundary mesh at every time level.
BoundaryMask compute_sigma_plus(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time);
BoundaryMask complement(const BoundaryMask& m);

enum class BoundaryPart { LateralOutsideSigma, TopLid };

struct GeometricViolation {
  Vec2 x;
  double t = 0.0;
  double phi = 0.0;
  BoundaryPart part = BoundaryPart::TopLid;
};

struct GeometricConditionReport {
  bool ok = false;
  bool nonempty = false;
  std::vector<GeometricViolation> violations;
};

/// Checks that the part of dQ where phi > eps_star is nonempty and lies in
/// the closure of Sigma united with Omega x {0}. Lateral points are tested
/// against the mask; the bottom slice is always admissible; interior nodes
/// of the top lid never are.
GeometricConditionReport check_geometric_condition(const WeightField& weight, double eps_star,
                                                   const BoundaryMask& sigma);

// ---------------------------------------------------------------------------
// Cutoff chi = S((phi - eps)/eps) with the quintic smoothstep

double smoothstep5(double r);
double smoothstep5_derivative(double r);

class CutoffField {
 public:
  CutoffField(WeightField weight, double eps);

  double level() const { return eps_; }
  double value(const Vec2& x, double t) const;
  double dt(const Vec2& x, double t) const;
  Vec2 grad(const Vec2& x, double t) const;
  /// P chi = A0 dt chi + A . grad chi.
  double apply_operator(const SpaceTimeField& field, const Vec2& x, double t) const;
  const WeightField& weight() const { return weight_; }

 private:
  double ramp(const Vec2& x, double t) const { return (weight_.phi(x, t) - eps_) / eps_; }

  WeightField weight_;
  double eps_;
  std::vector<double> grad_x_;
  std::vector<double> grad_y_;
};

CutoffField build_cutoff(const WeightField& weight, double eps);

}  // namespace carleman

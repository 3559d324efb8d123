#pragma once

#include <functional>
#include <optional>

#include "carleman/grid.hpp"
#include "carleman/vec.hpp"

namespace carleman {

using ScalarField = std::function<double(const Vec2&, double)>;
using VectorField = std::function<Vec2(const Vec2&, double)>;
using SpatialScalar = std::function<double(const Vec2&)>;

/// The coefficients of P u = A0 du/dt + A . grad u, with declared bounds.
/// Evaluators must be defined on all of R^d x R: the forward solver follows
/// characteristics outside the domain when building smooth inflow data.
struct SpaceTimeField {
  ScalarField a0;
  VectorField a;
  std::optional<VectorField> dt_a;  ///< analytic time derivative of A, if known
  double rho = 1.0;                 ///< declared lower bound of |A| and A0
  double M = 1.0;                   ///< declared norm bound
  double T = 1.0;
  bool time_independent = false;

  /// Exactly zero for time-independent fields; otherwise the analytic
  /// derivative or a central difference with step 1e-5.
  Vec2 dt_a_at(const Vec2& x, double t) const;
  /// A(x, 0), the vector field whose integral curves define the weight.
  Vec2 initial(const Vec2& x) const { return a(x, 0.0); }
};

/// Finite-difference step used when no analytic derivative is supplied.
inline constexpr double kFieldDerivativeStep = 1e-5;

struct FieldBoundsReport {
  double min_a0 = 0.0;
  double min_speed = 0.0;
  double sup_a0 = 0.0;
  bool a0_ok = false;
  bool speed_ok = false;
  bool ok() const { return a0_ok && speed_ok; }
};

/// Checks min A0 >= rho and min |A| >= rho (to 1e-10) over the grid of Q-bar.
FieldBoundsReport check_field_bounds(const SpaceTimeField& field, const SpatialDomain& domain,
                                     const TimeAxis& time);

/// sup of A0 over the spatial grid at the given time levels.
double sup_a0(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time);

struct ExponentialRepresentationReport {
  double max_relative_deviation = 0.0;
  bool ok = false;
};

/// Validates A(x,t) = A(x,0) exp(int_0^t phi(x,s) ds) where
/// phi = (dt A . A) / |A|^2, integrating phi with the trapezoid rule on the
/// given time levels. Fields that rotate in time fail this check.
ExponentialRepresentationReport check_exponential_representation(const SpaceTimeField& field,
                                                                 const SpatialDomain& domain,
                                                                 const TimeAxis& time,
                                                                 double tolerance = 1e-6);

}  // namespace carleman

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "carleman/field.hpp"
#include "carleman/geometry.hpp"
#include "carleman/grid.hpp"

namespace carleman {

/// Lower-order term, source profile and spatial source of
/// P u + p u = R f.
struct SourceSpec {
  ScalarField p;
  ScalarField r;
  SpatialScalar f;
  double m0 = 0.0;  ///< declared lower bound of |R(., 0)|
};

/// SourceSpec with p = R = f = 0.
SourceSpec zero_source();

using InitialData = SpatialScalar;
using InflowData = ScalarField;

struct ForwardOptions {
  bool characteristics = true;
  bool upwind = true;
  double characteristic_step = 0.0;  ///< 0 selects the grid time step
};

struct ForwardSolution {
  GridFunction characteristics;
  GridFunction upwind;
  bool has_characteristics = false;
  bool has_upwind = false;
  double cfl = 0.0;
  double discrepancy = 0.0;  ///< max |characteristics - upwind| when both are computed

  /// The characteristics path when available, otherwise the upwind path.
  const GridFunction& best() const { return has_characteristics ? characteristics : upwind; }
};

/// h_t * max (|A_x|/h_x + |A_y|/h_y) / A0 over the grid of Q-bar.
double cfl_number(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time);

/// Value at (x, t) of the solution obtained by following the characteristic
/// dX/ds = A/A0 backward to s = 0 without stopping at the boundary, and
/// integrating du/ds = (R f - p u)/A0 along it. Feeding this as inflow data
/// produces the solution of the problem posed on all of R^d, which is smooth
/// whenever the evaluators are.
double free_transport_value(const SpaceTimeField& field, const SourceSpec& src, const InitialData& u_init,
                            const Vec2& x, double t, double step);
InflowData free_transport_inflow(const SpaceTimeField& field, const SourceSpec& src, const InitialData& u_init,
                                 double step);

/// Forward Cauchy problem with initial data on Omega and inflow data on
/// Sigma_-. The characteristics path integrates, for every node, the
/// characteristic backward to t = 0 or to the inflow boundary with RK4; the
/// upwind path is first-order explicit time stepping.
ForwardSolution solve_forward(const SpaceTimeField& field, const SourceSpec& src, const SpatialDomain& domain,
                              const TimeAxis& time, const InitialData& u_init, const InflowData& inflow,
                              const ForwardOptions& options = {});

/// P u + p u = A0 dt u + A . grad u + p u with the GridFunction difference
/// operators; p may be empty.
GridFunction apply_transport(const SpaceTimeField& field, const ScalarField& p, const GridFunction& u);

/// Observations: lateral trace and its time derivative on a boundary mask,
/// plus the initial slice on a spatial mask.
struct CauchyData {
  BoundaryMask sigma;
  std::vector<double> g;      ///< index k * mesh.size() + b
  std::vector<double> dg_dt;  ///< same layout
  SpatialDomain domain;
  std::vector<char> initial_mask;
  std::vector<double> u0;  ///< zero outside initial_mask
  double noise_level = 0.0;
  std::uint64_t noise_seed = 0;

  std::size_t boundary_size() const { return sigma.mesh.size(); }
};

CauchyData extract_trace(const GridFunction& u, const BoundaryMask& sigma, std::span<const char> initial_mask);

/// Adds i.i.d. uniform noise of amplitude level * ||g||_inf to g on the mask
/// (dg_dt is recomputed from the noisy g) and level * ||u0||_inf to u0.
CauchyData add_noise(const CauchyData& data, double level, std::uint64_t seed);

/// Second-order differences in t of a trace, same layout as CauchyData::g.
std::vector<double> trace_time_derivative(std::span<const double> g, std::size_t boundary_size,
                                          const TimeAxis& time);

/// Field-wise difference a - b (masks must agree).
CauchyData data_difference(const CauchyData& a, const CauchyData& b);

/// ||w||_{L^2(Sigma)} for a trace-shaped array restricted to the mask.
double trace_l2(const CauchyData& data, std::span<const double> w);
/// ||u0||_{H^1(mask)} + ||g||_{L^2(Sigma)} + ||dg_dt||_{L^2(Sigma)}.
double source_data_norm(const CauchyData& data);
/// ||u0||_{H^1(mask)} + ||g||_{H^1(0,T; L^2(Sigma))}.
double coefficient_data_norm(const CauchyData& data);

}  // namespace carleman

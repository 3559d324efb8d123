#pragma once

#include <functional>
#include <string>
#include <vector>

#include "carleman/field.hpp"
#include "carleman/forward.hpp"
#include "carleman/geometry.hpp"
#include "carleman/inverse_source.hpp"

namespace carleman {

using SpatialVector = std::function<Vec2(const Vec2&)>;

/// Time-independent coefficients (A0, A) with declared bounds and the
/// observed boundary piece Gamma (one flag per boundary mesh point).
struct CoefficientPair {
  SpatialScalar a0;
  SpatialVector a;
  double M = 3.0;
  double rho = 1.0;
  std::vector<char> gamma;

  SpaceTimeField field(double T) const;
};

/// pair + delta * (d0, d), same bounds and Gamma.
CoefficientPair perturb(const CoefficientPair& pair, const SpatialScalar& d0, const SpatialVector& d, double delta);

struct MembershipClause {
  std::string name;
  bool ok = false;
  double value = 0.0;
  double bound = 0.0;
};

struct MembershipReport {
  std::vector<MembershipClause> clauses;
  bool member = false;
  double c1_a0 = 0.0;  ///< grid estimate of |A0|_{C^1}
  double c2_a = 0.0;   ///< grid estimate of |A|_{C^2}
  const MembershipClause* find(const std::string& name) const;
};

/// Clauses: norm_bound (|A0|_{C^1} + |A|_{C^2} <= M + 1e-8, derivatives by
/// central differences of the evaluators), min_a0 and min_speed (>= rho),
/// dissipative, gamma_outflow (A . nu > 0 on Gamma).
MembershipReport check_membership(const CoefficientPair& pair, const SpatialDomain& domain,
                                  const TraceOptions& trace = {});

/// d+1 forward solutions of P u + p u = 0 whose initial slices are
/// 1, x, (y), with inflow data taken from the free-space solution of the
/// generating field.
struct SolutionEnsemble {
  std::vector<GridFunction> u;
  std::vector<InitialData> initial;
  std::vector<InflowData> inflow;
};

std::vector<InitialData> coordinate_slices(const SpatialDomain& domain);
SolutionEnsemble make_ensemble(const SpaceTimeField& field, const ScalarField& p, const SpatialDomain& domain,
                               const TimeAxis& time);
/// Solves with the given initial and inflow data (shared between pairs).
SolutionEnsemble solve_ensemble(const SpaceTimeField& field, const ScalarField& p, const SpatialDomain& domain,
                                const TimeAxis& time, const std::vector<InitialData>& initial,
                                const std::vector<InflowData>& inflow);

/// Grid sup of |u| + |dt u| + |grad u| + |grad dt u| + |dt^2 u| per member.
std::vector<double> ensemble_bounds(const SolutionEnsemble& ens);

/// rows[m] = (-dt u_m, -d_x u_m[, -d_y u_m]). Throws EnsembleSizeMismatch
/// unless the ensemble has d+1 members.
struct RMatrix {
  int dim = 1;
  std::vector<std::vector<GridFunction>> rows;
};
RMatrix build_r_matrix(const std::vector<GridFunction>& ensemble);

/// max |P1 v + p v - R_m F| over the grid for v = u1 - u2, with
/// F = (A0_1 - A0_2, A_1 - A_2).
double v_equation_residual(const CoefficientPair& pair1, const CoefficientPair& pair2, const ScalarField& p,
                           const GridFunction& u1, const GridFunction& u2, const std::vector<GridFunction>& r_row,
                           double T);

struct DeterminantReport {
  bool ok = false;
  double min_value = 0.0;     ///< min |p(x,0)| |det(values; gradients)|
  double min_det_r = 0.0;     ///< min |det R(x,0)|
  double c = 0.0;             ///< comparability factor 1 / sup A0
  double tolerance = 0.0;
  bool comparability_ok = false;  ///< |det R| >= c |p| |det V| - tolerance everywhere
  std::vector<double> values;     ///< |p| |det V| per spatial node
  std::vector<double> det_r;      ///< |det R(x,0)| per spatial node
};

/// Determinant of the (d+1) x (d+1) matrix with columns (u_m, grad u_m) at
/// t = 0 times |p(x, 0)|, and |det R(x, 0)| with its comparability check.
DeterminantReport check_determinant_condition(const SpaceTimeField& field, const std::vector<GridFunction>& ensemble,
                                              const ScalarField& p, double m0);

/// sum_mu |A1^mu - A2^mu|_{L^2(mask)}.
double coefficient_difference_norm(const CoefficientPair& a, const CoefficientPair& b, const SpatialDomain& domain,
                                   std::span<const char> mask = {});

struct CoefficientExperiment {
  CoefficientPair pair2;
  SpatialScalar direction_a0;
  SpatialVector direction_a;
  ScalarField p;
  SpatialDomain domain;
  TimeAxis time;
  double beta = 0.5;
  double eps_star = 0.0;
  double eps = 0.1;
  double m0 = 1.0;
  std::vector<double> deltas;  ///< requested sizes; 0 gives the floor sample
  TraceOptions trace;
  double carleman_c = 1.0;
};

struct CoefficientStudy {
  StabilityFit fit;  ///< noise holds the projected delta; d, f, err hold D, F, left
  std::vector<double> requested;
  MembershipReport membership2;
  DeterminantReport determinant;
  std::vector<double> ensemble_bounds;
  double zero_left = 0.0;  ///< left side at delta = 0
  double zero_d = 0.0;     ///< data size at delta = 0
};

/// Throws MembershipViolated, DeterminantConditionViolated or
/// GeometricConditionViolated when a hypothesis fails.
CoefficientStudy coefficient_stability_experiment(const CoefficientExperiment& ex);

}  // namespace carleman

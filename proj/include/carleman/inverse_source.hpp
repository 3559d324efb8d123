#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "carleman/field.hpp"
#include "carleman/forward.hpp"
#include "carleman/geometry.hpp"
#include "carleman/grid.hpp"

namespace carleman {

/// f(x) = [A0 dt u + A . grad u + p u](x, 0) / R(x, 0), with dt u from
/// one-sided second-order differences. Throws ViolatesR0 when
/// min |R(., 0)| < src.m0 on the grid.
std::vector<double> reconstruct_direct(const SpaceTimeField& field, const SourceSpec& src, const GridFunction& u);

/// Checks the declared m0 against the grid: ViolatesR0 if min |R(., 0)| < m0.
double check_source_bound(const SourceSpec& src, const SpatialDomain& domain);

struct ReconstructionProblem {
  SpaceTimeField field;
  SourceSpec src;  ///< p and R are used; f is ignored
  WeightField weight;
  TimeAxis time;
  double eps_star = 0.0;
  double eps = 0.1;
  CauchyData data;
  double alpha_b = 1.0;
  double alpha_0 = 1.0;
  double alpha_r_factor = 1e-8;  ///< alpha_r = factor * mean diagonal of the PDE block
  double s = 8.0;
  double tolerance = 1e-8;
  int max_iterations = 5000;
};

struct ReconstructionResult {
  GridFunction u;
  std::vector<double> f;
  std::vector<char> u_active;  ///< space-time nodes carrying unknowns
  std::vector<char> f_active;  ///< spatial nodes carrying unknowns
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  double alpha_r = 0.0;
  // Decomposition of J at the solution, in the shifted weight scale.
  double j_pde = 0.0;
  double j_boundary = 0.0;
  double j_initial = 0.0;
  double j_regularization = 0.0;
};

/// Carleman-weighted quasi-reversibility: minimizes
///   int_Q e^{2 s phi} |P u + p u - R f|^2
///   + alpha_b sum_{k=0,1} int_Sigma e^{2 s phi} |dt^k (u - g)|^2
///   + alpha_0 int_{Omega_eps*} e^{2 s phi0} (|u(.,0) - u0|^2 + |grad (u(.,0) - u0)|^2)
///   + alpha_r (|f|^2 + |grad u|^2 + |u|^2)
/// over nodal u on Q_eps* and f on Omega_eps*. The PDE residual is sampled at
/// cell centres with the box scheme. Solves the normal equations by
/// preconditioned conjugate gradients.
/// Throws GeometricConditionViolated before solving; NoConvergence is not
/// thrown, the result carries converged = false instead.
ReconstructionResult reconstruct_qr(const ReconstructionProblem& problem);

/// Returns (1/(C + eps)) log(F/D), or 0 with `ratio_branch` set when D >= F.
struct BalancedS {
  double s = 0.0;
  bool ratio_branch = false;  ///< the D >= F case of the proof
};
BalancedS balance_s(double d, double f, double c, double eps);

// ---------------------------------------------------------------------------
// Hoelder fits

struct StabilitySample {
  double noise = 0.0;
  std::uint64_t seed = 0;
  double d = 0.0;    ///< data size
  double f = 0.0;    ///< a-priori bound
  double err = 0.0;  ///< left side
  double s_used = 0.0;
  bool in_fit = false;
};

struct StabilityFit {
  std::vector<StabilitySample> samples;
  double theta_hat = 0.0;
  double raw_slope = 0.0;
  double intercept = 0.0;  ///< log10 intercept for theta_hat
  double residual = 0.0;   ///< RMS residual in log10 units
  double c_fit = 0.0;
  double floor = 0.0;      ///< largest D among noiseless samples
  int used = 0;
  bool pointwise_ok = false;  ///< err <= C_fit (D + F^{1-theta} D^theta) on every sample
  bool monotone_ok = false;   ///< smallest-noise error below largest-noise error
};

/// Log-log least squares of err against D on samples with D in
/// [1e-10 F, 0.1 F] and above 10x the noiseless floor. The slope is
/// constrained to (0, 1]; a larger slope is clipped to 1 and the intercept
/// refit. Throws DegenerateSamples with fewer than 4 usable samples.
void fit_holder(StabilityFit& fit);

struct SourceExperiment {
  SpaceTimeField field;
  SourceSpec src;  ///< src.f is the reference source
  SpatialDomain domain;
  TimeAxis time;
  WeightField weight;  ///< beta installed
  BoundaryMask sigma;
  double eps_star = 0.0;
  double eps = 0.1;
  std::vector<double> noise_levels;
  std::vector<std::uint64_t> seeds;
  double carleman_c = 1.0;  ///< used by balance_s for the reported s
  double qr_s = 8.0;        ///< mode B only
};

/// Mode A: pairs (f, f + delta f) with delta f = level |f| psi_seed, psi_seed a
/// seeded smooth shape of unit L^2 norm. D is the size of the Cauchy data of
/// the difference, F = max over the pair of |f_i| + |u_i|_{H^1(0,T;L^2)} and
/// the left side is |delta f|_{L^2(Omega_eps)}. Level 0 samples give the floor.
StabilityFit source_stability_mode_a(const SourceExperiment& ex);

/// Mode B: quasi-reversibility on noisy data; err = |f - f_rec|_{L^2(Omega_3eps)}.
StabilityFit source_stability_mode_b(const SourceExperiment& ex);

/// Smooth seeded perturbation shape with unit L^2(Omega) norm.
std::vector<double> perturbation_shape(const SpatialDomain& domain, std::uint64_t seed);

}  // namespace carleman

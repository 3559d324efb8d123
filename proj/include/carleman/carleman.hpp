#pragma once

#include <cstdint>
#include <vector>

#include "carleman/field.hpp"
#include "carleman/geometry.hpp"
#include "carleman/grid.hpp"

namespace carleman {

/// The four integrals of the weighted inequality at one value of s.
/// Stored values are multiplied by exp(-2 s shift) where shift = max phi on
/// the grid; `unscaled` undoes the factor.
struct CarlemanTerms {
  double s = 0.0;
  double shift = 0.0;
  double lhs1 = 0.0;  ///< s^2 int_Q e^{2 s phi} |u|^2
  double lhs2 = 0.0;  ///< s int_Omega e^{2 s phi(x,0)} |u(x,0)|^2
  double rhs1 = 0.0;  ///< int_Q e^{2 s phi} |(P + p) u|^2
  double rhs2 = 0.0;  ///< s int_{Sigma_+} e^{2 s phi} |u|^2

  /// (lhs1 + lhs2) / (rhs1 + rhs2); NaN when the right side vanishes.
  double ratio() const;
  CarlemanTerms unscaled() const;
};

/// Precomputed grid data shared by evaluations with the same field and weight.
class CarlemanEvaluator {
 public:
  /// Throws InadmissibleWeight unless the weight's beta satisfies its bound.
  CarlemanEvaluator(const SpaceTimeField& field, ScalarField p, const WeightField& weight, const TimeAxis& time);

  /// Throws FinalTimeNotZero if |u(., T)| > 1e-12 at some node.
  CarlemanTerms evaluate(const GridFunction& u, double s) const;
  /// (P + p) u on the grid.
  GridFunction apply_operator(const GridFunction& u) const;
  /// int_{Q_eps} e^{2 s phi} / int_Q e^{2 s phi}.
  double weight_concentration(double eps, double s) const;

  const TimeAxis& time() const { return time_; }
  const SpatialDomain& domain() const { return weight_.domain; }

 private:
  SpaceTimeField field_;
  WeightField weight_;
  TimeAxis time_;
  std::vector<double> a0_, ax_, ay_, p_;  ///< sampled coefficients, time-major
  std::vector<double> phi_;
  double phi_max_ = 0.0;
  BoundaryMask sigma_plus_;
};

CarlemanTerms evaluate_carleman(const GridFunction& u, const SpaceTimeField& field, const ScalarField& p,
                                const WeightField& weight, double s);

/// Seeded tensor-product test functions u = psi(t) w(x) with psi(T) = 0.
std::vector<GridFunction> carleman_test_family(const SpatialDomain& domain, const TimeAxis& time, int count,
                                               std::uint64_t seed);

struct CarlemanReport {
  std::vector<double> s_grid;
  /// terms[m][j]: family member m at s_grid[j].
  std::vector<std::vector<CarlemanTerms>> terms;
  /// Max ratio over the family at each s (NaN where every member is degenerate).
  std::vector<double> max_ratio;
  double c_est = 0.0;
  double s_star_est = 0.0;
  bool degenerate = false;  ///< no member has a defined ratio
  bool all_finite = false;
  /// Relative growth of the running max of max_ratio over the top octave of s.
  double top_octave_growth = 0.0;
  bool pass = false;
};

/// Evaluates every member at every s. C is the max ratio over the upper half
/// of the s grid, s* the smallest grid value beyond which the family max
/// never grows by more than 1%. Pass requires every ratio finite and the
/// running max to grow by at most 1% over the top octave.
CarlemanReport sweep_s(const std::vector<GridFunction>& family, const CarlemanEvaluator& evaluator,
                       const std::vector<double>& s_grid);

/// 1, 2, 4, ..., s_max.
std::vector<double> doubling_grid(double s_min, double s_max);

}  // namespace carleman

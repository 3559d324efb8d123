#include "carleman/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace carleman {

Vec2 SpaceTimeField::dt_a_at(const Vec2& x, double t) const {
  if (time_independent) return {0.0, 0.0};
  if (dt_a) return (*dt_a)(x, t);
  const double h = kFieldDerivativeStep;
  return (a(x, t + h) - a(x, t - h)) * (0.5 / h);
}

FieldBoundsReport check_field_bounds(const SpaceTimeField& field, const SpatialDomain& domain,
                                     const TimeAxis& time) {
  FieldBoundsReport r;
  r.min_a0 = std::numeric_limits<double>::infinity();
  r.min_speed = std::numeric_limits<double>::infinity();
  r.sup_a0 = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < time.levels; ++k) {
    const double t = time.at(k);
    for (std::size_t n = 0; n < domain.size(); ++n) {
      const Vec2 x = domain.node(n);
      const double a0 = field.a0(x, t);
      r.min_a0 = std::min(r.min_a0, a0);
      r.sup_a0 = std::max(r.sup_a0, a0);
      r.min_speed = std::min(r.min_speed, norm(field.a(x, t)));
    }
  }
  r.a0_ok = r.min_a0 >= field.rho - 1e-10;
  r.speed_ok = r.min_speed >= field.rho - 1e-10;
  return r;
}

double sup_a0(const SpaceTimeField& field, const SpatialDomain& domain, const TimeAxis& time) {
  double s = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < time.levels; ++k)
    for (std::size_t n = 0; n < domain.size(); ++n) s = std::max(s, field.a0(domain.node(n), time.at(k)));
  return s;
}

ExponentialRepresentationReport check_exponential_representation(const SpaceTimeField& field,
                                                                 const SpatialDomain& domain,
                                                                 const TimeAxis& time, double tolerance) {
  ExponentialRepresentationReport r;
  const auto rate = [&](const Vec2& x, double t) {
    const Vec2 a = field.a(x, t);
    return dot(field.dt_a_at(x, t), a) / dot(a, a);
  };
  for (std::size_t n = 0; n < domain.size(); ++n) {
    const Vec2 x = domain.node(n);
    const Vec2 a_init = field.a(x, 0.0);
    double integral = 0.0;
    for (int k = 1; k < time.levels; ++k) {
      const double t0 = time.at(k - 1);
      const double t1 = time.at(k);
      // Simpson on each interval
      integral += (t1 - t0) / 6.0 * (rate(x, t0) + 4.0 * rate(x, 0.5 * (t0 + t1)) + rate(x, t1));
      const Vec2 a = field.a(x, t1);
      const double dev = norm(a - a_init * std::exp(integral)) / norm(a);
      r.max_relative_deviation = std::max(r.max_relative_deviation, dev);
    }
  }
  r.ok = r.max_relative_deviation <= tolerance;
  return r;
}

}  // namespace carleman

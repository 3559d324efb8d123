#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "carleman/vec.hpp"

namespace carleman {

/// One node of the discretized boundary. Corners of a rectangle appear once
/// per adjacent edge, each copy carrying that edge's normal and half-cell
/// arclength weight, so summing `weight * g` is the trapezoid rule on every
/// edge.
struct BoundaryPoint {
  Vec2 position;
  Vec2 normal;
  double weight = 0.0;
  std::size_t node = 0;  ///< index of the coincident spatial grid node
  int edge = 0;
};

/// Interval (dim 1) or axis-aligned rectangle (dim 2) together with its
/// uniform node lattice. Node coordinates on the upper edges are exactly
/// `hi`, never `lo + (n-1) * h`.
struct SpatialDomain {
  int dim = 1;
  Vec2 lo{0.0, 0.0};
  Vec2 hi{1.0, 0.0};
  int nx = 2;
  int ny = 1;

  static SpatialDomain interval(double a, double b, int nodes);
  static SpatialDomain rectangle(Vec2 lo, Vec2 hi, int nodes_x, int nodes_y);

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  int ix(std::size_t n) const { return static_cast<int>(n % static_cast<std::size_t>(nx)); }
  int iy(std::size_t n) const { return static_cast<int>(n / static_cast<std::size_t>(nx)); }
  double hx() const { return (hi.x - lo.x) / (nx - 1); }
  double hy() const { return dim == 2 ? (hi.y - lo.y) / (ny - 1) : 0.0; }
  /// Largest spacing over the active axes.
  double h() const;
  double coord_x(int i) const { return i == nx - 1 ? hi.x : lo.x + i * hx(); }
  double coord_y(int j) const {
    if (dim == 1) return 0.0;
    return j == ny - 1 ? hi.y : lo.y + j * hy();
  }
  Vec2 node(std::size_t n) const { return {coord_x(ix(n)), coord_y(iy(n))}; }

  /// Closed inside test, no tolerance.
  bool contains(const Vec2& p) const;
  bool on_boundary_node(std::size_t n) const;
  double measure() const;
  double diameter() const;

  std::vector<BoundaryPoint> boundary_mesh() const;
  /// Trapezoid weights over the node lattice.
  std::vector<double> quadrature_weights() const;

  /// Multilinear interpolation of nodal values; points are clamped to the box.
  double interpolate(std::span<const double> values, const Vec2& p) const;
};

/// Uniform time levels t_k = k * step, k = 0..levels-1, t_{levels-1} = T.
struct TimeAxis {
  int levels = 2;
  double T = 1.0;

  double step() const { return T / (levels - 1); }
  double at(int k) const { return k == levels - 1 ? T : k * step(); }
  std::vector<double> quadrature_weights() const;
};

/// Scalar samples on the space-time lattice, time-major storage.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(SpatialDomain domain, TimeAxis time, double fill = 0.0);

  const SpatialDomain& domain() const { return domain_; }
  const TimeAxis& time() const { return time_; }
  std::size_t spatial_size() const { return domain_.size(); }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t node, int level) { return values_[offset(node, level)]; }
  double operator()(std::size_t node, int level) const { return values_[offset(node, level)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> slice(int level) const {
    return std::span<const double>(values_).subspan(offset(0, level), spatial_size());
  }
  std::span<double> slice(int level) {
    return std::span<double>(values_).subspan(offset(0, level), spatial_size());
  }

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double s);
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }

 private:
  std::size_t offset(std::size_t node, int level) const {
    return static_cast<std::size_t>(level) * domain_.size() + node;
  }

  SpatialDomain domain_;
  TimeAxis time_;
  std::vector<double> values_;
};

// Difference operators: second-order central in the interior, second-order
// one-sided at the edges. At least three nodes are needed along the axis.
GridFunction time_derivative(const GridFunction& u);
GridFunction space_derivative(const GridFunction& u, int axis);
std::vector<double> space_derivative(const SpatialDomain& domain, std::span<const double> values, int axis);

/// Trapezoid rule over the space-time lattice.
double integrate(const GridFunction& u);
/// Trapezoid rule of `u^2`, optionally restricted to nodes with mask != 0.
double integrate_square(const SpatialDomain& domain, std::span<const double> values,
                        std::span<const char> mask = {});
double l2_norm(const SpatialDomain& domain, std::span<const double> values, std::span<const char> mask = {});
/// H^1 norm: L^2 of the values plus L^2 of the central-difference gradient.
double h1_norm(const SpatialDomain& domain, std::span<const double> values, std::span<const char> mask = {});
/// ||u||_{H^1(0,T; L^2(Omega))}.
double h1_time_l2_space(const GridFunction& u);

}  // namespace carleman

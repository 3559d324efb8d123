#include "carleman/grid.hpp"

#include <algorithm>
#include <cmath>

#include "carleman/error.hpp"

namespace carleman {

SpatialDomain SpatialDomain::interval(double a, double b, int nodes) {
  if (!(b > a) || nodes < 3) throw Error(ErrorKind::InvalidArgument, "interval needs b > a and >= 3 nodes");
  SpatialDomain d;
  d.dim = 1;
  d.lo = {a, 0.0};
  d.hi = {b, 0.0};
  d.nx = nodes;
  d.ny = 1;
  return d;
}

SpatialDomain SpatialDomain::rectangle(Vec2 lo, Vec2 hi, int nodes_x, int nodes_y) {
  if (!(hi.x > lo.x) || !(hi.y > lo.y) || nodes_x < 3 || nodes_y < 3)
    throw Error(ErrorKind::InvalidArgument, "rectangle needs positive extent and >= 3 nodes per axis");
  SpatialDomain d;
  d.dim = 2;
  d.lo = lo;
  d.hi = hi;
  d.nx = nodes_x;
  d.ny = nodes_y;
  return d;
}

double SpatialDomain::h() const { return dim == 2 ? std::max(hx(), hy()) : hx(); }

bool SpatialDomain::contains(const Vec2& p) const {
  if (p.x < lo.x || p.x > hi.x) return false;
  if (dim == 2 && (p.y < lo.y || p.y > hi.y)) return false;
  return true;
}

bool SpatialDomain::on_boundary_node(std::size_t n) const {
  const int i = ix(n);
  if (i == 0 || i == nx - 1) return true;
  if (dim == 2) {
    const int j = iy(n);
    return j == 0 || j == ny - 1;
  }
  return false;
}

double SpatialDomain::measure() const {
  return dim == 2 ? (hi.x - lo.x) * (hi.y - lo.y) : (hi.x - lo.x);
}

double SpatialDomain::diameter() const { return dim == 2 ? norm(hi - lo) : hi.x - lo.x; }

std::vector<BoundaryPoint> SpatialDomain::boundary_mesh() const {
  std::vector<BoundaryPoint> mesh;
  if (dim == 1) {
    mesh.push_back({{lo.x, 0.0}, {-1.0, 0.0}, 1.0, index(0), 0});
    mesh.push_back({{hi.x, 0.0}, {1.0, 0.0}, 1.0, index(nx - 1), 1});
    return mesh;
  }
  const auto edge_weight = [](int k, int n, double h) { return (k == 0 || k == n - 1) ? 0.5 * h : h; };
  // counter-clockwise: bottom, right, top, left
  for (int i = 0; i < nx; ++i)
    mesh.push_back({node(index(i, 0)), {0.0, -1.0}, edge_weight(i, nx, hx()), index(i, 0), 0});
  for (int j = 0; j < ny; ++j)
    mesh.push_back({node(index(nx - 1, j)), {1.0, 0.0}, edge_weight(j, ny, hy()), index(nx - 1, j), 1});
  for (int i = nx - 1; i >= 0; --i)
    mesh.push_back({node(index(i, ny - 1)), {0.0, 1.0}, edge_weight(i, nx, hx()), index(i, ny - 1), 2});
  for (int j = ny - 1; j >= 0; --j)
    mesh.push_back({node(index(0, j)), {-1.0, 0.0}, edge_weight(j, ny, hy()), index(0, j), 3});
  return mesh;
}

namespace {

std::vector<double> trapezoid(int n, double h) {
  std::vector<double> w(static_cast<std::size_t>(n), h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

}  // namespace

std::vector<double> SpatialDomain::quadrature_weights() const {
  const auto wx = trapezoid(nx, hx());
  if (dim == 1) return wx;
  const auto wy = trapezoid(ny, hy());
  std::vector<double> w(size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) w[index(i, j)] = wx[static_cast<std::size_t>(i)] * wy[static_cast<std::size_t>(j)];
  return w;
}

double SpatialDomain::interpolate(std::span<const double> values, const Vec2& p) const {
  const auto locate = [](double v, double a, double h, int n, int& cell, double& frac) {
    double r = (v - a) / h;
    r = std::clamp(r, 0.0, static_cast<double>(n - 1));
    cell = std::min(static_cast<int>(std::floor(r)), n - 2);
    frac = r - cell;
  };
  int i = 0;
  double fx = 0.0;
  locate(p.x, lo.x, hx(), nx, i, fx);
  if (dim == 1) return (1.0 - fx) * values[index(i)] + fx * values[index(i + 1)];
  int j = 0;
  double fy = 0.0;
  locate(p.y, lo.y, hy(), ny, j, fy);
  return (1.0 - fx) * (1.0 - fy) * values[index(i, j)] + fx * (1.0 - fy) * values[index(i + 1, j)] +
         (1.0 - fx) * fy * values[index(i, j + 1)] + fx * fy * values[index(i + 1, j + 1)];
}

std::vector<double> TimeAxis::quadrature_weights() const { return trapezoid(levels, step()); }

GridFunction::GridFunction(SpatialDomain domain, TimeAxis time, double fill)
    : domain_(domain), time_(time), values_(domain.size() * static_cast<std::size_t>(time.levels), fill) {}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += o.values_[n];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= o.values_[n];
  return *this;
}

GridFunction& GridFunction::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

namespace {

// Second-order difference along a strided line of n samples.
double line_derivative(const double* base, std::size_t stride, int k, int n, double h) {
  const auto at = [&](int m) { return base[static_cast<std::size_t>(m) * stride]; };
  if (k == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (k == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(k + 1) - at(k - 1)) / (2.0 * h);
}

}  // namespace

GridFunction time_derivative(const GridFunction& u) {
  GridFunction out(u.domain(), u.time());
  const std::size_t ns = u.spatial_size();
  const int nt = u.time().levels;
  const double h = u.time().step();
  const double* base = u.values().data();
  for (int k = 0; k < nt; ++k)
    for (std::size_t n = 0; n < ns; ++n) out(n, k) = line_derivative(base + n, ns, k, nt, h);
  return out;
}

std::vector<double> space_derivative(const SpatialDomain& d, std::span<const double> values, int axis) {
  std::vector<double> out(d.size());
  for (std::size_t n = 0; n < d.size(); ++n) {
    const int i = d.ix(n);
    const int j = d.iy(n);
    if (axis == 0) {
      out[n] = line_derivative(values.data() + d.index(0, j), 1, i, d.nx, d.hx());
    } else {
      out[n] = line_derivative(values.data() + d.index(i, 0), static_cast<std::size_t>(d.nx), j, d.ny, d.hy());
    }
  }
  return out;
}

GridFunction space_derivative(const GridFunction& u, int axis) {
  GridFunction out(u.domain(), u.time());
  for (int k = 0; k < u.time().levels; ++k) {
    const auto d = space_derivative(u.domain(), u.slice(k), axis);
    std::copy(d.begin(), d.end(), out.slice(k).begin());
  }
  return out;
}

double integrate(const GridFunction& u) {
  const auto ws = u.domain().quadrature_weights();
  const auto wt = u.time().quadrature_weights();
  double total = 0.0;
  for (int k = 0; k < u.time().levels; ++k) {
    double level = 0.0;
    for (std::size_t n = 0; n < ws.size(); ++n) level += ws[n] * u(n, k);
    total += wt[static_cast<std::size_t>(k)] * level;
  }
  return total;
}

double integrate_square(const SpatialDomain& d, std::span<const double> values, std::span<const char> mask) {
  const auto w = d.quadrature_weights();
  double total = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    if (!mask.empty() && !mask[n]) continue;
    total += w[n] * values[n] * values[n];
  }
  return total;
}

double l2_norm(const SpatialDomain& d, std::span<const double> values, std::span<const char> mask) {
  return std::sqrt(integrate_square(d, values, mask));
}

double h1_norm(const SpatialDomain& d, std::span<const double> values, std::span<const char> mask) {
  double total = integrate_square(d, values, mask);
  for (int axis = 0; axis < d.dim; ++axis) {
    const auto g = space_derivative(d, values, axis);
    total += integrate_square(d, g, mask);
  }
  return std::sqrt(total);
}

double h1_time_l2_space(const GridFunction& u) {
  const auto wt = u.time().quadrature_weights();
  const GridFunction ut = time_derivative(u);
  double total = 0.0;
  for (int k = 0; k < u.time().levels; ++k) {
    total += wt[static_cast<std::size_t>(k)] *
             (integrate_square(u.domain(), u.slice(k)) + integrate_square(u.domain(), ut.slice(k)));
  }
  return std::sqrt(total);
}

}  // namespace carleman

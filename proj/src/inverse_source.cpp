#include "carleman/inverse_source.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "carleman/error.hpp"
#include "carleman/parallel.hpp"

namespace carleman {

double check_source_bound(const SourceSpec& src, const SpatialDomain& domain) {
  double min_r = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < domain.size(); ++n) min_r = std::min(min_r, std::abs(src.r(domain.node(n), 0.0)));
  if (min_r < src.m0) {
    std::ostringstream msg;
    msg << "min |R(., 0)| = " << min_r << " is below the declared m0 = " << src.m0;
    throw Error(ErrorKind::ViolatesR0, msg.str());
  }
  return min_r;
}

std::vector<double> reconstruct_direct(const SpaceTimeField& field, const SourceSpec& src, const GridFunction& u) {
  const SpatialDomain& d = u.domain();
  check_source_bound(src, d);
  if (u.time().levels < 3) throw Error(ErrorKind::InvalidArgument, "need at least three time levels");
  const double ht = u.time().step();
  const auto u0 = u.slice(0);
  const auto gx = space_derivative(d, u0, 0);
  std::vector<double> gy;
  if (d.dim == 2) gy = space_derivative(d, u0, 1);
  std::vector<double> f(d.size());
  for (std::size_t n = 0; n < d.size(); ++n) {
    const Vec2 x = d.node(n);
    const double ut = (-3.0 * u(n, 0) + 4.0 * u(n, 1) - u(n, 2)) / (2.0 * ht);
    const Vec2 a = field.a(x, 0.0);
    double lhs = field.a0(x, 0.0) * ut + a.x * gx[n] + src.p(x, 0.0) * u(n, 0);
    if (d.dim == 2) lhs += a.y * gy[n];
    const double r = src.r(x, 0.0);
    f[n] = r != 0.0 ? lhs / r : 0.0;
  }
  return f;
}

BalancedS balance_s(double d, double f, double c, double eps) {
  if (!(d > 0.0) || !(f > 0.0)) {
    std::ostringstream msg;
    msg << "balance_s needs D > 0 and F > 0, got D = " << d << ", F = " << f;
    throw Error(ErrorKind::NonpositiveData, msg.str());
  }
  if (d >= f) return {0.0, true};
  return {std::log(f / d) / (c + eps), false};
}

// ---------------------------------------------------------------------------
// Quasi-reversibility

namespace {

using Triplet = Eigen::Triplet<double>;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Weighted least-squares rows: each row is sqrt(weight) * (sum c_j x_j - rhs).
struct RowSet {
  std::vector<Triplet> entries;
  std::vector<double> rhs;
  std::vector<double> row_weight;

  int add(double weight, const std::vector<std::pair<int, double>>& coeffs, double target) {
    const int row = static_cast<int>(rhs.size());
    for (const auto& [col, c] : coeffs) entries.emplace_back(row, col, c);
    rhs.push_back(target);
    row_weight.push_back(weight);
    return row;
  }
  std::size_t size() const { return rhs.size(); }
};

// Sparse LDL^T of the normal matrix used as the CG preconditioner. The
// normal matrix mixes weights spanning many orders of magnitude and
// incomplete factorizations break down on it.
class CholeskyPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  CholeskyPreconditioner() = default;
  template <typename Mat>
  explicit CholeskyPreconditioner(const Mat& m) {
    compute(m);
  }
  template <typename Mat>
  CholeskyPreconditioner& analyzePattern(const Mat&) {
    return *this;
  }
  template <typename Mat>
  CholeskyPreconditioner& factorize(const Mat& m) {
    ldlt_.compute(m);
    return *this;
  }
  template <typename Mat>
  CholeskyPreconditioner& compute(const Mat& m) {
    return factorize(m);
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }
  Eigen::ComputationInfo info() const { return ldlt_.info(); }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

// Sum over rows of weight * (a x - b)^2.
double misfit(const RowSet& rows, const Eigen::VectorXd& x) {
  std::vector<double> ax(rows.size(), 0.0);
  for (const auto& e : rows.entries) ax[static_cast<std::size_t>(e.row())] += e.value() * x[e.col()];
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double res = ax[r] - rows.rhs[r];
    total += rows.row_weight[r] * res * res;
  }
  return total;
}

void accumulate(const RowSet& rows, std::vector<Triplet>& out, std::vector<double>& rhs, int& row_offset) {
  for (const auto& e : rows.entries) {
    const double w = std::sqrt(rows.row_weight[static_cast<std::size_t>(e.row())]);
    out.emplace_back(row_offset + e.row(), e.col(), w * e.value());
  }
  for (std::size_t r = 0; r < rows.size(); ++r) rhs.push_back(std::sqrt(rows.row_weight[r]) * rows.rhs[r]);
  row_offset += static_cast<int>(rows.size());
}

}  // namespace

ReconstructionResult reconstruct_qr(const ReconstructionProblem& pb) {
  const WeightField& wf = pb.weight;
  const SpatialDomain& d = wf.domain;
  const TimeAxis& tm = pb.time;
  const CauchyData& data = pb.data;
  if (!wf.has_beta) throw Error(ErrorKind::InvalidArgument, "weight has no beta");
  if (!(pb.eps > pb.eps_star)) throw Error(ErrorKind::InvalidArgument, "eps must exceed eps_star");
  if (data.sigma.time.levels != tm.levels || data.u0.size() != d.size())
    throw Error(ErrorKind::InvalidArgument, "Cauchy data does not match the grid");
  const GeometricConditionReport geo = check_geometric_condition(wf, pb.eps_star, data.sigma);
  if (!geo.ok) {
    std::ostringstream msg;
    msg << "geometric condition fails at level " << pb.eps_star << " ("
        << (geo.nonempty ? std::to_string(geo.violations.size()) + " violating boundary nodes" : "empty trace") << ")";
    throw Error(ErrorKind::GeometricConditionViolated, msg.str());
  }

  const std::size_t ns = d.size();
  const int nt = tm.levels;
  const int dim = d.dim;
  const double ht = tm.step();
  const double hx = d.hx();
  const double hy = dim == 2 ? d.hy() : 1.0;
  const double s = pb.s;
  double phi_max = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < ns; ++n) phi_max = std::max(phi_max, wf.phi0[n]);
  const auto weight_at = [&](double phi) { return std::exp(2.0 * s * (phi - phi_max)); };

  ReconstructionResult res;
  res.u_active.assign(ns * static_cast<std::size_t>(nt), 0);
  res.f_active.assign(ns, 0);
  std::vector<int> ucol(ns * static_cast<std::size_t>(nt), -1);
  std::vector<int> fcol(ns, -1);
  int ncols = 0;
  for (int k = 0; k < nt; ++k)
    for (std::size_t n = 0; n < ns; ++n) {
      const std::size_t i = static_cast<std::size_t>(k) * ns + n;
      if (wf.phi_node(n, tm.at(k)) > pb.eps_star) {
        res.u_active[i] = 1;
        ucol[i] = ncols++;
      }
    }
  const int n_u = ncols;
  for (std::size_t n = 0; n < ns; ++n)
    if (wf.phi0[n] > pb.eps_star) {
      res.f_active[n] = 1;
      fcol[n] = ncols++;
    }
  if (n_u == 0) throw Error(ErrorKind::GeometricConditionViolated, "Q_eps* contains no grid node");
  const auto uc = [&](std::size_t n, int k) { return ucol[static_cast<std::size_t>(k) * ns + n]; };

  // PDE rows at cell centres, box scheme
  RowSet pde;
  const int ncx = d.nx - 1;
  const int ncy = dim == 2 ? d.ny - 1 : 1;
  const int corners_space = dim == 2 ? 4 : 2;
  const double cell_volume = hx * hy * ht;
  for (int k = 0; k + 1 < nt; ++k) {
    for (int j = 0; j < ncy; ++j) {
      for (int i = 0; i < ncx; ++i) {
        std::size_t sn[4];
        int cnt = 0;
        for (int dj = 0; dj < (dim == 2 ? 2 : 1); ++dj)
          for (int di = 0; di < 2; ++di) sn[cnt++] = d.index(i + di, j + dj);
        bool ok = true;
        for (int c = 0; c < corners_space && ok; ++c)
          ok = uc(sn[c], k) >= 0 && uc(sn[c], k + 1) >= 0 && fcol[sn[c]] >= 0;
        if (!ok) continue;
        const Vec2 xc{d.coord_x(i) + 0.5 * hx, dim == 2 ? d.coord_y(j) + 0.5 * hy : 0.0};
        const double tc = tm.at(k) + 0.5 * ht;
        const double a0 = pb.field.a0(xc, tc);
        const Vec2 a = pb.field.a(xc, tc);
        const double p = pb.src.p(xc, tc);
        const double r = pb.src.r(xc, tc);
        std::vector<std::pair<int, double>> coeffs;
        const double avg_t = 1.0 / corners_space;  // averaging weight of one time pair
        for (int c = 0; c < corners_space; ++c) {
          const int di = c % 2;
          const int dj = c / 2;
          for (int dk = 0; dk < 2; ++dk) {
            double v = (dk ? 1.0 : -1.0) * a0 * avg_t / ht;
            v += (di ? 1.0 : -1.0) * a.x * avg_t / hx;
            if (dim == 2) v += (dj ? 1.0 : -1.0) * a.y * avg_t / hy;
            v += p * avg_t * 0.5;
            coeffs.emplace_back(uc(sn[c], k + dk), v);
          }
          coeffs.emplace_back(fcol[sn[c]], -r * avg_t);
        }
        pde.add(cell_volume * weight_at(wf.phi(xc, tc)), coeffs, 0.0);
      }
    }
  }

  // Lateral rows on Sigma
  RowSet bnd;
  const auto wt = tm.quadrature_weights();
  const std::size_t nb = data.boundary_size();
  for (std::size_t b = 0; b < nb; ++b) {
    const BoundaryPoint& bp = data.sigma.mesh[b];
    for (int k = 0; k < nt; ++k) {
      const int col = uc(bp.node, k);
      if (!data.sigma.at(b, k) || col < 0) continue;
      const double w = pb.alpha_b * bp.weight * wt[static_cast<std::size_t>(k)] * weight_at(wf.phi_node(bp.node, tm.at(k)));
      bnd.add(w, {{col, 1.0}}, data.g[static_cast<std::size_t>(k) * nb + b]);
    }
    for (int k = 0; k + 1 < nt; ++k) {
      const int c0 = uc(bp.node, k);
      const int c1 = uc(bp.node, k + 1);
      if (!data.sigma.at(b, k) || !data.sigma.at(b, k + 1) || c0 < 0 || c1 < 0) continue;
      const double w =
          pb.alpha_b * bp.weight * ht * weight_at(wf.phi_node(bp.node, tm.at(k) + 0.5 * ht));
      const double target = 0.5 * (data.dg_dt[static_cast<std::size_t>(k) * nb + b] +
                                   data.dg_dt[static_cast<std::size_t>(k + 1) * nb + b]);
      bnd.add(w, {{c1, 1.0 / ht}, {c0, -1.0 / ht}}, target);
    }
  }

  // Initial slice rows on Omega_eps*
  RowSet init;
  const auto wx = d.quadrature_weights();
  const double cell_area = hx * hy;
  for (std::size_t n = 0; n < ns; ++n) {
    if (!data.initial_mask[n] || uc(n, 0) < 0) continue;
    init.add(pb.alpha_0 * wx[n] * weight_at(wf.phi0[n]), {{uc(n, 0), 1.0}}, data.u0[n]);
  }
  for (int axis = 0; axis < dim; ++axis) {
    const double h = axis == 0 ? hx : hy;
    for (std::size_t n = 0; n < ns; ++n) {
      const int i = d.ix(n);
      const int j = d.iy(n);
      if ((axis == 0 && i + 1 >= d.nx) || (axis == 1 && j + 1 >= d.ny)) continue;
      const std::size_t m = axis == 0 ? d.index(i + 1, j) : d.index(i, j + 1);
      if (!data.initial_mask[n] || !data.initial_mask[m] || uc(n, 0) < 0 || uc(m, 0) < 0) continue;
      const double w = pb.alpha_0 * cell_area * weight_at(0.5 * (wf.phi0[n] + wf.phi0[m]));
      init.add(w, {{uc(m, 0), 1.0 / h}, {uc(n, 0), -1.0 / h}}, (data.u0[m] - data.u0[n]) / h);
    }
  }

  // alpha_r from the mean diagonal of the PDE block of the normal matrix
  std::vector<double> diag(static_cast<std::size_t>(ncols), 0.0);
  for (const auto& e : pde.entries)
    diag[static_cast<std::size_t>(e.col())] += pde.row_weight[static_cast<std::size_t>(e.row())] * e.value() * e.value();
  double diag_sum = 0.0;
  int diag_count = 0;
  for (double v : diag)
    if (v > 0) {
      diag_sum += v;
      ++diag_count;
    }
  const double scale = diag_count > 0 ? diag_sum / diag_count : 1.0;
  res.alpha_r = pb.alpha_r_factor * scale;

  // Regularization carries the same Carleman weight as the PDE rows so that
  // it stays a fixed fraction of the local residual scale.
  RowSet reg;
  for (std::size_t n = 0; n < ns; ++n)
    if (fcol[n] >= 0) reg.add(res.alpha_r * weight_at(wf.phi0[n]), {{fcol[n], 1.0}}, 0.0);
  for (int k = 0; k < nt; ++k) {
    for (std::size_t n = 0; n < ns; ++n) {
      const int c = uc(n, k);
      if (c < 0) continue;
      const double w = res.alpha_r * weight_at(wf.phi_node(n, tm.at(k)));
      reg.add(w, {{c, 1.0}}, 0.0);
      const int i = d.ix(n);
      const int j = d.iy(n);
      if (i + 1 < d.nx && uc(d.index(i + 1, j), k) >= 0)
        reg.add(w, {{uc(d.index(i + 1, j), k), 1.0 / hx}, {c, -1.0 / hx}}, 0.0);
      if (dim == 2 && j + 1 < d.ny && uc(d.index(i, j + 1), k) >= 0)
        reg.add(w, {{uc(d.index(i, j + 1), k), 1.0 / hy}, {c, -1.0 / hy}}, 0.0);
    }
  }

  std::vector<Triplet> all;
  std::vector<double> rhs;
  int nrows = 0;
  accumulate(pde, all, rhs, nrows);
  accumulate(bnd, all, rhs, nrows);
  accumulate(init, all, rhs, nrows);
  accumulate(reg, all, rhs, nrows);
  SparseMatrix a(nrows, ncols);
  a.setFromTriplets(all.begin(), all.end());
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  const SparseMatrix at = a.transpose();
  const SparseMatrix normal = at * a;
  const Eigen::VectorXd atb = at * b;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(ncols);
  if (atb.norm() > 0.0) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, CholeskyPreconditioner> cg;
    cg.setTolerance(pb.tolerance);
    cg.setMaxIterations(pb.max_iterations);
    cg.compute(normal);
    if (cg.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "factorization of the normal matrix failed");
    x = cg.solve(atb);
    res.iterations = static_cast<int>(cg.iterations());
    res.relative_residual = cg.error();
    res.converged = cg.info() == Eigen::Success && res.relative_residual <= pb.tolerance;
  } else {
    res.converged = true;
  }

  res.u = GridFunction(d, tm);
  for (int k = 0; k < nt; ++k)
    for (std::size_t n = 0; n < ns; ++n)
      if (uc(n, k) >= 0) res.u(n, k) = x[uc(n, k)];
  res.f.assign(ns, 0.0);
  for (std::size_t n = 0; n < ns; ++n)
    if (fcol[n] >= 0) res.f[n] = x[fcol[n]];
  res.j_pde = misfit(pde, x);
  res.j_boundary = misfit(bnd, x);
  res.j_initial = misfit(init, x);
  res.j_regularization = misfit(reg, x);
  (void)n_u;
  return res;
}

// ---------------------------------------------------------------------------
// Hoelder fits

void fit_holder(StabilityFit& fit) {
  fit.floor = 0.0;
  for (const auto& smp : fit.samples)
    if (smp.noise == 0.0) fit.floor = std::max(fit.floor, smp.d);
  std::vector<double> lx, ly;
  for (auto& smp : fit.samples) {
    smp.in_fit = smp.noise > 0.0 && smp.d > 0.0 && smp.err > 0.0 && smp.d >= 1e-10 * smp.f &&
                 smp.d <= 0.1 * smp.f && smp.d > 10.0 * fit.floor;
    if (smp.in_fit) {
      lx.push_back(std::log10(smp.d));
      ly.push_back(std::log10(smp.err));
    }
  }
  fit.used = static_cast<int>(lx.size());
  if (fit.used < 4) {
    std::ostringstream msg;
    msg << "only " << fit.used << " samples fall inside the regression window";
    throw Error(ErrorKind::DegenerateSamples, msg.str());
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0)) throw Error(ErrorKind::DegenerateSamples, "all usable samples share one data size");
  fit.raw_slope = sxy / sxx;
  if (fit.raw_slope > 1.0) {
    fit.theta_hat = 1.0;
    fit.intercept = my - mx;
  } else {
    fit.theta_hat = fit.raw_slope;
    fit.intercept = my - fit.raw_slope * mx;
  }
  double ss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.theta_hat * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);

  const double th = fit.theta_hat;
  const auto bound = [th](const StabilitySample& smp) { return smp.d + std::pow(smp.f, 1.0 - th) * std::pow(smp.d, th); };
  fit.c_fit = 0.0;
  for (const auto& smp : fit.samples)
    if (smp.in_fit) fit.c_fit = std::max(fit.c_fit, smp.err / bound(smp));
  fit.pointwise_ok = true;
  for (const auto& smp : fit.samples)
    if (smp.in_fit && smp.err > fit.c_fit * bound(smp) * (1.0 + 1e-12)) fit.pointwise_ok = false;

  double lo_level = std::numeric_limits<double>::infinity();
  double hi_level = 0.0;
  for (const auto& smp : fit.samples)
    if (smp.noise > 0.0) {
      lo_level = std::min(lo_level, smp.noise);
      hi_level = std::max(hi_level, smp.noise);
    }
  double worst_small = 0.0;
  double best_large = std::numeric_limits<double>::infinity();
  for (const auto& smp : fit.samples) {
    if (smp.noise == lo_level) worst_small = std::max(worst_small, smp.err);
    if (smp.noise == hi_level) best_large = std::min(best_large, smp.err);
  }
  fit.monotone_ok = lo_level < hi_level && worst_small < best_large;
}

std::vector<double> perturbation_shape(const SpatialDomain& domain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double ax[4], bx[4], ay[4], by[4];
  for (int k = 0; k < 4; ++k) {
    ax[k] = unit(rng) / (k + 1);
    bx[k] = unit(rng) / (k + 1);
    ay[k] = unit(rng) / (k + 1);
    by[k] = unit(rng) / (k + 1);
  }
  const auto profile = [](const double* a, const double* b, double xi) {
    double v = 0.0;
    for (int k = 0; k < 4; ++k)
      v += a[k] * std::sin((k + 1) * std::numbers::pi * xi) + b[k] * std::cos(k * std::numbers::pi * xi);
    return v;
  };
  std::vector<double> shape(domain.size());
  for (std::size_t n = 0; n < domain.size(); ++n) {
    const Vec2 x = domain.node(n);
    double v = profile(ax, bx, (x.x - domain.lo.x) / (domain.hi.x - domain.lo.x));
    if (domain.dim == 2) v *= profile(ay, by, (x.y - domain.lo.y) / (domain.hi.y - domain.lo.y));
    shape[n] = v;
  }
  const double nrm = l2_norm(domain, shape);
  if (nrm > 0)
    for (double& v : shape) v /= nrm;
  return shape;
}

namespace {

std::vector<double> sample_spatial(const SpatialDomain& d, const SpatialScalar& f) {
  std::vector<double> v(d.size());
  for (std::size_t n = 0; n < d.size(); ++n) v[n] = f(d.node(n));
  return v;
}

struct SolvedCase {
  GridFunction u;
  CauchyData data;
  double f_norm = 0.0;
  double u_norm = 0.0;
};

SolvedCase solve_case(const SourceExperiment& ex, const SpatialScalar& f, const std::vector<char>& init_mask) {
  SourceSpec src = ex.src;
  src.f = f;
  const InitialData zero = [](const Vec2&) { return 0.0; };
  const InflowData zero_in = [](const Vec2&, double) { return 0.0; };
  ForwardOptions opt;
  opt.upwind = false;
  SolvedCase c;
  c.u = solve_forward(ex.field, src, ex.domain, ex.time, zero, zero_in, opt).characteristics;
  c.data = extract_trace(c.u, ex.sigma, init_mask);
  c.f_norm = l2_norm(ex.domain, sample_spatial(ex.domain, f));
  c.u_norm = h1_time_l2_space(c.u);
  return c;
}

}  // namespace

StabilityFit source_stability_mode_a(const SourceExperiment& ex) {
  const RegionMask star = region_mask(ex.weight, ex.eps_star, ex.time);
  const RegionMask local = region_mask(ex.weight, ex.eps, ex.time);
  const SolvedCase ref = solve_case(ex, ex.src.f, star.omega);
  const double f_ref = ref.f_norm;

  struct Cell {
    double level;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double level : ex.noise_levels)
    for (std::uint64_t seed : ex.seeds) cells.push_back({level, seed});

  StabilityFit fit;
  fit.samples.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto shape = perturbation_shape(ex.domain, cells[c].seed);
    const double amp = cells[c].level * f_ref;
    const SpatialDomain dom = ex.domain;
    const SpatialScalar base = ex.src.f;
    const SpatialScalar perturbed = [base, shape, amp, dom](const Vec2& x) {
      return base(x) + amp * dom.interpolate(shape, x);
    };
    const SolvedCase other = solve_case(ex, perturbed, star.omega);
    const CauchyData diff = data_difference(other.data, ref.data);
    std::vector<double> df(ex.domain.size());
    for (std::size_t n = 0; n < df.size(); ++n) df[n] = amp * shape[n];
    StabilitySample& smp = fit.samples[c];
    smp.noise = cells[c].level;
    smp.seed = cells[c].seed;
    smp.d = source_data_norm(diff);
    smp.f = std::max(ref.f_norm + ref.u_norm, other.f_norm + other.u_norm);
    smp.err = l2_norm(ex.domain, df, local.omega);
    smp.s_used = smp.d > 0 ? balance_s(smp.d, smp.f, ex.carleman_c, ex.eps).s : 0.0;
  }
  fit_holder(fit);
  return fit;
}

StabilityFit source_stability_mode_b(const SourceExperiment& ex) {
  const RegionMask star = region_mask(ex.weight, ex.eps_star, ex.time);
  const RegionMask local = region_mask(ex.weight, 3.0 * ex.eps, ex.time);
  const SolvedCase ref = solve_case(ex, ex.src.f, star.omega);
  const auto f_true = sample_spatial(ex.domain, ex.src.f);
  StabilityFit fit;
  for (double level : ex.noise_levels) {
    for (std::uint64_t seed : ex.seeds) {
      const CauchyData noisy = add_noise(ref.data, level, seed);
      ReconstructionProblem pb;
      pb.field = ex.field;
      pb.src = ex.src;
      pb.weight = ex.weight;
      pb.time = ex.time;
      pb.eps_star = ex.eps_star;
      pb.eps = ex.eps;
      pb.data = noisy;
      pb.s = ex.qr_s;
      const ReconstructionResult rec = reconstruct_qr(pb);
      std::vector<double> diff(f_true.size());
      for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = rec.f[n] - f_true[n];
      StabilitySample smp;
      smp.noise = level;
      smp.seed = seed;
      smp.d = source_data_norm(data_difference(noisy, ref.data));
      smp.f = ref.f_norm + ref.u_norm;
      smp.err = l2_norm(ex.domain, diff, local.omega);
      smp.s_used = smp.d > 0 ? balance_s(smp.d, smp.f, ex.carleman_c, ex.eps).s : 0.0;
      fit.samples.push_back(smp);
    }
  }
  fit_holder(fit);
  return fit;
}

}  // namespace carleman

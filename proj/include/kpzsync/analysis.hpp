#ifndef KPZSYNC_ANALYSIS_HPP
#define KPZSYNC_ANALYSIS_HPP

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "kpzsync/errors.hpp"
#include "kpzsync/fft.hpp"
#include "kpzsync/field.hpp"
#include "kpzsync/grid.hpp"

// Grid-level regularity estimators: discrete Holder seminorms, Littlewood-Paley
// block norms with a fixed smooth dyadic partition, and the checks built on
// them (interpolation, Schauder-type smoothing, Dirac distances in negative
// regularity). Negative-order norms are always computed through block norms,
// never pointwise.

namespace kpzsync {

enum class Lp { L1, L2, Linf };

// ---------------------------------------------------------------------------
// Holder seminorm on the grid. Pairs closer than one cell are excluded:
// below the grid scale the quotient reports discretization, not the field.

inline double holder_seminorm(const GridFunction& f, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ValidationError("holder_seminorm needs alpha in (0,1)");
  const TorusGrid grid = f.grid();
  double best = 0.0;
  for (int i = 0; i < grid.n; ++i)
    for (int j = i + 1; j < grid.n; ++j) {
      double d = grid.dist(i, j);
      if (d < grid.dx * (1.0 - 1e-12)) continue;
      double q = std::fabs(f[i] - f[j]) / std::pow(d, alpha);
      best = std::max(best, q);
    }
  return best;
}

// ---------------------------------------------------------------------------
// Smooth dyadic partition. chi is 1 on |xi| <= 3/4 and 0 on |xi| >= 4/3
// (support ratio 8/3 between consecutive cutoffs); rho_j(xi) =
// chi(xi/2^{j+1}) - chi(xi/2^j) lives on the annulus (3/4) 2^j <= |xi| <=
// (4/3) 2^{j+1}. Block -1 is chi itself. The bump is the standard
// exp(-1/u) glue, so everything here is reproducible bit for bit.

namespace analysisdetail {

inline double bump_half(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }

/// 0 for u <= 0, 1 for u >= 1, smooth and monotone in between.
inline double smoothstep(double u) {
  double a = bump_half(u), b = bump_half(1.0 - u);
  return a / (a + b);
}

}  // namespace analysisdetail

inline double chi_cutoff(double xi) {
  double r = std::fabs(xi);
  const double lo = 0.75, hi = 4.0 / 3.0;
  if (r <= lo) return 1.0;
  if (r >= hi) return 0.0;
  return 1.0 - analysisdetail::smoothstep((r - lo) / (hi - lo));
}

/// Multiplier of block j (j = -1 is the low block) at frequency xi.
inline double block_multiplier(int j, double xi) {
  if (j < 0) return chi_cutoff(xi);
  double s = std::ldexp(1.0, -j);  // 2^{-j}
  return chi_cutoff(xi * 0.5 * s) - chi_cutoff(xi * s);
}

/// Largest block that can meet the spectrum of an n-point grid.
inline int top_block(int n) {
  int j = 0;
  while (0.75 * std::ldexp(1.0, j + 1) <= n / 2) ++j;
  return j;
}

struct BesovProfile {
  Lp p = Lp::L2;
  double alpha = 0.0;
  std::vector<int> blocks;    // -1, 0, ..., jmax
  std::vector<double> norms;  // ||Delta_j f||_{L^p}
  double besov_norm = 0.0;    // sup_j 2^{j alpha} ||Delta_j f||

  double norm_at(int j) const {
    for (size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i] == j) return norms[i];
    throw ValidationError("block " + std::to_string(j) + " not computed");
  }
};

namespace analysisdetail {

inline double lp_norm(const GridFunction& g, Lp p) {
  switch (p) {
    case Lp::L1: {
      double s = 0.0;
      for (int j = 0; j < g.n(); ++j) s += std::fabs(g[j]);
      return s * g.dx();
    }
    case Lp::L2: {
      double s = 0.0;
      for (int j = 0; j < g.n(); ++j) s += g[j] * g[j];
      return std::sqrt(s * g.dx());
    }
    default:
      return g.sup_norm();
  }
}

inline double weight(int j, double alpha) { return std::pow(2.0, alpha * j); }

}  // namespace analysisdetail

inline BesovProfile besov_block_norms(const GridFunction& f, Lp p, double alpha) {
  BesovProfile out;
  out.p = p;
  out.alpha = alpha;
  int jmax = top_block(f.n());
  for (int j = -1; j <= jmax; ++j) {
    GridFunction block = apply_multiplier(f, [j](int k) {
      return block_multiplier(j, static_cast<double>(k));
    });
    double nj = analysisdetail::lp_norm(block, p);
    out.blocks.push_back(j);
    out.norms.push_back(nj);
    out.besov_norm = std::max(out.besov_norm, analysisdetail::weight(j, alpha) * nj);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Space-time slab blocks (p = 2 only): radial annuli in the integer
// frequency lattice of the slab's 2-D Fourier transform, block L2 norms read
// off by Parseval without leaving frequency space.

struct SlabField {
  int rows = 0;  // time samples
  int cols = 0;  // space samples
  double dt = 0.0;
  double dx = 0.0;
  std::vector<double> v;  // row-major, v[r*cols + c]

  double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
};

inline BesovProfile besov_block_norms_slab(const SlabField& s, double alpha) {
  if (s.rows < 2 || s.cols < 2 || static_cast<int>(s.v.size()) != s.rows * s.cols)
    throw ValidationError("slab dimensions do not match the payload");
  BesovProfile out;
  out.p = Lp::L2;
  out.alpha = alpha;
  std::vector<std::complex<double>> a(s.v.size());
  for (size_t i = 0; i < s.v.size(); ++i) a[i] = s.v[i];
  cfft2_inplace(a, s.rows, s.cols, FFTW_FORWARD);
  int jmax = top_block(std::min(s.rows, s.cols));
  double cell = s.dt * s.dx / (static_cast<double>(s.rows) * s.cols);
  for (int j = -1; j <= jmax; ++j) {
    double acc = 0.0;
    for (int r = 0; r < s.rows; ++r) {
      int fr = r <= s.rows / 2 ? r : r - s.rows;
      for (int c = 0; c < s.cols; ++c) {
        int fc = c <= s.cols / 2 ? c : c - s.cols;
        double radius = std::sqrt(static_cast<double>(fr) * fr + static_cast<double>(fc) * fc);
        double m = block_multiplier(j, radius);
        if (m == 0.0) continue;
        double mag = std::norm(a[static_cast<size_t>(r) * s.cols + c]);
        acc += m * m * mag;
      }
    }
    double nj = std::sqrt(acc * cell);
    out.blocks.push_back(j);
    out.norms.push_back(nj);
    out.besov_norm = std::max(out.besov_norm, analysisdetail::weight(j, alpha) * nj);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checks.

/// ([f]_{theta beta}, (2||f||_inf)^{1-theta} ([f]_beta)^theta); the first
/// should not exceed the second.
inline std::pair<double, double> interpolation_check(const GridFunction& f, double beta,
                                                     double theta) {
  if (!(theta > 0.0) || !(theta < 1.0) || !(beta > 0.0) || !(beta < 1.0))
    throw ValidationError("interpolation_check needs beta, theta in (0,1)");
  double lhs = holder_seminorm(f, theta * beta);
  double rhs = std::pow(2.0 * f.sup_norm(), 1.0 - theta) *
               std::pow(holder_seminorm(f, beta), theta);
  return {lhs, rhs};
}

struct SchauderResult {
  double max_ratio = 0.0;
  double argmax_t = 0.0;
  std::vector<double> ts;
  std::vector<double> ratios;
};

/// Scans t over a dyadic grid in (0, T] and returns the largest
/// t^{beta/2} ||P_t f||_{B^{alpha+beta}} / ||f||_{B^{alpha}} (p = infinity).
inline SchauderResult schauder_check(const GridFunction& f, double alpha, double beta, double T,
                                     int t_points = 24) {
  if (!(beta >= 0.0) || !(beta < 2.0)) throw ValidationError("schauder_check needs beta in [0,2)");
  if (!(T > 0.0) || t_points < 1) throw ValidationError("schauder_check needs T > 0");
  double denom = besov_block_norms(f, Lp::Linf, alpha).besov_norm;
  if (denom == 0.0) throw ValidationError("schauder_check: zero input norm");
  SchauderResult out;
  for (int i = 0; i < t_points; ++i) {
    double t = T * std::ldexp(1.0, -i);
    GridFunction g = heat_semigroup(f, t);
    double num = besov_block_norms(g, Lp::Linf, alpha + beta).besov_norm;
    double ratio = std::pow(t, 0.5 * beta) * num / denom;
    out.ts.push_back(t);
    out.ratios.push_back(ratio);
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.argmax_t = t;
    }
  }
  return out;
}

/// || delta_x - delta_y ||_{B^{-gamma}_{1,inf}} through block norms of the
/// scaled indicator columns.
inline double dirac_distance(double x, double y, double gamma, TorusGrid grid) {
  if (!(gamma > 0.0)) throw ValidationError("dirac_distance needs gamma > 0");
  int i = static_cast<int>(std::llround(x * grid.n)) % grid.n;
  int j = static_cast<int>(std::llround(y * grid.n)) % grid.n;
  if (i < 0) i += grid.n;
  if (j < 0) j += grid.n;
  if (i == j) return 0.0;
  GridFunction diff = delta_column(grid, i) - delta_column(grid, j);
  return besov_block_norms(diff, Lp::L1, -gamma).besov_norm;
}

}  // namespace kpzsync

#endif

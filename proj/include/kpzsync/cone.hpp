#ifndef KPZSYNC_CONE_HPP
#define KPZSYNC_CONE_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kpzsync/field.hpp"
#include "kpzsync/grid.hpp"

// Geometry of the positive cone: the Hilbert projective metric, the slice of
// unit-integral densities, positive kernels and their Birkhoff contraction
// coefficient tau = tanh(diameter/4). Everything runs in log space; densities
// that genuinely touch zero are rejected rather than clamped, since clamping
// would silently corrupt distances.

namespace kpzsync {

inline constexpr double density_floor = 1e-300;

/// Strictly positive grid function with unit integral: a point of the slice E.
class Density {
 public:
  Density() = default;

  /// Project a strictly positive field onto the unit-integral slice.
  static Density normalize(const GridFunction& f) {
    double lo = f.min();
    if (!(lo > 0.0) || lo < density_floor)
      throw NonPositiveInput("density must be strictly positive (min entry " +
                             std::to_string(lo) + ")");
    double m = integrate(f);
    Density d;
    d.f_ = (1.0 / m) * f;
    return d;
  }

  const GridFunction& field() const { return f_; }
  const TorusGrid& grid() const { return f_.grid(); }
  double operator[](int j) const { return f_[j]; }
  int n() const { return f_.n(); }

 private:
  GridFunction f_;
};

namespace conedetail {

inline void require_positive(const GridFunction& f, const char* who) {
  double lo = f.min();
  if (!(lo > 0.0) || lo < density_floor)
    throw NonPositiveInput(std::string(who) + ": input not strictly positive (min " +
                           std::to_string(lo) + ")");
}

}  // namespace conedetail

/// d_H(f,g) = log max(f/g) - log min(f/g), computed as the oscillation of
/// log f - log g. Scaling-invariant: d_H(a f, b g) = d_H(f, g) for a,b > 0.
inline double hilbert_distance(const GridFunction& f, const GridFunction& g) {
  if (f.grid() != g.grid()) throw GridMismatch("hilbert_distance: grids differ");
  conedetail::require_positive(f, "hilbert_distance");
  conedetail::require_positive(g, "hilbert_distance");
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (int j = 0; j < f.n(); ++j) {
    double r = std::log(f[j]) - std::log(g[j]);
    if (r > hi) hi = r;
    if (r < lo) lo = r;
  }
  return hi - lo;
}

inline double hilbert_distance(const Density& f, const Density& g) {
  return hilbert_distance(f.field(), g.field());
}

/// Strictly positive integral kernel K(x_i, y_j) sampled on a common grid,
/// acting by (K f)(x) = dx * sum_j K(x, y_j) f(y_j). Row-major storage.
struct PositiveKernel {
  TorusGrid grid;
  double t = 0.0;  // the time horizon the kernel was extracted at (metadata)
  std::vector<double> a;

  PositiveKernel() = default;
  PositiveKernel(TorusGrid g, double t_) : grid(g), t(t_), a(static_cast<size_t>(g.n) * g.n, 0.0) {}

  double at(int i, int j) const { return a[static_cast<size_t>(i) * grid.n + j]; }
  double& at(int i, int j) { return a[static_cast<size_t>(i) * grid.n + j]; }
  int n() const { return grid.n; }

  double min_entry() const {
    double lo = std::numeric_limits<double>::infinity();
    for (double v : a) lo = std::min(lo, v);
    return lo;
  }
  double max_entry() const {
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : a) hi = std::max(hi, v);
    return hi;
  }
};

/// min/max entries plus the diameter bound 2 log(delta/gamma) they imply:
/// a kernel with gamma <= K <= delta maps the whole cone into a set of
/// projective diameter at most 2 log(delta/gamma).
struct KernelBounds {
  double gamma = 0.0;
  double delta = 0.0;
  bool positive = false;
  double diameter_bound = 0.0;
  double tau_bound = 0.0;
};

inline KernelBounds check_kernel_bounds(const PositiveKernel& K) {
  KernelBounds b;
  b.gamma = K.min_entry();
  b.delta = K.max_entry();
  b.positive = b.gamma > 0.0;
  if (b.positive) {
    b.diameter_bound = 2.0 * (std::log(b.delta) - std::log(b.gamma));
    b.tau_bound = std::tanh(0.25 * b.diameter_bound);
  } else {
    b.diameter_bound = std::numeric_limits<double>::infinity();
    b.tau_bound = 1.0;
  }
  return b;
}

/// Projective action of a kernel: apply, then renormalize to the slice.
inline Density projective_apply(const PositiveKernel& K, const Density& f) {
  if (K.grid != f.grid()) throw GridMismatch("projective_apply: grids differ");
  if (!(K.min_entry() > 0.0))
    throw NonPositiveKernel("projective_apply: kernel has a non-positive entry");
  int n = K.n();
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = &K.a[static_cast<size_t>(i) * n];
    for (int j = 0; j < n; ++j) s += row[j] * f[j];
    out[i] = s * K.grid.dx;
  }
  return Density::normalize(GridFunction(K.grid, std::move(out)));
}

struct BirkhoffResult {
  double diameter = 0.0;  // projective diameter of the kernel's image
  double tau = 0.0;       // tanh(diameter / 4), the contraction coefficient
};

/// Projective diameter via column pairs: the image of the cone under K is the
/// convex hull of the columns (images of point masses), so the diameter is
/// the max of d_H over column pairs. O(n^3); the O(n^4) cross-ratio scan is
/// kept in the tests as an oracle.
inline BirkhoffResult birkhoff(const PositiveKernel& K) {
  int n = K.n();
  if (!(K.min_entry() > 0.0))
    throw NonPositiveKernel("birkhoff: kernel has a non-positive entry");
  // Log-space columns, transposed so a column is contiguous.
  std::vector<double> L(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) L[static_cast<size_t>(j) * n + i] = std::log(K.at(i, j));
  double diam = 0.0;
  for (int j = 0; j < n; ++j) {
    const double* cj = &L[static_cast<size_t>(j) * n];
    for (int jp = j + 1; jp < n; ++jp) {
      const double* cjp = &L[static_cast<size_t>(jp) * n];
      double hi = -std::numeric_limits<double>::infinity();
      double lo = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        double r = cj[i] - cjp[i];
        if (r > hi) hi = r;
        if (r < lo) lo = r;
      }
      double d = hi - lo;
      if (d > diam) diam = d;
    }
  }
  BirkhoffResult res;
  res.diameter = diam;
  res.tau = std::tanh(0.25 * diam);
  return res;
}

/// Kernel composition matching the quadrature: (A after B) f = dx * A (dx * B f),
/// so the composed matrix is dx * A * B.
inline PositiveKernel compose(const PositiveKernel& A, const PositiveKernel& B) {
  if (A.grid != B.grid) throw GridMismatch("compose: grids differ");
  int n = A.n();
  PositiveKernel C(A.grid, A.t + B.t);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += A.at(i, k) * B.at(k, j);
      C.at(i, j) = s * A.grid.dx;
    }
  return C;
}

/// The heat kernel as a PositiveKernel, evaluated spectrally (test oracle and
/// deterministic baseline).
inline PositiveKernel heat_kernel_matrix(const TorusGrid& grid, double t) {
  GridFunction prof = heat_kernel_profile(grid, t);
  PositiveKernel K(grid, t);
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j) K.at(i, j) = prof[((i - j) % grid.n + grid.n) % grid.n];
  return K;
}

}  // namespace kpzsync

#endif

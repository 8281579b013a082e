#ifndef KPZSYNC_SPDE_HPP
#define KPZSYNC_SPDE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kpzsync/errors.hpp"
#include "kpzsync/field.hpp"
#include "kpzsync/grid.hpp"
#include "kpzsync/noise.hpp"

// Solvers for the multiplicative stochastic heat equation on the torus,
//   du = u'' dt + u dzeta,
// in the two noise regimes, plus the log/exp transforms and a pointwise
// residual diagnostic for the KPZ form of the equation.
//
// Fractional regime, zeta(t,x) = beta_t V(x) with beta an fBm path (H > 1/2):
// one step of length dt consumes a path increment d and maps
//   u_{m+1} = P_dt(e^{dV} u_m).
// This integrating-factor step is exact for spatially constant V, keeps u
// strictly positive unconditionally, and depends only on the local noise
// increment, so restarting from a snapshot with shifted noise reproduces the
// long solve to rounding. The additive field X (heat equation forced by
// V dbeta) is advanced by
//   X_{m+1} = P_dt X_m + d * phi1(dt Lap) V,
// which is the exact mild-solution quadrature when beta is read as piecewise
// linear across the step. w = e^{-X} u then satisfies the conjugated
// parabolic equation; the solver stores (X, w) and rebuilds u on demand.
//
// White regime: Ito coupling with the slab evaluated at the left endpoint,
//   u_{m+1} = P_dt(u_m + dt u_m xi_m),
// linear in u0 and with E u equal to the heat flow exactly.

namespace kpzsync {

struct TrajectoryMeta {
  std::string solver;
  double dt = 0.0;
  int store_stride = 0;
  uint64_t seed = 0;
};

struct Trajectory {
  TorusGrid grid;
  std::vector<double> times;
  std::vector<GridFunction> fields;
  TrajectoryMeta meta;
  int positivity_flags = 0;  // white solver: steps whose pre-smoothing state went non-positive

  size_t index_of(double t) const {
    double tol = 0.5 * (meta.dt > 0.0 ? meta.dt : 1e-12);
    for (size_t i = 0; i < times.size(); ++i)
      if (std::fabs(times[i] - t) <= tol) return i;
    throw TimeNotStored("time " + std::to_string(t) + " not in stored snapshots");
  }
  const GridFunction& at_time(double t) const { return fields[index_of(t)]; }
  const GridFunction& final() const {
    if (fields.empty()) throw TimeNotStored("empty trajectory");
    return fields.back();
  }
  double final_time() const {
    if (times.empty()) throw TimeNotStored("empty trajectory");
    return times.back();
  }
};

struct FractionalDecomposition {
  Trajectory X;
  Trajectory w;

  GridFunction u_at_index(size_t i) const {
    GridFunction u = exp_field(X.fields[i]);
    for (int j = 0; j < u.n(); ++j) u[j] *= w.fields[i][j];
    return u;
  }
  GridFunction u_at(double t) const { return u_at_index(X.index_of(t)); }
  GridFunction u_final() const { return u_at_index(X.fields.size() - 1); }
  double final_time() const { return X.final_time(); }
};

struct FractionalOptions {
  int store_stride = 0;    // in solver steps; 0 = initial and final only
  double delta_cap = 8.0;  // StepTooLarge when max |d V| exceeds this
  // When false, the additive field X is not advanced: stored X stays zero and
  // w carries u itself (the trivial gauge). Halves the cost when only u is
  // wanted, e.g. for kernel columns.
  bool track_decomposition = true;
};

namespace spdedetail {

inline int64_t checked_steps(double t_end, double dt) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw ValidationError("need t_end > 0 and dt > 0");
  int64_t steps = std::llround(t_end / dt);
  if (steps < 1 || std::fabs(steps * dt - t_end) > 1e-9 * std::max(1.0, t_end))
    throw ValidationError("t_end must be a whole number of steps of dt");
  return steps;
}

inline void check_initial(const GridFunction& u0) {
  double lo = u0.min(), hi = u0.max();
  double mass = integrate(u0);
  if (lo < 0.0 || hi <= 0.0 || mass <= 0.0)
    throw NonPositiveInput("initial state must be nonnegative with positive mass");
}

}  // namespace spdedetail

/// beta evaluated at solver step m when each path increment is split into
/// sub_steps equal sub-increments (piecewise-linear refinement of the path).
inline double beta_at_step(const FbmPath& path, int64_t m, int sub_steps) {
  int64_t q = m / sub_steps;
  int64_t r = m - q * sub_steps;
  if (r < 0) {
    q -= 1;
    r += sub_steps;
  }
  double b = path.beta(q);
  if (r != 0) b += (static_cast<double>(r) / sub_steps) * path.increment(q);
  return b;
}

inline FractionalDecomposition solve_she_fractional(const SpatialProfile& V, const FbmPath& beta,
                                                    const GridFunction& u0, double t_end,
                                                    double dt,
                                                    const FractionalOptions& opt = {}) {
  const TorusGrid grid = u0.grid();
  spdedetail::check_initial(u0);
  if (dt > beta.dt() * (1.0 + 1e-12))
    throw ValidationError("solver dt must not exceed the path resolution");
  double sub_real = beta.dt() / dt;
  int sub = static_cast<int>(std::llround(sub_real));
  if (sub < 1 || std::fabs(sub_real - sub) > 1e-9 * sub_real)
    throw ValidationError("path resolution must be a whole multiple of dt");
  int64_t steps = spdedetail::checked_steps(t_end, dt);
  if ((steps + sub - 1) / sub > beta.steps_available())
    throw WindowNotMaterialized("solve horizon exceeds the materialized noise window");

  int stride = opt.store_stride > 0 ? opt.store_stride : static_cast<int>(steps);
  GridFunction Vg = V.sample(grid);
  double vmax = std::max(std::fabs(Vg.min()), std::fabs(Vg.max()));
  GridFunction phi1V = phi1_heat(Vg, dt);

  FractionalDecomposition out;
  out.X.grid = grid;
  out.w.grid = grid;
  out.X.meta = {"fractional", dt, stride, beta.seed()};
  out.w.meta = out.X.meta;
  GridFunction u = u0;
  GridFunction X(grid, 0.0);
  auto store = [&](double t) {
    out.X.times.push_back(t);
    out.X.fields.push_back(X);
    out.w.times.push_back(t);
    if (opt.track_decomposition) {
      GridFunction w = exp_field(X * -1.0);
      for (int j = 0; j < grid.n; ++j) w[j] *= u[j];
      out.w.fields.push_back(w);
    } else {
      out.w.fields.push_back(u);
    }
  };
  store(0.0);
  for (int64_t m = 0; m < steps; ++m) {
    double d = beta.increment(m / sub) / sub;
    if (std::fabs(d) * vmax > opt.delta_cap)
      throw StepTooLarge("noise increment times profile exceeds the stability cap");
    GridFunction staged = u;
    if (!V.is_zero())
      for (int j = 0; j < grid.n; ++j) staged[j] *= std::exp(d * Vg[j]);
    u = heat_semigroup(staged, dt);
    if (opt.track_decomposition) X = heat_semigroup(X, dt) + phi1V * d;
    if ((m + 1) % stride == 0 || m + 1 == steps) store((m + 1) * dt);
  }
  return out;
}

struct WhiteOptions {
  int store_stride = 0;
};

inline Trajectory solve_she_white(const GridFunction& u0, const WhiteNoiseField& xi,
                                  double t_end, const WhiteOptions& opt = {}) {
  const TorusGrid grid = u0.grid();
  if (grid.n != xi.grid().n) throw GridMismatch("state and noise grids differ");
  spdedetail::check_initial(u0);
  double dt = xi.dt();
  // Stability pin for the explicit multiplicative coupling: one white cell
  // carries sd 1/sqrt(dt dx), so dt * |xi| stays ~ sqrt(dt/dx); keep dt <= dx.
  if (dt > grid.dx * (1.0 + 1e-12))
    throw StepTooLarge("white-noise coupling needs dt <= dx");
  int64_t steps = spdedetail::checked_steps(t_end, dt);
  if (steps > xi.steps())
    throw ValidationError("solve horizon exceeds the declared noise slab");

  int stride = opt.store_stride > 0 ? opt.store_stride : static_cast<int>(steps);
  Trajectory out;
  out.grid = grid;
  out.meta = {"white", dt, stride, xi.seed()};
  GridFunction u = u0;
  out.times.push_back(0.0);
  out.fields.push_back(u);
  for (int64_t m = 0; m < steps; ++m) {
    GridFunction staged = u;
    bool dipped = false;
    for (int j = 0; j < grid.n; ++j) {
      double g = 1.0 + dt * xi.xi(static_cast<int>(m), j);
      if (g <= 0.0) dipped = true;
      staged[j] *= g;
    }
    if (dipped) ++out.positivity_flags;
    u = heat_semigroup(staged, dt);
    if ((m + 1) % stride == 0 || m + 1 == steps) {
      out.times.push_back((m + 1) * dt);
      out.fields.push_back(u);
    }
  }
  return out;
}

inline GridFunction cole_hopf(const GridFunction& u) { return log_field(u); }
inline GridFunction exp_hopf(const GridFunction& h) { return exp_field(h); }

/// Sup norm of the discrete KPZ residual
///   (d_t - Lap) h - (d_x h)^2 - V * (centered dbeta / dt window)
/// at an interior stored time, with d_t by centered differences across the
/// neighbouring snapshots and space derivatives spectral. Diagnostic only.
inline double kpz_residual(const FractionalDecomposition& decomp, const SpatialProfile& V,
                           const FbmPath& beta, double t) {
  const Trajectory& X = decomp.X;
  size_t i = X.index_of(t);
  if (i == 0 || i + 1 >= X.times.size())
    throw TimeNotStored("kpz_residual needs an interior stored time");
  double span = X.times[i + 1] - X.times[i - 1];
  const TorusGrid grid = X.grid;

  auto h_at = [&](size_t idx) {
    GridFunction u = decomp.u_at_index(idx);
    return log_field(u);
  };
  GridFunction hm = h_at(i - 1), h0 = h_at(i), hp = h_at(i + 1);

  double dt = X.meta.dt;
  int sub = static_cast<int>(std::llround(beta.dt() / dt));
  auto step_of = [&](double tt) { return std::llround(tt / dt); };
  double dbeta = beta_at_step(beta, step_of(X.times[i + 1]), sub) -
                 beta_at_step(beta, step_of(X.times[i - 1]), sub);

  GridFunction Vg = V.sample(grid);
  GridFunction hxx = spectral_derivative(h0, 2);
  GridFunction hx = spectral_derivative(h0, 1);
  double worst = 0.0;
  for (int j = 0; j < grid.n; ++j) {
    double ddt = (hp[j] - hm[j]) / span;
    double res = ddt - hxx[j] - hx[j] * hx[j] - Vg[j] * (dbeta / span);
    worst = std::max(worst, std::fabs(res));
  }
  return worst;
}

}  // namespace kpzsync

#endif

#ifndef KPZSYNC_RDS_HPP
#define KPZSYNC_RDS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kpzsync/cone.hpp"
#include "kpzsync/errors.hpp"
#include "kpzsync/field.hpp"
#include "kpzsync/grid.hpp"
#include "kpzsync/linfit.hpp"
#include "kpzsync/noise.hpp"
#include "kpzsync/spde.hpp"

// Random-dynamical-systems layer: the solution operator of the stochastic
// heat equation as a cocycle over the integer time shift, and the
// measurements built on it (Lyapunov rate of the projective contraction,
// forward synchronization, pullback limits, the static fixed point, and the
// KPZ constants series).
//
// Time convention: the shift acts in whole units; one unit is spu solver
// steps covering unit_time of physical time. unit_time = 1 recovers the
// textbook normalization, but at unit diffusivity the unit-time heat kernel
// is already flat to 1e-17, so contraction measurements run the same
// integer-shift structure with a shorter unit (see README). Slopes and rates
// below are always per unit.

namespace kpzsync {

enum class NoiseKind { Zero, Fractional, White };

inline const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::Zero: return "zero";
    case NoiseKind::Fractional: return "fractional";
    default: return "white";
  }
}

struct CocycleSpec {
  NoiseKind kind = NoiseKind::Zero;
  TorusGrid grid;
  uint64_t seed = 1;
  SpatialProfile V;        // fractional forcing profile
  double H = 0.75;         // fractional Hurst index
  int spu = 64;            // solver steps per shift unit
  double unit_time = 1.0;  // physical duration of one shift unit
};

class Cocycle {
 public:
  Cocycle(CocycleSpec spec, int64_t win_lo = 0, int64_t win_hi = 1)
      : spec_(std::move(spec)), win_lo_(win_lo), win_hi_(win_hi) {
    if (!(spec_.unit_time > 0.0) || spec_.spu < 1)
      throw ValidationError("cocycle needs unit_time > 0 and spu >= 1");
    if (spec_.kind == NoiseKind::Fractional) {
      if (win_hi_ <= win_lo_) throw ValidationError("fractional cocycle needs a nonempty window");
      path_ = FbmPath::materialize(spec_.H, step_dt(), spec_.spu, spec_.seed, win_lo_, win_hi_);
    }
  }

  const CocycleSpec& spec() const { return spec_; }
  double step_dt() const { return spec_.unit_time / spec_.spu; }
  int64_t window_lo() const { return win_lo_; }
  int64_t window_hi() const { return win_hi_; }
  const FbmPath& path() const {
    if (spec_.kind != NoiseKind::Fractional)
      throw ValidationError("only the fractional cocycle carries a path");
    return path_;
  }

  /// Noise view with origin at shift z (fractional only).
  FbmPath path_at(int64_t z) const { return path().shifted(z - path_.origin()); }

  /// phi_t(theta^z omega) u0, raw (unnormalized). t in shift units; t*spu
  /// must be a whole number of solver steps.
  GridFunction apply(int64_t z, double t_units, const GridFunction& u0) const {
    int64_t steps = units_to_steps(t_units);
    if (steps == 0) return u0;
    double t_phys = static_cast<double>(steps) * step_dt();
    switch (spec_.kind) {
      case NoiseKind::Zero:
        return heat_semigroup(u0, t_phys);
      case NoiseKind::Fractional: {
        FractionalOptions o;
        o.track_decomposition = false;
        return solve_she_fractional(spec_.V, path_at(z), u0, t_phys, step_dt(), o).u_final();
      }
      default: {
        WhiteNoiseField xi(spec_.grid, step_dt(), spec_.spu, spec_.seed, z,
                           static_cast<int>(steps));
        return solve_she_white(u0, xi, t_phys).final();
      }
    }
  }

  /// Full decomposition run (fractional only), for residual diagnostics.
  FractionalDecomposition solve_decomposed(int64_t z, double t_units, const GridFunction& u0,
                                           int store_stride = 0) const {
    if (spec_.kind != NoiseKind::Fractional)
      throw ValidationError("decomposition requires the fractional cocycle");
    int64_t steps = units_to_steps(t_units);
    FractionalOptions o;
    o.store_stride = store_stride;
    return solve_she_fractional(spec_.V, path_at(z), u0, static_cast<double>(steps) * step_dt(),
                                step_dt(), o);
  }

  int64_t units_to_steps(double t_units) const {
    if (t_units < 0.0) throw ValidationError("cocycle time must be nonnegative");
    double s = t_units * spec_.spu;
    int64_t steps = std::llround(s);
    if (std::fabs(s - steps) > 1e-9 * std::max(1.0, s))
      throw ValidationError("cocycle time must resolve to whole solver steps");
    return steps;
  }

 private:
  CocycleSpec spec_;
  int64_t win_lo_ = 0, win_hi_ = 0;
  FbmPath path_;
};

inline GridFunction apply_cocycle(const Cocycle& c, int64_t z, double t_units,
                                  const GridFunction& u0) {
  return c.apply(z, t_units, u0);
}

/// Kernel of phi_t(theta^z omega): column j is the solver applied to the
/// discrete delta at node j. Throws if smoothing has not made it positive.
inline PositiveKernel kernel_matrix(const Cocycle& c, int64_t z, double t_units) {
  const TorusGrid grid = c.spec().grid;
  int64_t steps = c.units_to_steps(t_units);
  if (steps < 1) throw ValidationError("kernel needs t >= one solver step");
  PositiveKernel K(grid, static_cast<double>(steps) * c.step_dt());
  for (int j = 0; j < grid.n; ++j) {
    GridFunction col = c.apply(z, t_units, delta_column(grid, j));
    for (int i = 0; i < grid.n; ++i) {
      if (!(col[i] > 0.0))
        throw NonPositiveKernel("kernel entry (" + std::to_string(i) + "," + std::to_string(j) +
                                ") not positive; dt too large or t too small");
      K.at(i, j) = col[i];
    }
  }
  return K;
}

// ---------------------------------------------------------------------------
// Lyapunov rate of the unit-step projective contraction.

struct LyapunovEstimate {
  std::vector<double> samples;  // log tau(phi_1(theta^i omega))
  std::vector<double> running;  // running Birkhoff average
  double mean = 0.0;
  double se = 0.0;

  double ci_halfwidth() const { return 2.0 * se; }
};

inline LyapunovEstimate estimate_lyapunov(const Cocycle& c, int N) {
  if (N < 10) throw ValidationError("lyapunov estimate needs N >= 10");
  LyapunovEstimate est;
  est.samples.reserve(N);
  est.running.reserve(N);
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    BirkhoffResult b = birkhoff(kernel_matrix(c, i, 1.0));
    double s = std::log(b.tau);
    est.samples.push_back(s);
    acc += s;
    est.running.push_back(acc / (i + 1));
  }
  MeanEstimate m = batch_mean(est.samples);
  est.mean = m.mean;
  est.se = m.se;
  return est;
}

// ---------------------------------------------------------------------------
// Forward synchronization.

struct SyncReport {
  std::vector<double> times;         // shift units 0..N (truncated on underflow)
  std::vector<double> dh;            // projective distance at those times
  std::vector<double> sup_centered;  // sup |h_a - h_b - mean(h_a - h_b)|
  LineFit tail_fit;                  // log dh vs unit, last half of valid points
  bool tail_fit_valid = false;
  bool underflow = false;
  int64_t underflow_at = -1;
  bool has_lyapunov = false;
  double lyapunov_mean = std::numeric_limits<double>::quiet_NaN();
  double lyapunov_se = std::numeric_limits<double>::quiet_NaN();
};

/// Truncation threshold: below this the projective distance is dominated by
/// rounding in log space and the series is cut, not trusted.
inline constexpr double distance_underflow = 1e-13;

namespace rdsdetail {

inline void fit_tail(const std::vector<double>& times, const std::vector<double>& dh,
                     LineFit* fit, bool* valid) {
  std::vector<double> xs, ys;
  for (size_t i = 0; i < dh.size(); ++i)
    if (dh[i] > 0.0) {
      xs.push_back(times[i]);
      ys.push_back(std::log(dh[i]));
    }
  *valid = false;
  if (xs.size() < 3) return;
  size_t from = xs.size() / 2;
  std::vector<double> tx(xs.begin() + from, xs.end());
  std::vector<double> ty(ys.begin() + from, ys.end());
  if (tx.size() < 2) return;
  *fit = fit_line(tx, ty);
  *valid = true;
}

}  // namespace rdsdetail

struct SyncOptions {
  bool with_lyapunov = true;
};

inline SyncReport run_forward_sync(const Cocycle& c, const GridFunction& u0_a,
                                   const GridFunction& u0_b, int N_steps,
                                   const SyncOptions& opt = {}) {
  if (N_steps < 1) throw ValidationError("forward sync needs N_steps >= 1");
  SyncReport rep;
  Density a = Density::normalize(u0_a);
  Density b = Density::normalize(u0_b);
  auto record = [&](int64_t n, const Density& f, const Density& g) {
    double d = hilbert_distance(f, g);
    GridFunction diff = log_field(f.field()) - log_field(g.field());
    double ctr = mean(diff);
    double sup = 0.0;
    for (int j = 0; j < diff.n(); ++j) sup = std::max(sup, std::fabs(diff[j] - ctr));
    rep.times.push_back(static_cast<double>(n));
    rep.dh.push_back(d);
    rep.sup_centered.push_back(sup);
    if (d < distance_underflow && !rep.underflow) {
      rep.underflow = true;
      rep.underflow_at = n;
    }
  };
  record(0, a, b);
  for (int64_t n = 0; n < N_steps && !rep.underflow; ++n) {
    a = Density::normalize(c.apply(n, 1.0, a.field()));
    b = Density::normalize(c.apply(n, 1.0, b.field()));
    record(n + 1, a, b);
  }
  rdsdetail::fit_tail(rep.times, rep.dh, &rep.tail_fit, &rep.tail_fit_valid);
  if (opt.with_lyapunov) {
    LyapunovEstimate lyap = estimate_lyapunov(c, std::max(10, N_steps));
    rep.has_lyapunov = true;
    rep.lyapunov_mean = lyap.mean;
    rep.lyapunov_se = lyap.se;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pullback: u_n = phi^pi_{n + t_obs}(theta^{-n} omega) u0.

struct PullbackResult {
  std::vector<double> n_values;          // 1..N_max
  std::vector<double> cauchy_dh;         // d_H(u_n, u_{n+1}), n = 1..N_max-1
  std::vector<double> tau_log_products;  // log prod_{i<=n} tau(phi_1(theta^{-i})), n = 1..N_max
  std::vector<double> spread;            // d_H(u0, phi^pi_1(theta^{-(n+1)}) u0), n = 1..N_max-1
  Density limit;                         // u_{N_max}
  LineFit tail_fit;
  bool tail_fit_valid = false;
  bool underflow = false;
  int64_t underflow_at = -1;
  bool has_tau = false;
};

struct PullbackOptions {
  bool with_tau_products = true;
};

inline PullbackResult run_pullback(const Cocycle& c, const GridFunction& u0, int N_max,
                                   int64_t t_obs, const PullbackOptions& opt = {}) {
  if (N_max < 2) throw ValidationError("pullback needs N_max >= 2");
  if (t_obs < 0) throw ValidationError("pullback observation time must be >= 0");
  PullbackResult out;
  Density base = Density::normalize(u0);
  std::vector<Density> u_n;
  std::vector<Density> first_unit;  // phi^pi_1(theta^{-n}) u0 for n = 1..N_max
  for (int n = 1; n <= N_max; ++n) {
    Density state = base;
    for (int64_t i = 0; i < n + t_obs; ++i) {
      state = Density::normalize(c.apply(-n + i, 1.0, state.field()));
      if (i == 0) {
        if (static_cast<int>(first_unit.size()) < n) first_unit.resize(n, state);
        first_unit[n - 1] = state;
      }
    }
    u_n.push_back(state);
    out.n_values.push_back(static_cast<double>(n));
  }
  for (int n = 1; n < N_max; ++n) {
    double d = hilbert_distance(u_n[n - 1], u_n[n]);
    out.cauchy_dh.push_back(d);
    out.spread.push_back(hilbert_distance(base, first_unit[n]));
    if (d < distance_underflow && !out.underflow) {
      out.underflow = true;
      out.underflow_at = n;
    }
  }
  out.limit = u_n.back();
  if (opt.with_tau_products) {
    out.has_tau = true;
    double acc = 0.0;
    for (int n = 1; n <= N_max; ++n) {
      acc += std::log(birkhoff(kernel_matrix(c, -n, 1.0)).tau);
      out.tau_log_products.push_back(acc);
    }
  }
  std::vector<double> ns(out.cauchy_dh.size());
  for (size_t i = 0; i < ns.size(); ++i) ns[i] = static_cast<double>(i + 1);
  rdsdetail::fit_tail(ns, out.cauchy_dh, &out.tail_fit, &out.tail_fit_valid);
  return out;
}

// ---------------------------------------------------------------------------
// Static fixed point: power iteration in the projective metric.

struct KreinRutmanResult {
  Density fixed_point;
  int iterations = 0;
  double final_increment = 0.0;
};

inline KreinRutmanResult static_krein_rutman(const PositiveKernel& K, double tol,
                                             int max_iterations = 10000) {
  if (!(tol > 0.0)) throw ValidationError("krein-rutman tolerance must be positive");
  if (!(K.min_entry() > 0.0)) throw NonPositiveKernel("krein-rutman needs a strictly positive kernel");
  KreinRutmanResult out;
  Density f = Density::normalize(GridFunction(K.grid, 1.0));
  for (int it = 1; it <= max_iterations; ++it) {
    Density g = projective_apply(K, f);
    double d = hilbert_distance(f, g);
    f = g;
    if (d < tol) {
      out.fixed_point = f;
      out.iterations = it;
      out.final_increment = d;
      return out;
    }
  }
  throw NoConvergence("power iteration did not reach tol " + std::to_string(tol) + " in " +
                      std::to_string(max_iterations) + " iterations");
}

// ---------------------------------------------------------------------------
// KPZ constants series: c(t) = integral of h_a - h_b, which the equation
// drives to a constant. Masses are carried separately in log form so long
// runs neither overflow nor lose the constant.

struct ConstantsSeries {
  std::vector<double> times_units;   // 0..N
  std::vector<double> c;             // integral of (h_a - h_b)
  std::vector<double> rhs;           // integral of d_x(h_a - h_b) d_x(h_a + h_b)
  std::vector<double> ode_residual;  // centered dc/dt minus rhs, interior points
  double c_final = 0.0;
  LineFit decay_fit;  // log |c - c_final| vs unit, tail of valid points
  bool decay_fit_valid = false;
};

inline ConstantsSeries track_constants(const Cocycle& c, const GridFunction& u0_a,
                                       const GridFunction& u0_b, int N_steps) {
  if (c.spec().kind == NoiseKind::White)
    throw ValidationError("constants tracking is defined for the fractional cocycle");
  if (N_steps < 3) throw ValidationError("constants tracking needs N_steps >= 3");
  ConstantsSeries out;
  Density a = Density::normalize(u0_a);
  Density b = Density::normalize(u0_b);
  double log_mass_a = std::log(integrate(u0_a));
  double log_mass_b = std::log(integrate(u0_b));
  auto record = [&](int64_t n) {
    GridFunction la = log_field(a.field());
    GridFunction lb = log_field(b.field());
    GridFunction g = la - lb;
    out.times_units.push_back(static_cast<double>(n));
    out.c.push_back(mean(g) + (log_mass_a - log_mass_b));
    GridFunction gx = spectral_derivative(g, 1);
    GridFunction sx = spectral_derivative(la + lb, 1);
    out.rhs.push_back(integrate(gx * sx));
  };
  record(0);
  for (int64_t n = 0; n < N_steps; ++n) {
    GridFunction ra = c.apply(n, 1.0, a.field());
    GridFunction rb = c.apply(n, 1.0, b.field());
    log_mass_a += std::log(integrate(ra));
    log_mass_b += std::log(integrate(rb));
    a = Density::normalize(ra);
    b = Density::normalize(rb);
    record(n + 1);
  }
  out.c_final = out.c.back();
  double ut = c.spec().unit_time;
  for (size_t k = 1; k + 1 < out.c.size(); ++k)
    out.ode_residual.push_back((out.c[k + 1] - out.c[k - 1]) / (2.0 * ut) - out.rhs[k]);
  std::vector<double> xs, ys;
  for (size_t k = 0; k + 1 < out.c.size(); ++k) {
    double e = std::fabs(out.c[k] - out.c_final);
    if (e > 1e-14) {
      xs.push_back(out.times_units[k]);
      ys.push_back(std::log(e));
    }
  }
  if (xs.size() >= 3) {
    size_t from = xs.size() / 2;
    std::vector<double> tx(xs.begin() + from, xs.end());
    std::vector<double> ty(ys.begin() + from, ys.end());
    if (tx.size() >= 2) {
      out.decay_fit = fit_line(tx, ty);
      out.decay_fit_valid = true;
    }
  }
  return out;
}

}  // namespace kpzsync

#endif

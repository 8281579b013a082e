#ifndef KPZSYNC_EXPERIMENTS_HPP
#define KPZSYNC_EXPERIMENTS_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "kpzsync/analysis.hpp"
#include "kpzsync/config.hpp"
#include "kpzsync/io.hpp"
#include "kpzsync/rds.hpp"
#include "kpzsync/version.hpp"

// Experiment drivers: one function per CLI subcommand, all funneled through
// run_experiment. Replicates are scheduled over a small worker pool and
// merged strictly by replicate index, so -j never changes a byte of output.
// Every run leaves a canonical config echo, a summary.json, the per-kind CSV
// tables, and a manifest listing them.

namespace kpzsync {

inline void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errs(count);
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          errs[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (int i = 0; i < count; ++i)
    if (errs[i]) std::rethrow_exception(errs[i]);
}

struct RunManifest {
  std::string config_text;
  uint64_t config_hash = 0;
  std::string version;
  std::vector<uint64_t> replicate_seeds;
  double wall_seconds = 0.0;  // informational; excluded from determinism checks
  std::vector<std::string> outputs;
};

namespace expdetail {

using json = nlohmann::json;

inline std::string join(const std::string& dir, const std::string& name) {
  return dir + "/" + name;
}

inline std::string numbered(const std::string& base, int r, int reps, const std::string& ext) {
  if (reps == 1) return base + ext;
  return base + "_" + std::to_string(r) + ext;
}

inline GridFunction positive_initial(const SpatialProfile& p, const TorusGrid& grid,
                                     const char* which) {
  GridFunction f = p.sample(grid);
  if (!(f.min() > 0.0))
    throw NonPositiveInput(std::string(which) + " profile is not strictly positive on the grid");
  return f;
}

inline CocycleSpec cocycle_spec(const ExperimentConfig& cfg, uint64_t seed) {
  CocycleSpec s;
  s.kind = cfg.noise_kind();
  s.grid = TorusGrid(cfg.n);
  s.seed = seed;
  s.V = cfg.profile();
  s.H = cfg.H;
  s.spu = cfg.spu;
  s.unit_time = cfg.unit_time;
  return s;
}

inline json fit_json(const LineFit& f, bool valid) {
  json j;
  j["valid"] = valid;
  if (valid) {
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["r_squared"] = f.r_squared;
    j["slope_se"] = f.slope_se;
    j["points"] = f.count;
  }
  return j;
}

// ---- sync-forward -----------------------------------------------------

inline void run_sync_forward(const ExperimentConfig& cfg, const std::string& dir, int jobs,
                             RunManifest* man, json* summary) {
  int R = cfg.replicates;
  std::vector<SyncReport> reps(R);
  parallel_for(R, jobs, [&](int r) {
    CocycleSpec spec = cocycle_spec(cfg, man->replicate_seeds[r]);
    SyncOptions opt;
    opt.with_lyapunov = spec.kind != NoiseKind::White;  // kernel cost at white spu is prohibitive
    // The Lyapunov side pass samples at least 10 units, so the noise window
    // must cover that many even for short horizons.
    int hi = opt.with_lyapunov ? std::max(10, cfg.horizon) : cfg.horizon;
    Cocycle c(spec, 0, hi + 1);
    GridFunction a = positive_initial(cfg.initial_profile(), spec.grid, "u0");
    GridFunction b = positive_initial(cfg.initial_profile_b(), spec.grid, "u0_b");
    reps[r] = run_forward_sync(c, a, b, cfg.horizon, opt);
  });
  json per = json::array();
  for (int r = 0; r < R; ++r) {
    std::string name = numbered("sync", r, R, ".csv");
    write_sync_csv(join(dir, name), reps[r]);
    man->outputs.push_back(name);
    json jr;
    jr["seed"] = man->replicate_seeds[r];
    jr["tail_fit"] = fit_json(reps[r].tail_fit, reps[r].tail_fit_valid);
    jr["underflow"] = reps[r].underflow;
    if (reps[r].underflow) jr["underflow_at"] = reps[r].underflow_at;
    if (reps[r].has_lyapunov) {
      jr["lyapunov_mean"] = reps[r].lyapunov_mean;
      jr["lyapunov_se"] = reps[r].lyapunov_se;
    }
    per.push_back(jr);
  }
  (*summary)["replicates"] = per;
}

// ---- sync-pullback ----------------------------------------------------

inline void run_sync_pullback(const ExperimentConfig& cfg, const std::string& dir, int jobs,
                              RunManifest* man, json* summary) {
  int R = cfg.replicates;
  std::vector<PullbackResult> reps(R);
  parallel_for(R, jobs, [&](int r) {
    CocycleSpec spec = cocycle_spec(cfg, man->replicate_seeds[r]);
    Cocycle c(spec, -(cfg.horizon + 1), cfg.t_obs + 1);
    GridFunction u0 = positive_initial(cfg.initial_profile(), spec.grid, "u0");
    PullbackOptions opt;
    opt.with_tau_products = spec.kind != NoiseKind::White;
    reps[r] = run_pullback(c, u0, cfg.horizon, cfg.t_obs, opt);
  });
  json per = json::array();
  for (int r = 0; r < R; ++r) {
    const PullbackResult& p = reps[r];
    std::string name = numbered("pullback", r, R, ".csv");
    {
      auto os = iodetail::open_out(join(dir, name));
      os << "n,cauchy_dH,log_cauchy_dH,tau_log_product,spread\n";
      for (size_t i = 0; i < p.cauchy_dh.size(); ++i) {
        os << (i + 1) << "," << format_full(p.cauchy_dh[i]) << ",";
        if (p.cauchy_dh[i] > 0.0)
          os << format_full(std::log(p.cauchy_dh[i]));
        else
          os << "nan";
        os << "," << (p.has_tau ? format_full(p.tau_log_products[i]) : std::string("nan")) << ","
           << format_full(p.spread[i]) << "\n";
      }
      iodetail::finish(os, join(dir, name));
    }
    man->outputs.push_back(name);
    std::string lim = numbered("limit", r, R, ".csv");
    write_field_csv(join(dir, lim), p.limit.field());
    man->outputs.push_back(lim);
    json jr;
    jr["seed"] = man->replicate_seeds[r];
    jr["tail_fit"] = fit_json(p.tail_fit, p.tail_fit_valid);
    jr["underflow"] = p.underflow;
    if (p.has_tau && !p.tau_log_products.empty())
      jr["tau_log_product_final"] = p.tau_log_products.back();
    per.push_back(jr);
  }
  (*summary)["replicates"] = per;
}

// ---- lyapunov ----------------------------------------------------------

inline void run_lyapunov(const ExperimentConfig& cfg, const std::string& dir, int jobs,
                         RunManifest* man, json* summary) {
  if (cfg.noise_kind() == NoiseKind::White && cfg.spu > 512)
    throw ValidationError("lyapunov with white noise needs spu <= 512 (kernel cost)");
  int R = cfg.replicates;
  std::vector<LyapunovEstimate> reps(R);
  int samples = std::max(10, cfg.horizon);
  parallel_for(R, jobs, [&](int r) {
    CocycleSpec spec = cocycle_spec(cfg, man->replicate_seeds[r]);
    Cocycle c(spec, 0, samples + 1);
    reps[r] = estimate_lyapunov(c, samples);
  });
  json per = json::array();
  double pooled = 0.0;
  for (int r = 0; r < R; ++r) {
    std::string name = numbered("samples", r, R, ".csv");
    auto os = iodetail::open_out(join(dir, name));
    os << "i,log_tau,running_average\n";
    for (size_t i = 0; i < reps[r].samples.size(); ++i)
      os << i << "," << format_full(reps[r].samples[i]) << ","
         << format_full(reps[r].running[i]) << "\n";
    iodetail::finish(os, join(dir, name));
    man->outputs.push_back(name);
    pooled += reps[r].mean;
    json jr;
    jr["seed"] = man->replicate_seeds[r];
    jr["mean"] = reps[r].mean;
    jr["se"] = reps[r].se;
    per.push_back(jr);
  }
  (*summary)["replicates"] = per;
  (*summary)["pooled_mean"] = pooled / R;
}

// ---- she ----------------------------------------------------------------

inline void run_she(const ExperimentConfig& cfg, const std::string& dir, int jobs,
                    RunManifest* man, json* summary) {
  int R = cfg.replicates;
  struct SheOut {
    Trajectory u;
    bool fractional = false;
    GridFunction x_final, w_final;
    double residual = -1.0;
    int positivity_flags = 0;
  };
  std::vector<SheOut> reps(R);
  parallel_for(R, jobs, [&](int r) {
    CocycleSpec spec = cocycle_spec(cfg, man->replicate_seeds[r]);
    GridFunction u0 = positive_initial(cfg.initial_profile(), spec.grid, "u0");
    double dt = spec.unit_time / spec.spu;
    int64_t steps = static_cast<int64_t>(cfg.horizon) * spec.spu;
    int stride = cfg.store_stride > 0 ? cfg.store_stride : static_cast<int>(steps);
    SheOut& o = reps[r];
    if (spec.kind == NoiseKind::Zero) {
      o.u.grid = spec.grid;
      o.u.meta = {"zero", dt, stride, spec.seed};
      int64_t m = 0;
      for (; m < steps; m += stride) {
        o.u.times.push_back(m * dt);
        o.u.fields.push_back(heat_semigroup(u0, m * dt));
      }
      o.u.times.push_back(steps * dt);
      o.u.fields.push_back(heat_semigroup(u0, steps * dt));
    } else if (spec.kind == NoiseKind::Fractional) {
      Cocycle c(spec, 0, cfg.horizon + 1);
      FractionalDecomposition d = c.solve_decomposed(0, cfg.horizon, u0, stride);
      o.fractional = true;
      o.x_final = d.X.final();
      o.w_final = d.w.final();
      o.u.grid = spec.grid;
      o.u.meta = d.X.meta;
      o.u.times = d.X.times;
      for (size_t i = 0; i < d.X.times.size(); ++i) o.u.fields.push_back(d.u_at_index(i));
      if (d.X.times.size() >= 3)
        o.residual = kpz_residual(d, spec.V, c.path_at(0), d.X.times[d.X.times.size() / 2]);
    } else {
      WhiteNoiseField xi(spec.grid, dt, spec.spu, spec.seed, 0, static_cast<int>(steps));
      WhiteOptions wo;
      wo.store_stride = stride;
      o.u = solve_she_white(u0, xi, steps * dt, wo);
      o.positivity_flags = o.u.positivity_flags;
    }
  });
  json per = json::array();
  for (int r = 0; r < R; ++r) {
    const SheOut& o = reps[r];
    std::string traj = numbered("trajectory", r, R, ".csv");
    write_trajectory_csv(join(dir, traj), o.u);
    man->outputs.push_back(traj);
    std::string fin = numbered("final", r, R, ".csv");
    write_field_csv(join(dir, fin), o.u.fields.back());
    man->outputs.push_back(fin);
    json jr;
    jr["seed"] = man->replicate_seeds[r];
    jr["final_mass"] = integrate(o.u.fields.back());
    jr["final_min"] = o.u.fields.back().min();
    jr["final_max"] = o.u.fields.back().max();
    if (o.fractional) {
      std::string xf = numbered("x_final", r, R, ".csv");
      write_field_csv(join(dir, xf), o.x_final);
      man->outputs.push_back(xf);
      std::string wf = numbered("w_final", r, R, ".csv");
      write_field_csv(join(dir, wf), o.w_final);
      man->outputs.push_back(wf);
      if (o.residual >= 0.0) jr["kpz_residual"] = o.residual;
    }
    if (cfg.noise_kind() == NoiseKind::White) jr["positivity_flags"] = o.positivity_flags;
    per.push_back(jr);
  }
  (*summary)["replicates"] = per;
  if (cfg.noise_kind() == NoiseKind::White && R >= 2) {
    // Averaging the endpoint over replicates should reproduce the heat flow
    // of u0: the noise increments are mean zero and independent of the
    // running solution, so the scheme's expectation is exactly the heat
    // semigroup and only Monte Carlo error remains.
    TorusGrid grid(cfg.n);
    GridFunction u0 = positive_initial(cfg.initial_profile(), grid, "u0");
    GridFunction target = heat_semigroup(u0, cfg.horizon * cfg.unit_time);
    std::vector<double> m1(grid.n, 0.0), m2(grid.n, 0.0);
    for (const SheOut& o : reps) {
      const GridFunction& f = o.u.fields.back();
      for (int j = 0; j < grid.n; ++j) {
        m1[j] += f[j];
        m2[j] += f[j] * f[j];
      }
    }
    auto os = iodetail::open_out(join(dir, "mean_final.csv"));
    os << "x,mean,target,se\n";
    double max_z = 0.0, sup_dev = 0.0;
    for (int j = 0; j < grid.n; ++j) {
      double mean = m1[j] / R;
      double var = std::max(0.0, (m2[j] - R * mean * mean) / (R - 1));
      double se = std::sqrt(var / R);
      double dev = std::fabs(mean - target[j]);
      sup_dev = std::max(sup_dev, dev);
      if (se > 0.0) max_z = std::max(max_z, dev / se);
      os << format_full(grid.x(j)) << "," << format_full(mean) << ","
         << format_full(target[j]) << "," << format_full(se) << "\n";
    }
    iodetail::finish(os, join(dir, "mean_final.csv"));
    man->outputs.push_back("mean_final.csv");
    (*summary)["mean_heat_sup_dev"] = sup_dev;
    (*summary)["mean_heat_max_z"] = max_z;
  }
}

// ---- krein-rutman -------------------------------------------------------

inline void run_krein_rutman(const ExperimentConfig& cfg, const std::string& dir, int jobs,
                             RunManifest* man, json* summary) {
  if (cfg.noise_kind() == NoiseKind::White && cfg.spu > 512)
    throw ValidationError("krein-rutman with white noise needs spu <= 512 (kernel cost)");
  int R = cfg.replicates;
  struct KrOut {
    KreinRutmanResult kr;
    double eigenvalue = 0.0;
  };
  std::vector<KrOut> reps(R);
  parallel_for(R, jobs, [&](int r) {
    CocycleSpec spec = cocycle_spec(cfg, man->replicate_seeds[r]);
    PositiveKernel K = spec.kind == NoiseKind::Zero
                           ? heat_kernel_matrix(spec.grid, spec.unit_time)
                           : kernel_matrix(Cocycle(spec, 0, 2), 0, 1.0);
    reps[r].kr = static_krein_rutman(K, cfg.tol);
    // Rayleigh-style eigenvalue: mass of K u* for the unit-mass fixed point.
    GridFunction img(K.grid, 0.0);
    for (int i = 0; i < K.grid.n; ++i) {
      double s = 0.0;
      for (int j = 0; j < K.grid.n; ++j) s += K.at(i, j) * reps[r].kr.fixed_point[j];
      img[i] = s * K.grid.dx;
    }
    reps[r].eigenvalue = integrate(img);
  });
  json per = json::array();
  for (int r = 0; r < R; ++r) {
    std::string fp = numbered("fixed_point", r, R, ".csv");
    write_field_csv(join(dir, fp), reps[r].kr.fixed_point.field());
    man->outputs.push_back(fp);
    json jr;
    jr["seed"] = man->replicate_seeds[r];
    jr["iterations"] = reps[r].kr.iterations;
    jr["final_increment"] = reps[r].kr.final_increment;
    jr["eigenvalue"] = reps[r].eigenvalue;
    per.push_back(jr);
  }
  (*summary)["replicates"] = per;
}

// ---- constants ----------------------------------------------------------

inline void run_constants(const ExperimentConfig& cfg, const std::string& dir, int jobs,
                          RunManifest* man, json* summary) {
  int R = cfg.replicates;
  std::vector<ConstantsSeries> reps(R);
  parallel_for(R, jobs, [&](int r) {
    CocycleSpec spec = cocycle_spec(cfg, man->replicate_seeds[r]);
    Cocycle c(spec, 0, cfg.horizon + 1);
    GridFunction a = positive_initial(cfg.initial_profile(), spec.grid, "u0");
    GridFunction b = positive_initial(cfg.initial_profile_b(), spec.grid, "u0_b");
    reps[r] = track_constants(c, a, b, cfg.horizon);
  });
  json per = json::array();
  for (int r = 0; r < R; ++r) {
    const ConstantsSeries& s = reps[r];
    std::string name = numbered("constants", r, R, ".csv");
    auto os = iodetail::open_out(join(dir, name));
    os << "n,c,rhs,ode_residual\n";
    for (size_t i = 0; i < s.c.size(); ++i) {
      os << format_full(s.times_units[i]) << "," << format_full(s.c[i]) << ","
         << format_full(s.rhs[i]) << ",";
      if (i >= 1 && i - 1 < s.ode_residual.size())
        os << format_full(s.ode_residual[i - 1]);
      else
        os << "nan";
      os << "\n";
    }
    iodetail::finish(os, join(dir, name));
    man->outputs.push_back(name);
    json jr;
    jr["seed"] = man->replicate_seeds[r];
    jr["c_final"] = s.c_final;
    jr["decay_fit"] = fit_json(s.decay_fit, s.decay_fit_valid);
    per.push_back(jr);
  }
  (*summary)["replicates"] = per;
}

// ---- noise-check ----------------------------------------------------------

inline void run_noise_check(const ExperimentConfig& cfg, const std::string& dir, int /*jobs*/,
                            RunManifest* man, json* summary) {
  double dt = cfg.unit_time / cfg.spu;
  if (cfg.noise_kind() == NoiseKind::Fractional) {
    // Variance law over the horizon.
    int probes = 8;
    int64_t steps = static_cast<int64_t>(cfg.horizon) * cfg.spu;
    std::vector<int64_t> at(probes);
    for (int k = 0; k < probes; ++k) at[k] = (k + 1) * steps / probes;
    std::vector<double> m1(probes, 0.0), m2(probes, 0.0);
    for (int r = 0; r < cfg.ensemble; ++r) {
      FbmPath p = FbmPath::materialize(cfg.H, dt, cfg.spu, replicate_seed(cfg.seed, r), 0,
                                       cfg.horizon);
      for (int k = 0; k < probes; ++k) {
        double v = p.beta(at[k]);
        m1[k] += v;
        m2[k] += v * v;
      }
    }
    {
      auto os = iodetail::open_out(join(dir, "fbm_var.csv"));
      os << "t,emp_var,target,se\n";
      for (int k = 0; k < probes; ++k) {
        double t = at[k] * dt;
        double mean = m1[k] / cfg.ensemble;
        double var = (m2[k] - cfg.ensemble * mean * mean) / (cfg.ensemble - 1);
        double se = var * std::sqrt(2.0 / (cfg.ensemble - 1));
        os << format_full(t) << "," << format_full(var) << ","
           << format_full(std::pow(t, 2.0 * cfg.H)) << "," << format_full(se) << "\n";
      }
      iodetail::finish(os, join(dir, "fbm_var.csv"));
      man->outputs.push_back("fbm_var.csv");
    }
    // Mixing probe: unit-window increments at growing shifts.
    int Z = std::min(cfg.horizon, 8);
    std::vector<FbmProbeTest> tests;
    for (int z = 0; z <= Z; ++z) tests.push_back({[](double) { return 1.0; }, z});
    CovarianceProbe probe =
        covariance_probe_fbm(cfg.H, dt, cfg.spu, 1, derive_key(cfg.seed, 0x313dull),
                             tests, cfg.ensemble);
    {
      auto os = iodetail::open_out(join(dir, "mixing.csv"));
      os << "z,emp_cov,se,target\n";
      double T = cfg.unit_time;
      for (int z = 0; z <= Z; ++z) {
        double target =
            0.5 * std::pow(T, 2.0 * cfg.H) *
            (std::pow(z + 1.0, 2.0 * cfg.H) - 2.0 * std::pow(static_cast<double>(z), 2.0 * cfg.H) +
             std::pow(std::fabs(z - 1.0), 2.0 * cfg.H));
        os << z << "," << format_full(probe.cov_at(0, z)) << "," << format_full(probe.se_at(0, z))
           << "," << format_full(target) << "\n";
      }
      iodetail::finish(os, join(dir, "mixing.csv"));
      man->outputs.push_back("mixing.csv");
    }
    FbmPath sample = FbmPath::materialize(cfg.H, dt, cfg.spu, cfg.seed, 0, cfg.horizon);
    write_fbm_csv(join(dir, "fbm_path.csv"), sample, static_cast<int64_t>(cfg.horizon) * cfg.spu);
    man->outputs.push_back("fbm_path.csv");
    man->outputs.push_back("fbm_path.csv.meta");
    (*summary)["dense_fallback"] = sample.used_dense();
  } else {
    // White-noise pairings against three separated test functions.
    TorusGrid grid(cfg.n);
    double T = cfg.horizon * cfg.unit_time;
    auto bump = [T](double t) { return 4.0 * (t / T) * (1.0 - t / T); };
    std::vector<std::function<double(double, double)>> tests = {
        [bump](double t, double x) { return bump(t) * std::sin(2.0 * pi * x); },
        [bump](double t, double x) { return bump(t) * std::cos(2.0 * pi * x); },
        [bump](double t, double) { return bump(t); }};
    CovarianceProbe probe = covariance_probe_white(grid, dt, cfg.spu,
                                                   cfg.horizon * cfg.spu, cfg.seed, tests,
                                                   cfg.ensemble);
    auto os = iodetail::open_out(join(dir, "white_cov.csv"));
    os << "i,j,emp_cov,se\n";
    for (int i = 0; i < probe.dim; ++i)
      for (int j = 0; j < probe.dim; ++j)
        os << i << "," << j << "," << format_full(probe.cov_at(i, j)) << ","
           << format_full(probe.se_at(i, j)) << "\n";
    iodetail::finish(os, join(dir, "white_cov.csv"));
    man->outputs.push_back("white_cov.csv");
  }
}

// ---- regularity -----------------------------------------------------------

inline GridFunction random_trig(const TorusGrid& grid, uint64_t key, int64_t idx, int degree,
                                double decay) {
  GridFunction f(grid, gaussian_at(key, idx, 0));
  for (int k = 1; k <= degree; ++k) {
    double a = gaussian_at(key, idx, 2 * k) * std::pow(k, -decay);
    double b = gaussian_at(key, idx, 2 * k + 1) * std::pow(k, -decay);
    for (int j = 0; j < grid.n; ++j) {
      double th = 2.0 * pi * k * grid.x(j);
      f[j] += a * std::cos(th) + b * std::sin(th);
    }
  }
  return f;
}

inline GridFunction white_slice(const TorusGrid& grid, uint64_t key, int64_t idx) {
  GridFunction f(grid, 0.0);
  double s = 1.0 / std::sqrt(grid.dx);
  for (int j = 0; j < grid.n; ++j) f[j] = s * gaussian_at(key, idx, j);
  return f;
}

inline void run_regularity(const ExperimentConfig& cfg, const std::string& dir, int /*jobs*/,
                           RunManifest* man, json* summary) {
  TorusGrid grid(cfg.n);
  uint64_t key = derive_key(cfg.seed, 0x4E6ull);

  {  // interpolation inequality sweep
    auto os = iodetail::open_out(join(dir, "interp.csv"));
    os << "idx,lhs,rhs\n";
    int violations = 0;
    for (int i = 0; i < 100; ++i) {
      GridFunction f = random_trig(grid, key, i, 6, 1.0);
      auto [lhs, rhs] = interpolation_check(f, 0.8, 0.5);
      if (lhs > rhs * (1.0 + 1e-12)) ++violations;
      os << i << "," << format_full(lhs) << "," << format_full(rhs) << "\n";
    }
    iodetail::finish(os, join(dir, "interp.csv"));
    man->outputs.push_back("interp.csv");
    (*summary)["interpolation_violations"] = violations;
  }
  {  // Schauder ratio family
    // Fixed amplitude spectrum c_k = (1+k)^{-1/2} with random signs: every
    // member has the same regularity, so the ratio should be flat across the
    // family. Mixing in rougher inputs would measure input diversity instead.
    auto os = iodetail::open_out(join(dir, "schauder.csv"));
    os << "idx,max_ratio,argmax_t\n";
    uint64_t skey = derive_key(key, 1);
    double lo = 1e300, hi = 0.0;
    for (int i = 0; i < 50; ++i) {
      GridFunction f(grid, 0.0);
      for (int k = 1; k <= 64; ++k) {
        double c = std::pow(1.0 + k, -0.5);
        double a = gaussian_at(skey, i, 2 * k) < 0.0 ? -c : c;
        double b = gaussian_at(skey, i, 2 * k + 1) < 0.0 ? -c : c;
        for (int j = 0; j < grid.n; ++j) {
          double th = 2.0 * pi * k * grid.x(j);
          f[j] += a * std::cos(th) + b * std::sin(th);
        }
      }
      SchauderResult sr = schauder_check(f, -0.6, 1.5, 1.0);
      lo = std::min(lo, sr.max_ratio);
      hi = std::max(hi, sr.max_ratio);
      os << i << "," << format_full(sr.max_ratio) << "," << format_full(sr.argmax_t) << "\n";
    }
    iodetail::finish(os, join(dir, "schauder.csv"));
    man->outputs.push_back("schauder.csv");
    (*summary)["schauder_spread"] = hi / lo;
  }
  {  // Dirac distance scaling. The probe grid is fixed at 512 and the
     // separations start at 2^-3: larger ones saturate the norm instead of
     // scaling, and 1/sep must stay well inside the resolved frequencies.
    auto os = iodetail::open_out(join(dir, "dirac.csv"));
    os << "separation,distance\n";
    std::vector<double> xs, ys;
    double gamma = 0.5;
    const TorusGrid dirac_grid(512);
    for (int k = 3; k <= 7; ++k) {
      double sep = std::ldexp(1.0, -k);
      double d = dirac_distance(0.0, sep, gamma, dirac_grid);
      os << format_full(sep) << "," << format_full(d) << "\n";
      xs.push_back(std::log(sep));
      ys.push_back(std::log(d));
    }
    iodetail::finish(os, join(dir, "dirac.csv"));
    man->outputs.push_back("dirac.csv");
    LineFit f = fit_line(xs, ys);
    (*summary)["dirac_exponent"] = f.slope;
    (*summary)["dirac_gamma"] = gamma;
  }
  {  // Besov profile of one rough slice
    BesovProfile bp = besov_block_norms(white_slice(grid, derive_key(key, 3), 0), Lp::L2, -0.5);
    write_besov_csv(join(dir, "besov.csv"), bp);
    man->outputs.push_back("besov.csv");
  }
  {  // Space-time white-noise slab: E ||Delta_j xi||_{L^2}^2 doubles per block
     // in each of the two frequency directions, so the log2 energies against j
     // fit a line of slope 2. The slab is 512x512 so block 6 (support radius
     // 170.7) is untruncated at the Nyquist frequency 256.
    const int rows = 512, cols = 512;
    const int ensemble = cfg.ensemble;
    uint64_t wkey = derive_key(key, 4);
    std::vector<double> energy(5, 0.0);  // j = 2..6
    for (int e = 0; e < ensemble; ++e) {
      SlabField s;
      s.rows = rows;
      s.cols = cols;
      s.dt = 1.0 / rows;
      s.dx = 1.0 / cols;
      s.v.resize(static_cast<size_t>(rows) * cols);
      double sigma = 1.0 / std::sqrt(s.dt * s.dx);
      for (size_t i = 0; i < s.v.size(); ++i)
        s.v[i] = sigma * gaussian_at(wkey, e, static_cast<int64_t>(i));
      BesovProfile prof = besov_block_norms_slab(s, 0.0);
      for (int j = 2; j <= 6; ++j) {
        double nj = prof.norm_at(j);
        energy[j - 2] += nj * nj / ensemble;
      }
    }
    auto os = iodetail::open_out(join(dir, "slab.csv"));
    os << "j,log2_mean_energy\n";
    std::vector<double> xs, ys;
    for (int j = 2; j <= 6; ++j) {
      xs.push_back(j);
      ys.push_back(std::log2(energy[j - 2]));
      os << j << "," << format_full(ys.back()) << "\n";
    }
    iodetail::finish(os, join(dir, "slab.csv"));
    man->outputs.push_back("slab.csv");
    LineFit f = fit_line(xs, ys);
    (*summary)["slab_exponent"] = f.slope;
    (*summary)["slab_r2"] = f.r_squared;
  }
}

}  // namespace expdetail

inline void write_manifest(const std::string& dir, const RunManifest& man) {
  expdetail::json j;
  j["version"] = man.version;
  j["config_hash"] = man.config_hash;
  j["config"] = man.config_text;
  j["replicate_seeds"] = man.replicate_seeds;
  j["wall_seconds"] = man.wall_seconds;  // not part of the determinism contract
  j["outputs"] = man.outputs;
  auto os = iodetail::open_out(expdetail::join(dir, "manifest.json"));
  os << j.dump(2) << "\n";
  iodetail::finish(os, expdetail::join(dir, "manifest.json"));
}

inline RunManifest read_manifest(const std::string& dir) {
  expdetail::json j = expdetail::json::parse(read_text_file(expdetail::join(dir, "manifest.json")));
  RunManifest man;
  man.version = j.value("version", "");
  man.config_hash = j.value("config_hash", 0ull);
  man.config_text = j.value("config", "");
  man.replicate_seeds = j.value("replicate_seeds", std::vector<uint64_t>{});
  man.wall_seconds = j.value("wall_seconds", 0.0);
  man.outputs = j.value("outputs", std::vector<std::string>{});
  return man;
}

inline RunManifest run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
  auto t0 = std::chrono::steady_clock::now();
  RunManifest man;
  man.config_text = cfg.serialize();
  man.config_hash = cfg.hash();
  man.version = artifact_version;
  for (int r = 0; r < cfg.replicates; ++r)
    man.replicate_seeds.push_back(replicate_seed(cfg.seed, static_cast<uint64_t>(r)));
  const std::string dir = cfg.out;
  expdetail::json summary;
  summary["kind"] = cfg.kind;
  summary["config_hash"] = man.config_hash;
  summary["parameters"] = {{"n", cfg.n},
                           {"spu", cfg.spu},
                           {"unit_time", cfg.unit_time},
                           {"horizon", cfg.horizon},
                           {"noise", cfg.noise_type},
                           {"H", cfg.H},
                           {"V", cfg.V},
                           {"seed", cfg.seed},
                           {"replicates", cfg.replicates}};

  {  // canonical config echo
    auto os = iodetail::open_out(expdetail::join(dir, "config.ini"));
    os << man.config_text;
    iodetail::finish(os, expdetail::join(dir, "config.ini"));
    man.outputs.push_back("config.ini");
  }

  if (cfg.kind == "sync-forward")
    expdetail::run_sync_forward(cfg, dir, jobs, &man, &summary);
  else if (cfg.kind == "sync-pullback")
    expdetail::run_sync_pullback(cfg, dir, jobs, &man, &summary);
  else if (cfg.kind == "lyapunov")
    expdetail::run_lyapunov(cfg, dir, jobs, &man, &summary);
  else if (cfg.kind == "she")
    expdetail::run_she(cfg, dir, jobs, &man, &summary);
  else if (cfg.kind == "krein-rutman")
    expdetail::run_krein_rutman(cfg, dir, jobs, &man, &summary);
  else if (cfg.kind == "constants")
    expdetail::run_constants(cfg, dir, jobs, &man, &summary);
  else if (cfg.kind == "noise-check")
    expdetail::run_noise_check(cfg, dir, jobs, &man, &summary);
  else if (cfg.kind == "regularity")
    expdetail::run_regularity(cfg, dir, jobs, &man, &summary);
  else
    throw ValidationError("kind '" + cfg.kind + "' is not an experiment kind");

  {
    auto os = iodetail::open_out(expdetail::join(dir, "summary.json"));
    os << summary.dump(2) << "\n";
    iodetail::finish(os, expdetail::join(dir, "summary.json"));
    man.outputs.push_back("summary.json");
  }
  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, man);
  return man;
}

// ---------------------------------------------------------------------------
// Plot data: two-column gnuplot files derived from a finished run.

namespace expdetail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::istringstream is(read_text_file(path));
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

inline int column_of(const CsvTable& t, const std::string& name) {
  for (size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace expdetail

inline std::vector<std::string> emit_plotdata(const std::string& dir) {
  RunManifest man = read_manifest(dir);
  std::vector<std::string> made;
  auto stem_of = [](const std::string& name) { return name.substr(0, name.rfind('.')); };
  for (const auto& name : man.outputs) {
    if (name.size() < 4 || name.substr(name.size() - 4) != ".csv") continue;
    expdetail::CsvTable t = expdetail::read_csv(expdetail::join(dir, name));
    std::string stem = stem_of(name);
    auto series_plot = [&](const std::string& xcol, const std::string& ycol,
                           const std::string& suffix, bool with_fit) {
      int xi = expdetail::column_of(t, xcol), yi = expdetail::column_of(t, ycol);
      if (xi < 0 || yi < 0) return;
      std::vector<double> xs, ys;
      for (const auto& row : t.rows) {
        if (row[yi] == "nan") continue;
        xs.push_back(std::stod(row[xi]));
        ys.push_back(std::stod(row[yi]));
      }
      if (xs.empty()) return;
      std::string dat = stem + suffix + ".dat";
      write_plot_xy(expdetail::join(dir, dat), xs, ys);
      made.push_back(dat);
      if (with_fit && xs.size() >= 3) {
        size_t from = xs.size() / 2;
        std::vector<double> tx(xs.begin() + from, xs.end());
        std::vector<double> ty(ys.begin() + from, ys.end());
        if (tx.size() >= 2) {
          LineFit f = fit_line(tx, ty);
          std::string fit = stem + "_fit.dat";
          write_plot_xy(expdetail::join(dir, fit), {tx.front(), tx.back()},
                        {f.intercept + f.slope * tx.front(), f.intercept + f.slope * tx.back()});
          made.push_back(fit);
        }
      }
    };
    if (name.rfind("sync", 0) == 0)
      series_plot("n", "log_dH", "_logdH", true);
    else if (name.rfind("pullback", 0) == 0)
      series_plot("n", "log_cauchy_dH", "_logdH", true);
    else if (name.rfind("samples", 0) == 0)
      series_plot("i", "running_average", "_running", false);
    else if (name.rfind("constants", 0) == 0)
      series_plot("n", "c", "_c", false);
    else if (name.rfind("fbm_var", 0) == 0)
      series_plot("t", "emp_var", "", false);
  }
  if (made.empty()) throw MissingOutput("no plottable outputs in " + dir);
  return made;
}

}  // namespace kpzsync

#endif

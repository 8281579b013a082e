#ifndef KPZSYNC_NOISE_HPP
#define KPZSYNC_NOISE_HPP

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "kpzsync/errors.hpp"
#include "kpzsync/fft.hpp"
#include "kpzsync/grid.hpp"
#include "kpzsync/rng.hpp"

// Noise inputs for the stochastic heat equation.
//
// Two flavours:
//  * space-time white noise, one independent N(0, 1/(dt dx)) per lattice cell,
//    addressed by (seed, absolute step, cell) through the counter RNG, so the
//    time shift theta^z is a pure re-indexing;
//  * fractional noise eta(t,x) = xi^H(t) V(x): a single fBm path (H > 1/2)
//    times a smooth spatial profile. Paths come from circulant embedding of
//    the fractional Gaussian noise autocovariance (exact in law), with a dense
//    Cholesky fallback should the embedding ever fail to be PSD.
//
// Time bookkeeping: one shift unit = spu solver steps of length dt. Windows
// are materialized once per experiment; shifted views share the increment
// array bitwise, which is what the cocycle tests rely on.

namespace kpzsync {

// ---------------------------------------------------------------------------
// Spatial profile V(x): a small trig polynomial, the test class every
// experiment draws its forcing and initial data from.

struct SpatialProfile {
  struct Mode {
    int k = 0;
    double cos_amp = 0.0;
    double sin_amp = 0.0;
  };

  double constant = 0.0;
  std::vector<Mode> modes;

  bool is_zero() const {
    if (constant != 0.0) return false;
    for (const auto& m : modes)
      if (m.cos_amp != 0.0 || m.sin_amp != 0.0) return false;
    return true;
  }

  GridFunction sample(const TorusGrid& grid) const {
    GridFunction f(grid, constant);
    for (const auto& m : modes)
      for (int j = 0; j < grid.n; ++j) {
        double th = 2.0 * pi * m.k * grid.x(j);
        f[j] += m.cos_amp * std::cos(th) + m.sin_amp * std::sin(th);
      }
    return f;
  }

  /// Canonical text form, e.g. "const:0.5,sin:1:1,cos:2:0.25". Empty = zero.
  std::string describe() const {
    std::ostringstream os;
    bool first = true;
    auto sep = [&] {
      if (!first) os << ",";
      first = false;
    };
    if (constant != 0.0) {
      sep();
      os << "const:" << constant;
    }
    for (const auto& m : modes) {
      if (m.cos_amp != 0.0) {
        sep();
        os << "cos:" << m.k << ":" << m.cos_amp;
      }
      if (m.sin_amp != 0.0) {
        sep();
        os << "sin:" << m.k << ":" << m.sin_amp;
      }
    }
    if (first) os << "zero";
    return os.str();
  }

  static SpatialProfile parse(const std::string& text);
  static SpatialProfile single_sin(int k, double amp) {
    SpatialProfile p;
    p.modes.push_back({k, 0.0, amp});
    return p;
  }
  static SpatialProfile constant_profile(double a) {
    SpatialProfile p;
    p.constant = a;
    return p;
  }
};

inline SpatialProfile SpatialProfile::parse(const std::string& text) {
  SpatialProfile p;
  if (text.empty() || text == "zero") return p;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    std::istringstream ts(tok);
    std::string kind, a, b;
    std::getline(ts, kind, ':');
    std::getline(ts, a, ':');
    std::getline(ts, b, ':');
    try {
      if (kind == "const") {
        p.constant += std::stod(a);
      } else if (kind == "cos" || kind == "sin") {
        int k = std::stoi(a);
        double amp = std::stod(b);
        if (k < 0) throw std::invalid_argument("negative mode");
        Mode* m = nullptr;
        for (auto& mm : p.modes)
          if (mm.k == k) m = &mm;
        if (!m) {
          p.modes.push_back({k, 0.0, 0.0});
          m = &p.modes.back();
        }
        if (kind == "cos")
          m->cos_amp += amp;
        else
          m->sin_amp += amp;
      } else {
        throw std::invalid_argument("unknown token");
      }
    } catch (const std::exception&) {
      throw ParseError("cannot parse profile token '" + tok +
                       "' (expected const:a, cos:k:a or sin:k:a)");
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Space-time white noise slab.

class WhiteNoiseField {
 public:
  WhiteNoiseField() = default;

  WhiteNoiseField(TorusGrid grid, double dt, int spu, uint64_t seed, int64_t origin_units,
                  int steps)
      : grid_(grid), dt_(dt), spu_(spu), seed_(seed), origin_(origin_units), steps_(steps) {
    if (!(dt > 0.0) || spu < 1) throw ValidationError("white noise needs dt > 0 and spu >= 1");
    key_ = derive_key(seed, 0x77AF7Eull);
    sigma_ = 1.0 / std::sqrt(dt_ * grid_.dx);
  }

  /// xi at slab step m (0-based within the window) and cell i.
  double xi(int m, int i) const {
    return sigma_ * gaussian_at(key_, origin_ * spu_ + m, i);
  }

  /// theta^z: same stream, window start moved by z units. Pure re-indexing.
  WhiteNoiseField shifted(int64_t z) const {
    WhiteNoiseField w(*this);
    w.origin_ += z;
    return w;
  }

  const TorusGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  int spu() const { return spu_; }
  int steps() const { return steps_; }
  int64_t origin() const { return origin_; }
  uint64_t seed() const { return seed_; }
  double cell_sigma() const { return sigma_; }

 private:
  TorusGrid grid_;
  double dt_ = 0.0;
  int spu_ = 0;
  uint64_t seed_ = 0;
  uint64_t key_ = 0;
  int64_t origin_ = 0;
  int steps_ = 0;
  double sigma_ = 0.0;
};

/// Module-level sampler (shift unit = 1 time unit, so 1/dt must be integral).
inline WhiteNoiseField sample_white(TorusGrid grid, double dt, int steps, int64_t origin,
                                    uint64_t seed) {
  double spu_real = 1.0 / dt;
  int spu = static_cast<int>(std::llround(spu_real));
  if (spu < 1 || std::fabs(spu_real - spu) > 1e-9 * spu_real)
    throw ValidationError("1/dt must be a whole number of steps per unit, got dt = " +
                          std::to_string(dt));
  return WhiteNoiseField(grid, dt, spu, seed, origin, steps);
}

// ---------------------------------------------------------------------------
// Fractional Gaussian noise increments via circulant embedding.

enum class FgnMethod { Auto, Embedding, Dense };

namespace noisedetail {

/// fGn autocovariance at lag k for increments over steps of length dt.
inline double fgn_rho(double H, double dt, int64_t k) {
  double a = std::pow(static_cast<double>(std::llabs(k) + 1), 2.0 * H);
  double b = std::pow(static_cast<double>(std::llabs(k)), 2.0 * H);
  double c = (k == 0) ? 1.0 : std::pow(static_cast<double>(std::llabs(k) - 1), 2.0 * H);
  return 0.5 * std::pow(dt, 2.0 * H) * (a - 2.0 * b + c);
}

/// Eigenvalues of the circulant embedding (size 2M) of the order-M Toeplitz
/// fGn covariance. Exposed for tests.
inline std::vector<double> fgn_embedding_eigenvalues(double H, double dt, int M) {
  int L = 2 * M;
  std::vector<std::complex<double>> c(L);
  for (int j = 0; j <= M; ++j) c[j] = fgn_rho(H, dt, j);
  for (int j = 1; j < M; ++j) c[L - j] = c[j];
  cfft_inplace(c, FFTW_FORWARD);
  std::vector<double> lam(L);
  for (int j = 0; j < L; ++j) lam[j] = c[j].real();
  return lam;
}

/// Exact-in-law stationary Gaussian sequence with the fGn covariance, keyed
/// by a counter stream: deterministic given (key, M).
inline std::vector<double> fgn_by_embedding(double H, double dt, int M, uint64_t key,
                                            double psd_slack) {
  std::vector<double> lam = fgn_embedding_eigenvalues(H, dt, M);
  int L = 2 * M;
  double lam_max = 0.0, lam_min = 0.0;
  for (double l : lam) {
    lam_max = std::max(lam_max, l);
    lam_min = std::min(lam_min, l);
  }
  if (lam_min < -psd_slack * lam_max)
    throw EmbeddingNotPSD("circulant embedding has negative eigenvalue " +
                          std::to_string(lam_min));
  std::vector<std::complex<double>> a(L);
  const double inv_sqrt2 = 0.70710678118654752440;
  a[0] = std::sqrt(std::max(lam[0], 0.0)) * gaussian_at(key, 0, 0);
  a[M] = std::sqrt(std::max(lam[M], 0.0)) * gaussian_at(key, M, 0);
  for (int k = 1; k < M; ++k) {
    double s = std::sqrt(std::max(lam[k], 0.0)) * inv_sqrt2;
    std::complex<double> w(gaussian_at(key, k, 0), gaussian_at(key, k, 1));
    a[k] = s * w;
    a[L - k] = s * std::conj(w);
  }
  cfft_inplace(a, FFTW_BACKWARD);
  double scale = 1.0 / std::sqrt(static_cast<double>(L));
  std::vector<double> out(M);
  for (int j = 0; j < M; ++j) out[j] = a[j].real() * scale;
  return out;
}

/// Dense fallback: Cholesky of the Toeplitz covariance. O(M^3), exact.
inline std::vector<double> fgn_by_dense(double H, double dt, int M, uint64_t key) {
  Eigen::MatrixXd S(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) S(i, j) = fgn_rho(H, dt, i - j);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw EmbeddingNotPSD("dense covariance factorization failed");
  Eigen::VectorXd z(M);
  for (int j = 0; j < M; ++j) z(j) = gaussian_at(key, j, 2);
  Eigen::VectorXd d = llt.matrixL() * z;
  return std::vector<double>(d.data(), d.data() + M);
}

}  // namespace noisedetail

// ---------------------------------------------------------------------------
// fBm path over a materialized window.

class FbmPath {
 public:
  FbmPath() = default;

  /// Materialize the fGn increments on the window [win_lo, win_hi] (in shift
  /// units, spu steps each). The whole window is generated at once; shifted
  /// views share it. Reproducible from (seed, window, resolution).
  static FbmPath materialize(double H, double dt, int spu, uint64_t seed, int64_t win_lo,
                             int64_t win_hi, FgnMethod method = FgnMethod::Auto,
                             double psd_slack = 1e-12) {
    if (!(H > 0.5) || !(H < 1.0))
      throw ValidationError("H must be in (1/2, 1), got " + std::to_string(H));
    if (!(dt > 0.0) || spu < 1) throw ValidationError("fbm needs dt > 0 and spu >= 1");
    if (win_hi <= win_lo) throw ValidationError("empty fbm window");
    int64_t M64 = (win_hi - win_lo) * spu;
    if (M64 > (1 << 24)) throw ValidationError("fbm window too large");
    int M = static_cast<int>(M64);
    uint64_t key = derive_key(seed ^ mix64(static_cast<uint64_t>(win_lo) * 0x9E1Bull + win_hi),
                              0xFB31ull);
    FbmPath p;
    p.H_ = H;
    p.dt_ = dt;
    p.spu_ = spu;
    p.seed_ = seed;
    p.win_lo_ = win_lo;
    p.win_hi_ = win_hi;
    // The fresh view sits at absolute time zero when the window covers it, so
    // beta(0) = 0 refers to the shift origin; otherwise start at the window
    // edge and let shifted() move the view.
    p.origin_ = (win_lo <= 0 && 0 <= win_hi) ? 0 : win_lo;
    std::vector<double> incr;
    if (method == FgnMethod::Dense) {
      incr = noisedetail::fgn_by_dense(H, dt, M, key);
      p.used_dense_ = true;
    } else {
      try {
        incr = noisedetail::fgn_by_embedding(H, dt, M, key, psd_slack);
      } catch (const EmbeddingNotPSD&) {
        if (method == FgnMethod::Embedding) throw;
        incr = noisedetail::fgn_by_dense(H, dt, M, key);
        p.used_dense_ = true;
      }
    }
    std::vector<double> cum(M + 1, 0.0);
    for (int j = 0; j < M; ++j) cum[j + 1] = cum[j] + incr[j];
    p.incr_ = std::make_shared<const std::vector<double>>(std::move(incr));
    p.cum_ = std::make_shared<const std::vector<double>>(std::move(cum));
    return p;
  }

  double H() const { return H_; }
  double dt() const { return dt_; }
  int spu() const { return spu_; }
  int64_t origin() const { return origin_; }
  int64_t window_lo() const { return win_lo_; }
  int64_t window_hi() const { return win_hi_; }
  uint64_t seed() const { return seed_; }
  bool used_dense() const { return used_dense_; }

  /// Steps available forward of the current origin.
  int64_t steps_available() const { return (win_hi_ - origin_) * spu_; }

  /// fGn increment of step m (m counts solver steps from the origin; negative
  /// m reaches back inside the window). Shared bitwise between shifted views.
  double increment(int64_t m) const {
    int64_t idx = (origin_ - win_lo_) * spu_ + m;
    if (idx < 0 || idx >= static_cast<int64_t>(incr_->size()))
      throw WindowNotMaterialized("fbm increment outside materialized window");
    return (*incr_)[idx];
  }

  /// beta at local step m, re-based so beta(0) = 0 exactly.
  double beta(int64_t m) const {
    int64_t base = (origin_ - win_lo_) * spu_;
    int64_t idx = base + m;
    if (idx < 0 || idx >= static_cast<int64_t>(cum_->size()))
      throw WindowNotMaterialized("fbm value outside materialized window");
    return (*cum_)[idx] - (*cum_)[base];
  }

  /// theta^z: origin moves z units; the underlying increments are shared.
  FbmPath shifted(int64_t z) const {
    int64_t no = origin_ + z;
    if (no < win_lo_ || no > win_hi_)
      throw WindowNotMaterialized("shift target " + std::to_string(no) +
                                  " outside window [" + std::to_string(win_lo_) + ", " +
                                  std::to_string(win_hi_) + "]");
    FbmPath p(*this);
    p.origin_ = no;
    return p;
  }

 private:
  double H_ = 0.75;
  double dt_ = 0.0;
  int spu_ = 0;
  uint64_t seed_ = 0;
  int64_t win_lo_ = 0, win_hi_ = 0, origin_ = 0;
  bool used_dense_ = false;
  std::shared_ptr<const std::vector<double>> incr_;
  std::shared_ptr<const std::vector<double>> cum_;
};

/// Module-level sampler: window [origin, origin + ceil(steps*dt)] at unit
/// shift granularity (1/dt integral, as for sample_white).
inline FbmPath sample_fbm(double H, double dt, int steps, int64_t origin, uint64_t seed,
                          FgnMethod method = FgnMethod::Auto) {
  double spu_real = 1.0 / dt;
  int spu = static_cast<int>(std::llround(spu_real));
  if (spu < 1 || std::fabs(spu_real - spu) > 1e-9 * spu_real)
    throw ValidationError("1/dt must be a whole number of steps per unit, got dt = " +
                          std::to_string(dt));
  int64_t units = (steps + spu - 1) / spu;
  if (units < 1) units = 1;
  return FbmPath::materialize(H, dt, spu, seed, origin, origin + units, method);
}

inline WhiteNoiseField shift(const WhiteNoiseField& w, int64_t z) { return w.shifted(z); }
inline FbmPath shift(const FbmPath& b, int64_t z) { return b.shifted(z); }

// ---------------------------------------------------------------------------
// Covariance probe: empirical covariance of noise pairings over an ensemble,
// with Gaussian standard errors. The spectral-formula oracle lives in the
// test suite; this is the measurement side.

struct CovarianceProbe {
  int dim = 0;
  int ensemble = 0;
  std::vector<double> cov;  // row-major dim x dim
  std::vector<double> se;

  double cov_at(int i, int j) const { return cov[static_cast<size_t>(i) * dim + j]; }
  double se_at(int i, int j) const { return se[static_cast<size_t>(i) * dim + j]; }
};

namespace noisedetail {

inline CovarianceProbe covariance_from_samples(const std::vector<std::vector<double>>& p) {
  int R = static_cast<int>(p.size());
  int d = static_cast<int>(p.front().size());
  CovarianceProbe out;
  out.dim = d;
  out.ensemble = R;
  std::vector<double> mean(d, 0.0);
  for (const auto& row : p)
    for (int i = 0; i < d; ++i) mean[i] += row[i];
  for (int i = 0; i < d; ++i) mean[i] /= R;
  out.cov.assign(static_cast<size_t>(d) * d, 0.0);
  for (const auto& row : p)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        out.cov[static_cast<size_t>(i) * d + j] += (row[i] - mean[i]) * (row[j] - mean[j]);
  for (auto& c : out.cov) c /= (R - 1);
  out.se.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double cii = out.cov[static_cast<size_t>(i) * d + i];
      double cjj = out.cov[static_cast<size_t>(j) * d + j];
      double cij = out.cov[static_cast<size_t>(i) * d + j];
      out.se[static_cast<size_t>(i) * d + j] = std::sqrt((cii * cjj + cij * cij) / (R - 1));
    }
  return out;
}

}  // namespace noisedetail

inline uint64_t replicate_seed(uint64_t seed, uint64_t idx) {
  return derive_key(seed, 0x5EED0000ull + idx);
}

/// White-noise pairings <xi, phi> = sum phi(t_m, x_i) xi(m,i) dt dx over the
/// slab [0, steps*dt) x torus, one independent field per ensemble member.
inline CovarianceProbe covariance_probe_white(
    TorusGrid grid, double dt, int spu, int steps, uint64_t seed,
    const std::vector<std::function<double(double, double)>>& tests, int ensemble) {
  if (ensemble < 2 || tests.empty())
    throw ValidationError("covariance probe needs >= 2 replicates and >= 1 test function");
  int d = static_cast<int>(tests.size());
  // Tabulate the test functions once.
  std::vector<std::vector<double>> tab(d, std::vector<double>(static_cast<size_t>(steps) * grid.n));
  for (int q = 0; q < d; ++q)
    for (int m = 0; m < steps; ++m)
      for (int i = 0; i < grid.n; ++i)
        tab[q][static_cast<size_t>(m) * grid.n + i] = tests[q]((m + 0.5) * dt, grid.x(i));
  std::vector<std::vector<double>> pairings(ensemble, std::vector<double>(d, 0.0));
  double cell = dt * grid.dx;
  for (int r = 0; r < ensemble; ++r) {
    WhiteNoiseField w(grid, dt, spu, replicate_seed(seed, r), 0, steps);
    for (int m = 0; m < steps; ++m)
      for (int i = 0; i < grid.n; ++i) {
        double v = w.xi(m, i) * cell;
        for (int q = 0; q < d; ++q)
          pairings[r][q] += tab[q][static_cast<size_t>(m) * grid.n + i] * v;
      }
  }
  return noisedetail::covariance_from_samples(pairings);
}

/// Temporal test function paired against the fractional noise, optionally
/// from a window shifted by a whole number of units (mixing probes).
struct FbmProbeTest {
  std::function<double(double)> phi;
  int64_t shift_units = 0;
};

/// Pairings <theta^z xi^H, phi> = Stieltjes sums sum phi(t_mid) dbeta over the
/// shifted windows; fresh path per ensemble member.
inline CovarianceProbe covariance_probe_fbm(double H, double dt, int spu, int64_t units,
                                            uint64_t seed, const std::vector<FbmProbeTest>& tests,
                                            int ensemble) {
  if (ensemble < 2 || tests.empty())
    throw ValidationError("covariance probe needs >= 2 replicates and >= 1 test function");
  int d = static_cast<int>(tests.size());
  int64_t zmin = 0, zmax = 0;
  for (const auto& t : tests) {
    zmin = std::min(zmin, t.shift_units);
    zmax = std::max(zmax, t.shift_units);
  }
  int steps = static_cast<int>(units) * spu;
  std::vector<std::vector<double>> tab(d, std::vector<double>(steps));
  for (int q = 0; q < d; ++q)
    for (int m = 0; m < steps; ++m) tab[q][m] = tests[q].phi((m + 0.5) * dt);
  std::vector<std::vector<double>> pairings(ensemble, std::vector<double>(d, 0.0));
  for (int r = 0; r < ensemble; ++r) {
    FbmPath base = FbmPath::materialize(H, dt, spu, replicate_seed(seed, r), zmin,
                                        zmax + units + 1);
    for (int q = 0; q < d; ++q) {
      FbmPath view = base.shifted(tests[q].shift_units - base.origin());
      double s = 0.0;
      for (int m = 0; m < steps; ++m) s += tab[q][m] * view.increment(m);
      pairings[r][q] = s;
    }
  }
  return noisedetail::covariance_from_samples(pairings);
}

}  // namespace kpzsync

#endif

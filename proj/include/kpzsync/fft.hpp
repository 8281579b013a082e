#ifndef KPZSYNC_FFT_HPP
#define KPZSYNC_FFT_HPP

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "kpzsync/grid.hpp"

// Thin FFTW wrapper. Plans are created once per size under a mutex and reused
// through the thread-safe new-array execute interface, so concurrent callers
// never coordinate after warm-up. All plans use FFTW_ESTIMATE: deterministic
// algorithm choice, hence bitwise-reproducible output for a fixed build.
//
// Transform convention on the unit torus (n*dx = 1):
//   fhat(k) = dx * sum_j f(x_j) e^{-2 pi i k x_j},   k = 0..n/2  (real input)
//   f(x_j)  = sum_k fhat(k) e^{+2 pi i k x_j}        (conjugate-symmetric sum)

namespace kpzsync {
namespace fftdetail {

struct PlanSet {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

inline std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

inline PlanSet& real_plans(int n) {
  static std::map<int, PlanSet> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> re(n);
  std::vector<std::complex<double>> cx(n / 2 + 1);
  PlanSet p;
  p.r2c = fftw_plan_dft_r2c_1d(n, re.data(), reinterpret_cast<fftw_complex*>(cx.data()),
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.c2r = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(cx.data()), re.data(),
                               FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(n, p).first->second;
}

inline fftw_plan complex_plan(int n, int sign) {
  static std::map<std::pair<int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> buf(n);
  fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf.data()),
                                 reinterpret_cast<fftw_complex*>(buf.data()), sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(key, p).first->second;
}

inline fftw_plan complex_plan_2d(int rows, int cols, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_tuple(rows, cols, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> buf(static_cast<size_t>(rows) * cols);
  fftw_plan p = fftw_plan_dft_2d(rows, cols, reinterpret_cast<fftw_complex*>(buf.data()),
                                 reinterpret_cast<fftw_complex*>(buf.data()), sign,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(key, p).first->second;
}

}  // namespace fftdetail

/// Forward real transform; n/2+1 coefficients, already scaled by dx.
inline std::vector<std::complex<double>> rfft(const GridFunction& f) {
  int n = f.n();
  std::vector<double> in(f.values());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(fftdetail::real_plans(n).r2c, in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  for (auto& c : out) c *= f.dx();
  return out;
}

/// Inverse of rfft. Bins 0 and n/2 must be (and are forced) real.
inline GridFunction irfft(const TorusGrid& grid, std::vector<std::complex<double>> spec) {
  int n = grid.n;
  if (static_cast<int>(spec.size()) != n / 2 + 1)
    throw GridMismatch("spectrum size does not match grid");
  spec[0] = std::complex<double>(spec[0].real(), 0.0);
  spec[n / 2] = std::complex<double>(spec[n / 2].real(), 0.0);
  std::vector<double> out(n);
  fftw_execute_dft_c2r(fftdetail::real_plans(n).c2r,
                       reinterpret_cast<fftw_complex*>(spec.data()), out.data());
  double scale = 1.0 / (grid.n * grid.dx);  // = 1 on the unit torus, kept for clarity
  for (double& x : out) x *= scale;
  return GridFunction(grid, std::move(out));
}

/// Unnormalized in-place complex transform, any length (circulant embedding
/// needs non-power-of-two sizes). sign = FFTW_FORWARD or FFTW_BACKWARD.
inline void cfft_inplace(std::vector<std::complex<double>>& a, int sign) {
  fftw_plan p = fftdetail::complex_plan(static_cast<int>(a.size()), sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(a.data()),
                   reinterpret_cast<fftw_complex*>(a.data()));
}

/// Unnormalized in-place 2-D complex transform on a rows-by-cols slab.
inline void cfft2_inplace(std::vector<std::complex<double>>& a, int rows, int cols, int sign) {
  if (a.size() != static_cast<size_t>(rows) * cols)
    throw GridMismatch("slab size does not match rows*cols");
  fftw_plan p = fftdetail::complex_plan_2d(rows, cols, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(a.data()),
                   reinterpret_cast<fftw_complex*>(a.data()));
}

}  // namespace kpzsync

#endif

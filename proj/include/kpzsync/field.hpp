#ifndef KPZSYNC_FIELD_HPP
#define KPZSYNC_FIELD_HPP

#include <cmath>
#include <complex>
#include <functional>

#include "kpzsync/fft.hpp"
#include "kpzsync/grid.hpp"

// Spectral operators on the torus: heat semigroup, derivatives, and the
// phi_1 filter used by the exponential integrators. All act by Fourier
// multipliers, so they commute exactly and conserve what they should.

namespace kpzsync {

/// -(2 pi k)^2, the Laplacian symbol of mode k in our transform convention.
inline double laplacian_symbol(int k) { return -4.0 * pi * pi * static_cast<double>(k) * k; }

/// Apply a real Fourier multiplier m(k), k = 0..n/2.
inline GridFunction apply_multiplier(const GridFunction& f,
                                     const std::function<double(int)>& m) {
  auto spec = rfft(f);
  for (int k = 0; k <= f.n() / 2; ++k) spec[k] *= m(k);
  return irfft(f.grid(), std::move(spec));
}

/// Heat semigroup P_t = e^{t Laplacian}: multiplier e^{-4 pi^2 k^2 t}.
inline GridFunction heat_semigroup(const GridFunction& f, double t) {
  if (!(t >= 0.0)) throw Error(ExitCode::Numerical, "heat_semigroup needs t >= 0");
  if (t == 0.0) return f;
  return apply_multiplier(f, [t](int k) { return std::exp(laplacian_symbol(k) * t); });
}

/// Spectral derivative of the given order: multiplier (2 pi i k)^order.
/// The Nyquist bin is zeroed for odd orders (its sign is not representable
/// in a real field), which is the standard convention.
inline GridFunction spectral_derivative(const GridFunction& f, int order) {
  if (order < 1) throw Error(ExitCode::Numerical, "derivative order must be >= 1");
  int n = f.n();
  auto spec = rfft(f);
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> i2pik(0.0, 2.0 * pi * k);
    std::complex<double> mult(1.0, 0.0);
    for (int p = 0; p < order; ++p) mult *= i2pik;
    spec[k] *= mult;
  }
  if (order % 2 == 1) spec[n / 2] = 0.0;
  return irfft(f.grid(), std::move(spec));
}

/// phi_1(t Laplacian) with phi_1(z) = (e^z - 1)/z, phi_1(0) = 1. This is the
/// exact time-average of the semigroup over [0,t]; the exponential-Euler
/// steps are built from it.
inline GridFunction phi1_heat(const GridFunction& f, double t) {
  if (!(t > 0.0)) throw Error(ExitCode::Numerical, "phi1_heat needs t > 0");
  return apply_multiplier(f, [t](int k) {
    if (k == 0) return 1.0;
    double a = -laplacian_symbol(k) * t;  // a > 0
    return -std::expm1(-a) / a;
  });
}

/// The periodic heat kernel profile k_t(x) = sum_k e^{-4 pi^2 k^2 t} e^{2 pi i k x}
/// sampled on the grid; row i of the kernel matrix is this profile recentred.
inline GridFunction heat_kernel_profile(const TorusGrid& grid, double t) {
  if (!(t > 0.0)) throw Error(ExitCode::Numerical, "heat kernel needs t > 0");
  // irfft sums the symmetric spectrum (unit torus), so feeding the raw
  // multipliers yields the mode sum directly.
  std::vector<std::complex<double>> spec(grid.n / 2 + 1);
  for (int k = 0; k <= grid.n / 2; ++k)
    spec[k] = std::complex<double>(std::exp(laplacian_symbol(k) * t), 0.0);
  return irfft(grid, std::move(spec));
}

}  // namespace kpzsync

#endif

#ifndef KPZSYNC_TEST_ORACLES_HPP
#define KPZSYNC_TEST_ORACLES_HPP

// Independent reference computations for the test suite. Everything here is
// written from the defining formulas with different algorithms than the
// library uses (direct sums, composite Simpson, dense linear algebra), so a
// shared bug cannot cancel out.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

inline constexpr double pi_d = 3.14159265358979323846264338327950288;

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 == 1) ++n;
  double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// 2-D composite Simpson on [0,T] x [0,1].
inline double simpson2(const std::function<double(double, double)>& f, double T, int nt, int nx) {
  return simpson(
      [&](double t) {
        return simpson([&](double x) { return f(t, x); }, 0.0, 1.0, nx);
      },
      0.0, T, nt);
}

// Heat kernel on the unit torus by direct long-double mode summation:
// p_t(x, y) = sum_k exp(-4 pi^2 k^2 t) exp(2 pi i k (x - y)), truncated when
// the next term is below 1e-30 relative.
inline double heat_kernel(double t, double x, double y) {
  long double s = 1.0L;
  long double z = static_cast<long double>(x - y);
  for (int k = 1; k < 4000; ++k) {
    long double lam = std::exp(-4.0L * pi_d * pi_d * k * k * static_cast<long double>(t));
    s += 2.0L * lam * std::cos(2.0L * pi_d * k * z);
    if (lam < 1e-30L) break;
  }
  return static_cast<double>(s);
}

// Exact P_t applied to a finite trig polynomial sum a0 + sum (a_k cos + b_k sin).
struct TrigPoly {
  double a0 = 0.0;
  std::vector<double> a, b;  // 1-based modes stored from index 0
  double eval(double x) const {
    double s = a0;
    for (size_t k = 0; k < a.size(); ++k) {
      double th = 2.0 * pi_d * (k + 1) * x;
      s += a[k] * std::cos(th) + b[k] * std::sin(th);
    }
    return s;
  }
  TrigPoly heat(double t) const {
    TrigPoly out = *this;
    for (size_t k = 0; k < a.size(); ++k) {
      double lam = std::exp(-4.0 * pi_d * pi_d * (k + 1.0) * (k + 1.0) * t);
      out.a[k] *= lam;
      out.b[k] *= lam;
    }
    return out;
  }
  TrigPoly derivative() const {
    TrigPoly out = *this;
    out.a0 = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
      double w = 2.0 * pi_d * (k + 1.0);
      out.a[k] = w * b[k];
      out.b[k] = -w * a[k];
    }
    return out;
  }
};

// Birkhoff contraction coefficient of a positive matrix by the defining
// cross-ratio sup: quadruple loop, no projective trickery.
inline double birkhoff_tau_direct(const std::vector<double>& K, int n) {
  double delta = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double r = std::log(K[i * n + k] * K[j * n + l] / (K[j * n + k] * K[i * n + l]));
          delta = std::max(delta, r);
        }
  return std::tanh(delta / 4.0);
}

// Dominant eigenpair of a dense positive matrix via Eigen; returns the
// eigenvector normalized to unit integral against weight dx.
inline std::vector<double> perron_vector(const std::vector<double>& K, int n, double dx) {
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = K[i * n + j] * dx;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  int best = 0;
  double mag = 0.0;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()[i].real() > mag) {
      mag = es.eigenvalues()[i].real();
      best = i;
    }
  std::vector<double> v(n);
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    v[i] = es.eigenvectors().col(best)[i].real();
    mass += v[i] * dx;
  }
  for (int i = 0; i < n; ++i) v[i] /= mass;
  return v;
}

// Fractional Gaussian increment covariance over unit windows of length T:
// Cov(B_{(z+1)T} - B_{zT}, B_T - B_0) straight from the fBm covariance.
inline double fgn_unit_cov(double H, double T, int z) {
  auto g = [&](double s) { return std::pow(std::fabs(s), 2.0 * H); };
  return 0.5 * std::pow(T, 2.0 * H) * (g(z + 1.0) - 2.0 * g(z) + g(z - 1.0));
}

// Convergence order from two successive refinement errors.
inline double richardson_order(double coarse_err, double fine_err) {
  return std::log2(coarse_err / fine_err);
}

}  // namespace oracles

#endif

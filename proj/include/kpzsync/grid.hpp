#ifndef KPZSYNC_GRID_HPP
#define KPZSYNC_GRID_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "kpzsync/errors.hpp"

// Uniform periodic grid on the unit torus [0,1) and real fields living on it.
// Quadrature is the rectangle rule throughout: spectrally accurate for smooth
// periodic integrands, and it keeps every operator a plain matrix-vector
// product with a dx factor.

namespace kpzsync {

inline constexpr double pi = 3.14159265358979323846264338327950288;

struct TorusGrid {
  int n = 0;
  double dx = 0.0;

  TorusGrid() = default;

  explicit TorusGrid(int n_) : n(n_), dx(1.0 / n_) {
    if (n_ < 8 || (n_ & (n_ - 1)) != 0)
      throw GridMismatch("grid size must be a power of two >= 8, got " + std::to_string(n_));
  }

  double x(int j) const { return static_cast<double>(j) * dx; }

  /// Shortest distance between nodes i and j on the torus.
  double dist(int i, int j) const {
    double d = std::fabs(x(i) - x(j));
    return std::min(d, 1.0 - d);
  }

  bool operator==(const TorusGrid& o) const { return n == o.n; }
  bool operator!=(const TorusGrid& o) const { return n != o.n; }
};

class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(TorusGrid grid, std::vector<double> values) : grid_(grid), v_(std::move(values)) {
    if (static_cast<int>(v_.size()) != grid_.n)
      throw GridMismatch("value count " + std::to_string(v_.size()) +
                         " does not match grid size " + std::to_string(grid_.n));
  }

  GridFunction(TorusGrid grid, double fill) : grid_(grid), v_(grid.n, fill) {}

  static GridFunction sample(TorusGrid grid, const std::function<double(double)>& f) {
    std::vector<double> v(grid.n);
    for (int j = 0; j < grid.n; ++j) v[j] = f(grid.x(j));
    return GridFunction(grid, std::move(v));
  }

  const TorusGrid& grid() const { return grid_; }
  int n() const { return grid_.n; }
  double dx() const { return grid_.dx; }

  double operator[](int j) const { return v_[j]; }
  double& operator[](int j) { return v_[j]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }

  double sup_norm() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::fabs(x));
    return m;
  }

  GridFunction& operator+=(const GridFunction& o) {
    check(o);
    for (int j = 0; j < n(); ++j) v_[j] += o.v_[j];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    check(o);
    for (int j = 0; j < n(); ++j) v_[j] -= o.v_[j];
    return *this;
  }
  GridFunction& operator*=(const GridFunction& o) {
    check(o);
    for (int j = 0; j < n(); ++j) v_[j] *= o.v_[j];
    return *this;
  }
  GridFunction& operator*=(double c) {
    for (double& x : v_) x *= c;
    return *this;
  }
  GridFunction& operator+=(double c) {
    for (double& x : v_) x += c;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
  friend GridFunction operator*(double c, GridFunction a) { return a *= c; }
  friend GridFunction operator*(GridFunction a, double c) { return a *= c; }

  GridFunction map(const std::function<double(double)>& f) const {
    std::vector<double> v(v_.size());
    for (size_t j = 0; j < v_.size(); ++j) v[j] = f(v_[j]);
    return GridFunction(grid_, std::move(v));
  }

 private:
  void check(const GridFunction& o) const {
    if (grid_ != o.grid_) throw GridMismatch("grid sizes differ: " + std::to_string(grid_.n) +
                                             " vs " + std::to_string(o.grid_.n));
  }

  TorusGrid grid_;
  std::vector<double> v_;
};

/// Rectangle rule on the periodic grid: dx * sum. Exact for trig polynomials
/// up to the Nyquist frequency.
inline double integrate(const GridFunction& f) {
  double s = 0.0;
  for (int j = 0; j < f.n(); ++j) s += f[j];
  return s * f.dx();
}

inline GridFunction exp_field(const GridFunction& f) {
  return f.map([](double x) { return std::exp(x); });
}

inline GridFunction log_field(const GridFunction& f) {
  for (int j = 0; j < f.n(); ++j)
    if (!(f[j] > 0.0))
      throw NonPositiveInput("log of a field with non-positive entry at node " + std::to_string(j));
  return f.map([](double x) { return std::log(x); });
}

/// Spatial mean (= integral, since the torus has unit length).
inline double mean(const GridFunction& f) { return integrate(f); }

/// max f - min f; shows up as the oscillation bound osc(X) in comparison tests.
inline double oscillation(const GridFunction& f) { return f.max() - f.min(); }

/// Unit-mass discrete delta at node j: 1/dx there, zero elsewhere. Feeding
/// these through a solver column by column assembles its kernel matrix.
inline GridFunction delta_column(TorusGrid grid, int j) {
  GridFunction f(grid, 0.0);
  f[((j % grid.n) + grid.n) % grid.n] = 1.0 / grid.dx;
  return f;
}

}  // namespace kpzsync

#endif

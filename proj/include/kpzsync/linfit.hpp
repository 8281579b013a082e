#ifndef KPZSYNC_LINFIT_HPP
#define KPZSYNC_LINFIT_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "kpzsync/errors.hpp"

// Ordinary least squares on (x, y) pairs plus a batch-means helper for
// correlated time series. Nothing clever; kept together because every
// experiment reports slopes with uncertainties.

namespace kpzsync {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_se = 0.0;
  size_t count = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("fit_line needs two equal-length samples of size >= 2");
  size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ValidationError("fit_line: degenerate abscissae");
  LineFit f;
  f.count = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += r * r;
  }
  f.r_squared = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
  if (n > 2) f.slope_se = std::sqrt(ss_res / ((n - 2) * sxx));
  return f;
}

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  size_t count = 0;
  size_t batches = 0;
};

/// Mean with a batch-means standard error: sqrt(N) batches, so the estimate
/// stays honest when successive samples are correlated along a path.
inline MeanEstimate batch_mean(const std::vector<double>& v) {
  MeanEstimate e;
  e.count = v.size();
  if (v.empty()) throw ValidationError("batch_mean of empty sample");
  for (double s : v) e.mean += s;
  e.mean /= static_cast<double>(v.size());
  size_t nb = static_cast<size_t>(std::floor(std::sqrt(static_cast<double>(v.size()))));
  if (nb < 2) {
    e.batches = v.size() > 1 ? v.size() : 1;
    if (v.size() > 1) {
      double var = 0.0;
      for (double s : v) var += (s - e.mean) * (s - e.mean);
      var /= (v.size() - 1);
      e.se = std::sqrt(var / v.size());
    }
    return e;
  }
  size_t bl = v.size() / nb;
  std::vector<double> bm(nb, 0.0);
  for (size_t b = 0; b < nb; ++b) {
    for (size_t j = 0; j < bl; ++j) bm[b] += v[b * bl + j];
    bm[b] /= static_cast<double>(bl);
  }
  double gm = 0.0;
  for (double s : bm) gm += s;
  gm /= static_cast<double>(nb);
  double var = 0.0;
  for (double s : bm) var += (s - gm) * (s - gm);
  var /= (nb - 1);
  e.batches = nb;
  e.se = std::sqrt(var / nb);
  return e;
}

}  // namespace kpzsync

#endif

#include <catch2/catch_amalgamated.hpp>

#include "kpzsync/cone.hpp"
#include "kpzsync/rng.hpp"
#include "oracles.hpp"

using namespace kpzsync;

namespace {

GridFunction random_positive(const TorusGrid& g, uint64_t key, int64_t idx) {
  GridFunction f(g, 0.0);
  for (int j = 0; j < g.n; ++j) f[j] = std::exp(0.8 * gaussian_at(key, idx, j));
  return f;
}

PositiveKernel random_kernel(const TorusGrid& g, uint64_t key, int64_t idx, double spread) {
  PositiveKernel K(g, 1.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      K.at(i, j) = std::exp(spread * gaussian_at(key, idx, i * g.n + j));
  return K;
}

}  // namespace

TEST_CASE("projective distance is the oscillation of the log ratio") {
  TorusGrid g(32);
  uint64_t key = derive_key(7, 1);
  GridFunction f = random_positive(g, key, 0);
  GridFunction h = random_positive(g, key, 1);
  GridFunction r = log_field(f) - log_field(h);
  REQUIRE(hilbert_distance(f, h) == Catch::Approx(oscillation(r)).margin(1e-14));
}

TEST_CASE("projective distance ignores scaling and multiplication is an isometry") {
  TorusGrid g(32);
  uint64_t key = derive_key(7, 2);
  GridFunction f = random_positive(g, key, 0);
  GridFunction h = random_positive(g, key, 1);
  GridFunction m = random_positive(g, key, 2);

  REQUIRE(hilbert_distance(f, 3.7 * f) == Catch::Approx(0.0).margin(1e-13));

  GridFunction mf(g, 0.0), mh(g, 0.0);
  for (int j = 0; j < g.n; ++j) {
    mf[j] = m[j] * f[j];
    mh[j] = m[j] * h[j];
  }
  REQUIRE(hilbert_distance(mf, mh) == Catch::Approx(hilbert_distance(f, h)).margin(1e-12));
}

TEST_CASE("sandwich between sup norm of log ratio and the projective distance") {
  // For unit-mass densities: ||log f - log g||_inf <= d_H <= 2 ||log f - log g||_inf.
  TorusGrid g(64);
  uint64_t key = derive_key(7, 3);
  for (int trial = 0; trial < 20; ++trial) {
    Density f = Density::normalize(random_positive(g, key, 2 * trial));
    Density h = Density::normalize(random_positive(g, key, 2 * trial + 1));
    GridFunction r = log_field(f.field()) - log_field(h.field());
    double sup = std::max(std::fabs(r.max()), std::fabs(r.min()));
    double d = hilbert_distance(f, h);
    REQUIRE(d >= sup - 1e-12);
    REQUIRE(d <= 2.0 * sup + 1e-12);
  }
}

TEST_CASE("birkhoff coefficient agrees with the direct cross-ratio scan") {
  uint64_t key = derive_key(11, 0);
  for (int n : {8, 16}) {
    TorusGrid g(n);
    for (int idx = 0; idx < 4; ++idx) {
      PositiveKernel K = random_kernel(g, key, 10 * n + idx, 0.5);
      double tau_lib = birkhoff(K).tau;
      double tau_dir = oracles::birkhoff_tau_direct(K.a, g.n);
      REQUIRE(tau_lib == Catch::Approx(tau_dir).margin(1e-12));
    }
  }
}

TEST_CASE("projective application contracts by at most tau") {
  TorusGrid g(16);
  uint64_t key = derive_key(11, 1);
  PositiveKernel K = random_kernel(g, key, 0, 0.7);
  double tau = birkhoff(K).tau;
  for (int trial = 0; trial < 25; ++trial) {
    Density f = Density::normalize(random_positive(g, key, 100 + 2 * trial));
    Density h = Density::normalize(random_positive(g, key, 101 + 2 * trial));
    double before = hilbert_distance(f, h);
    double after = hilbert_distance(projective_apply(K, f), projective_apply(K, h));
    REQUIRE(after <= tau * before + 1e-12);
  }
}

TEST_CASE("kernel bounds give a valid diameter bound") {
  TorusGrid g(16);
  PositiveKernel K = random_kernel(g, derive_key(11, 2), 0, 0.4);
  KernelBounds b = check_kernel_bounds(K);
  REQUIRE(b.positive);
  REQUIRE(birkhoff(K).diameter <= b.diameter_bound + 1e-12);
  REQUIRE(birkhoff(K).tau <= b.tau_bound + 1e-12);
}

TEST_CASE("heat kernel matrix matches direct mode summation and is symmetric") {
  TorusGrid g(64);
  double t = 0.05;
  PositiveKernel K = heat_kernel_matrix(g, t);
  for (int i = 0; i < g.n; i += 13)
    for (int j = 0; j < g.n; j += 11) {
      REQUIRE(K.at(i, j) == Catch::Approx(oracles::heat_kernel(t, g.x(i), g.x(j))).margin(1e-10));
      REQUIRE(K.at(i, j) == Catch::Approx(K.at(j, i)).margin(1e-13));
    }
}

TEST_CASE("composition matches kernel of the summed time") {
  TorusGrid g(32);
  PositiveKernel A = heat_kernel_matrix(g, 0.02);
  PositiveKernel B = heat_kernel_matrix(g, 0.03);
  PositiveKernel C = compose(A, B);
  PositiveKernel D = heat_kernel_matrix(g, 0.05);
  for (int i = 0; i < g.n; i += 7)
    for (int j = 0; j < g.n; j += 5)
      REQUIRE(C.at(i, j) == Catch::Approx(D.at(i, j)).margin(1e-10));
}

TEST_CASE("non-positive inputs are rejected") {
  TorusGrid g(8);
  GridFunction f(g, 1.0);
  f[3] = 0.0;
  REQUIRE_THROWS_AS(Density::normalize(f), NonPositiveInput);

  PositiveKernel K(g, 1.0);
  for (auto& v : K.a) v = 1.0;
  K.at(2, 5) = 0.0;
  REQUIRE_THROWS_AS(birkhoff(K), NonPositiveKernel);
  REQUIRE_THROWS_AS(projective_apply(K, Density::normalize(GridFunction(g, 1.0))),
                    NonPositiveKernel);
}

TEST_CASE("normalized density has unit mass") {
  TorusGrid g(32);
  Density f = Density::normalize(random_positive(g, derive_key(11, 3), 0));
  REQUIRE(integrate(f.field()) == Catch::Approx(1.0).margin(1e-13));
}

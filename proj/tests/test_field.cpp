#include <catch2/catch_amalgamated.hpp>

#include "kpzsync/field.hpp"
#include "oracles.hpp"

using namespace kpzsync;

namespace {

GridFunction sample(const TorusGrid& g, const oracles::TrigPoly& p) {
  GridFunction f(g, 0.0);
  for (int j = 0; j < g.n; ++j) f[j] = p.eval(g.x(j));
  return f;
}

oracles::TrigPoly test_poly() {
  oracles::TrigPoly p;
  p.a0 = 1.5;
  p.a = {0.7, -0.2, 0.05};
  p.b = {-0.3, 0.4, 0.1};
  return p;
}

}  // namespace

TEST_CASE("grid geometry") {
  TorusGrid g(64);
  REQUIRE(g.dx == Catch::Approx(1.0 / 64));
  REQUIRE(g.x(0) == 0.0);
  REQUIRE(g.x(63) == Catch::Approx(63.0 / 64));

  GridFunction f(g, 2.0);
  REQUIRE(integrate(f) == Catch::Approx(2.0));
  REQUIRE(mean(f) == Catch::Approx(2.0));
}

TEST_CASE("spectral derivative matches analytic derivative of trig polynomials") {
  TorusGrid g(64);
  oracles::TrigPoly p = test_poly();
  GridFunction d1 = spectral_derivative(sample(g, p), 1);
  GridFunction d2 = spectral_derivative(sample(g, p), 2);
  oracles::TrigPoly q1 = p.derivative();
  oracles::TrigPoly q2 = q1.derivative();
  for (int j = 0; j < g.n; ++j) {
    REQUIRE(d1[j] == Catch::Approx(q1.eval(g.x(j))).margin(1e-10));
    REQUIRE(d2[j] == Catch::Approx(q2.eval(g.x(j))).margin(1e-8));
  }
}

TEST_CASE("heat semigroup decays each mode by the exact factor") {
  TorusGrid g(128);
  oracles::TrigPoly p = test_poly();
  for (double t : {0.001, 0.01, 0.1}) {
    GridFunction u = heat_semigroup(sample(g, p), t);
    oracles::TrigPoly q = p.heat(t);
    for (int j = 0; j < g.n; ++j) REQUIRE(u[j] == Catch::Approx(q.eval(g.x(j))).margin(1e-12));
  }
}

TEST_CASE("heat semigroup composes and conserves mass") {
  TorusGrid g(64);
  oracles::TrigPoly p = test_poly();
  GridFunction f = sample(g, p);
  GridFunction ab = heat_semigroup(heat_semigroup(f, 0.003), 0.007);
  GridFunction whole = heat_semigroup(f, 0.01);
  for (int j = 0; j < g.n; ++j) REQUIRE(ab[j] == Catch::Approx(whole[j]).margin(1e-13));
  REQUIRE(integrate(whole) == Catch::Approx(integrate(f)).margin(1e-13));
}

TEST_CASE("heat kernel profile matches direct mode summation") {
  TorusGrid g(256);
  double t = 0.01;
  GridFunction prof = heat_kernel_profile(g, t);
  for (int j = 0; j < g.n; j += 17)
    REQUIRE(prof[j] == Catch::Approx(oracles::heat_kernel(t, g.x(j), 0.0)).margin(1e-10));
}

TEST_CASE("phi1 multiplier integrates the semigroup exactly on each mode") {
  // phi1(t L) applied to cos(2 pi k x) must equal (1 - e^{-lam t}) / (lam t) cos(...).
  TorusGrid g(64);
  double t = 0.05;
  for (int k : {1, 3}) {
    GridFunction f(g, 0.0);
    for (int j = 0; j < g.n; ++j) f[j] = std::cos(2.0 * pi * k * g.x(j));
    GridFunction out = phi1_heat(f, t);
    double lam = -laplacian_symbol(k);
    double factor = (1.0 - std::exp(-lam * t)) / (lam * t);
    // Same thing by quadrature of the defining integral, as a cross-check.
    double quad = oracles::simpson([&](double s) { return std::exp(-lam * (t - s)); }, 0.0, t,
                                   2000) / t;
    REQUIRE(factor == Catch::Approx(quad).margin(1e-10));
    for (int j = 0; j < g.n; ++j)
      REQUIRE(out[j] == Catch::Approx(factor * f[j]).margin(1e-12));
  }
  // Constant mode passes through unchanged.
  GridFunction c(g, 3.0);
  GridFunction out = phi1_heat(c, t);
  for (int j = 0; j < g.n; ++j) REQUIRE(out[j] == Catch::Approx(3.0).margin(1e-13));
}

TEST_CASE("apply_multiplier with unit symbol is the identity") {
  TorusGrid g(32);
  GridFunction f = sample(g, test_poly());
  GridFunction out = apply_multiplier(f, [](int) { return 1.0; });
  for (int j = 0; j < g.n; ++j) REQUIRE(out[j] == Catch::Approx(f[j]).margin(1e-14));
}

TEST_CASE("exp and log fields invert each other") {
  TorusGrid g(32);
  GridFunction f = sample(g, test_poly());
  GridFunction back = log_field(exp_field(f));
  for (int j = 0; j < g.n; ++j) REQUIRE(back[j] == Catch::Approx(f[j]).margin(1e-13));
}

TEST_CASE("delta column integrates to one") {
  TorusGrid g(64);
  GridFunction d = delta_column(g, 13);
  REQUIRE(integrate(d) == Catch::Approx(1.0));
  REQUIRE(d[13] == Catch::Approx(64.0));
  REQUIRE(d[14] == 0.0);
}

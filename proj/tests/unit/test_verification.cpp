#include <cmath>
#include <random>

#include "doctest.h"
#include "lamcert/flux.hpp"
#include "lamcert/threshold.hpp"
#include "lamcert/verification.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace lamcert;

TEST_CASE("mesh integrals are exact cell sums") {
  const fixtures::Patch patch = fixtures::root_patch(8);
  const double p = 3.0, r = 2.05;
  const Integrals I = mesh_integrals(patch.map, p, r);
  double g = 0.0, f = 0.0;
  for (const auto& c : patch.map.cells) {
    const double a = area(c.region);
    g += a * std::pow(std::hypot(c.gradient.m11, c.gradient.m12), r);
    const double fx = std::pow(std::hypot(c.gradient.m11, c.gradient.m12), p - 2) * c.gradient.m11 + c.gradient.m22;
    const double fy = std::pow(std::hypot(c.gradient.m11, c.gradient.m12), p - 2) * c.gradient.m12 - c.gradient.m21;
    f += a * std::pow(std::hypot(fx, fy), r / (p - 1));
  }
  CHECK(I.grad == doctest::Approx(g).epsilon(1e-12));
  CHECK(I.flux == doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("test functions vanish on the boundary and have unit gradient bound") {
  const fixtures::Patch patch = fixtures::root_patch(4);
  const auto tests = default_test_functions(patch.map, 6, 99);
  CHECK(tests.size() == 7);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (const auto& t : tests) {
    for (int k = 0; k <= 20; ++k) {
      const double s = k / 20.0;
      for (Vec2 x : {Vec2{s, 0}, Vec2{s, 1}, Vec2{0, s}, Vec2{1, s}}) CHECK(std::abs(t.value(x)) < 1e-14);
    }
    double gmax = 0.0;
    for (int k = 0; k < 2000; ++k) gmax = std::max(gmax, norm(t.gradient({u(rng), u(rng)})));
    CHECK(gmax <= 1.01);
    CHECK(gmax > 0.3);
    // Central differences.
    const Vec2 x{0.3, 0.6};
    const double h = 1e-6;
    const Vec2 g = t.gradient(x);
    CHECK(g.x == doctest::Approx((t.value({x.x + h, x.y}) - t.value({x.x - h, x.y})) / (2 * h)).epsilon(1e-5));
    CHECK(g.y == doctest::Approx((t.value({x.x, x.y + h}) - t.value({x.x, x.y - h})) / (2 * h)).epsilon(1e-5));
  }
  // Same seed, same family.
  const auto again = default_test_functions(patch.map, 6, 99);
  for (std::size_t k = 0; k < tests.size(); ++k) CHECK(again[k].value({0.4, 0.4}) == tests[k].value({0.4, 0.4}));
}

TEST_CASE("weak residual of a continuous patch is at rounding level") {
  const fixtures::Patch patch = fixtures::root_patch(16);
  const double res = weak_divergence_residual(patch.map, default_test_functions(patch.map));
  CHECK(res <= 1e-10 * residual_scale(patch.map));
}

TEST_CASE("weak residual detects a gradient jump") {
  fixtures::Patch patch = fixtures::root_patch(16);
  // Perturbing only the gradient on half the domain makes v discontinuous across x = 1/2.
  for (auto& c : patch.map.cells) {
    if (centroid(c.region).x > 0.5) c.gradient.m22 += 0.1 * patch.map.lipschitz_bound;
  }
  const double res = weak_divergence_residual(patch.map, default_test_functions(patch.map));
  CHECK(res > 1e-3 * residual_scale(patch.map));
}

TEST_CASE("oracle integrals equal the built laminate's") {
  for (double p : {1.5, 3.0, 4.0}) {
    const double b = q1_threshold(p).b_star;
    const double r = 0.5 * (lower_exponent(p) + q1_threshold(p).q1);
    for (int N : {2, 3, 10, 60}) {
      const Integrals a = oracle_integrals(N, p, b, r);
      const Integrals m = measure_integrals(build_laminate(N, p, b).laminate, r);
      CHECK(a.grad == doctest::Approx(m.grad).epsilon(1e-10));
      CHECK(a.flux == doctest::Approx(m.flux).epsilon(1e-10));
    }
  }
}

TEST_CASE("smallest order reaching Lambda is a first crossing") {
  const double p = 4.0, r = 3.05;
  const double b = q1_threshold(p).b_star;
  for (double L : {0.5, 1.0, 2.0}) {
    const auto N = smallest_order_reaching(L, p, b, r, 100000);
    REQUIRE(N);
    CHECK(oracle_integrals(*N, p, b, r).ratio() >= L);
    if (*N > 2) CHECK(oracle_integrals(*N - 1, p, b, r).ratio() < L);
  }
  CHECK_FALSE(smallest_order_reaching(1e9, p, b, r, 1000));
}

TEST_CASE("log-spaced orders") {
  const auto v = log_spaced(1000, 100000, 20);
  CHECK(v.size() == 20);
  CHECK(v.front() == 1000);
  CHECK(v.back() == 100000);
  for (std::size_t k = 1; k < v.size(); ++k) CHECK(v[k] > v[k - 1]);
  CHECK(log_spaced(5, 5, 1) == std::vector<int>{5});
}

TEST_CASE("ratio growth guards and monotonicity") {
  const double p = 4.0, r = 3.05;
  const double b = q1_threshold(p).b_star;
  CHECK_THROWS_AS(ratio_growth(p, r, q_tilde(b, p) + 0.01, b, {1000, 2000}), std::domain_error);
  CHECK_THROWS_AS(ratio_growth(p, 2.9, 3.1, b, {1000, 2000}), std::domain_error);
  const RatioGrowth g = ratio_growth(p, r, q_tilde(b, p), b, log_spaced(1000, 10000, 8));
  CHECK(g.N.size() == 8);
  CHECK(g.monotone_from == 1000);
  for (std::size_t k = 1; k < g.ratio.size(); ++k) CHECK(g.ratio[k] > g.ratio[k - 1]);
}

TEST_CASE("certificate input guards") {
  CHECK_THROWS_AS(certificate(2.0, 1.5, 2.0), std::domain_error);
  CHECK_THROWS_AS(certificate(4.0, 3.2, 2.0), std::domain_error);
  CHECK_THROWS_AS(certificate(4.0, 2.9, 2.0), std::domain_error);
  CHECK_THROWS_AS(certificate(1.0, 1.5, 2.0), std::domain_error);
  try {
    certificate(3.0, 2.5, 2.0);
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("admissible range") != std::string::npos);
  }
}

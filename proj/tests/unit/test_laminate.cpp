#include <cmath>
#include <random>

#include "doctest.h"
#include "lamcert/laminate.hpp"
#include "lamcert/threshold.hpp"
#include "support/oracle.hpp"

using namespace lamcert;

namespace {

oracle::M conv(const Mat2& m) { return {m.m11, m.m12, m.m21, m.m22}; }

double rel_diff(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

}  // namespace

TEST_CASE("atom labels print and parse") {
  for (const char* text : {"+A0", "-B2", "+C17", "-D3", "+E0"}) {
    CHECK(AtomLabel::parse(text).str() == text);
  }
  CHECK_THROWS_AS(AtomLabel::parse("B2"), std::invalid_argument);
  CHECK_THROWS_AS(AtomLabel::parse("+Q2"), std::invalid_argument);
  CHECK_THROWS_AS(AtomLabel::parse("+B"), std::invalid_argument);
  const AtomLabel l{AtomKind::C, 4, Sign::Plus};
  CHECK(l.negated().negated() == l);
  CHECK(l.negated().sign == Sign::Minus);
}

TEST_CASE("family matrices match their defining diagonals") {
  const double p = 3.5, b = 0.3;
  for (int i = 1; i <= 40; ++i) {
    const Mat2 a = matrix_family({AtomKind::A, i, Sign::Plus}, p, b);
    const Mat2 bm = matrix_family({AtomKind::B, i, Sign::Plus}, p, b);
    const Mat2 c = matrix_family({AtomKind::C, i, Sign::Minus}, p, b);
    CHECK(oracle::maxabs(oracle::add(conv(a), oracle::scale(-1, oracle::A(i, p, b)))) <= 1e-12 * std::pow(i, p));
    CHECK(oracle::maxabs(oracle::add(conv(bm), oracle::scale(-1, oracle::B(i, p, b)))) <= 1e-12 * std::pow(i, p));
    CHECK(oracle::maxabs(oracle::add(conv(c), oracle::C(i, p, b))) <= 1e-12 * std::pow(i, p));
  }
  const Mat2 e = matrix_family({AtomKind::E, 0, Sign::Plus}, p, b);
  CHECK(e == Mat2::diag(b, 0.0));
  const Mat2 d = matrix_family({AtomKind::D, 5, Sign::Plus}, p, b);
  CHECK(d.m11 == doctest::Approx(b * 5));
  CHECK(d.m22 == doctest::Approx(std::pow(6.0, p - 1)));
}

TEST_CASE("parameter guards") {
  CHECK_THROWS_AS(require_params(1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(require_params(3.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(require_params(3.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(build_laminate(1, 3.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(split_coefficients(0, 3.0, 0.5), std::domain_error);
}

TEST_CASE("split coefficients agree with the unsimplified fractions") {
  for (double p : {1.5, 2.5, 3.0, 4.0}) {
    for (double b : {0.1, 0.27, 0.5, 3.0, 28.0}) {
      for (int i : {1, 2, 3, 10, 77, 1000}) {
        const SplitCoefficients s = split_coefficients(i, p, b);
        CHECK(rel_diff(s.alpha, oracle::alpha(i, p, b)) < 1e-9);
        CHECK(rel_diff(s.beta, oracle::beta(i, p, b)) < 1e-9);
        CHECK(rel_diff(s.gamma, oracle::gamma(i, p, b)) < 1e-9);
      }
    }
  }
}

TEST_CASE("property: split weights form a convex combination with barycenter A_i") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> up(1.05, 5.0);
  std::uniform_real_distribution<double> ulogb(-4.0, 4.0);
  std::uniform_int_distribution<int> ui(1, 5000);
  for (int t = 0; t < 500; ++t) {
    const double p = up(rng);
    const double b = std::exp(ulogb(rng));
    if (std::abs(b - 1) < 1e-3) continue;
    const int i = ui(rng);
    const SplitCoefficients s = split_coefficients(i, p, b);
    CHECK(s.alpha > 0.0);
    CHECK(s.beta > 0.0);
    CHECK(s.gamma > 0.0);
    CHECK(std::abs(s.alpha + s.beta + s.gamma - 1.0) <= 1e-12);
    const oracle::M mix = oracle::add(oracle::add(oracle::scale(s.alpha, oracle::B(i + 1, p, b)),
                                                  oracle::scale(s.beta, oracle::C(i + 1, p, b))),
                                      oracle::scale(s.gamma, oracle::A(i + 1, p, b)));
    const oracle::M target = oracle::A(i, p, b);
    const double sc = std::max(oracle::maxabs(oracle::A(i + 1, p, b)), 1.0);
    CHECK(oracle::maxabs(oracle::add(mix, oracle::scale(-1, target))) <= 1e-10 * sc);
  }
}

TEST_CASE("initial splitting keeps the determinant affine") {
  for (double p : {1.5, 3.0, 4.0}) {
    for (double b : {0.19, 0.5, 27.8}) {
      const double mu = initial_split_weight(p, b);
      CHECK(mu == doctest::Approx(oracle::mu(p, b)).epsilon(1e-14));
      // diag(b, 0) = mu B_2 + (1 - mu) A_1.
      const oracle::M mix = oracle::add(oracle::scale(mu, oracle::B(2, p, b)), oracle::scale(1 - mu, oracle::A(1, p, b)));
      CHECK(mix.a == doctest::Approx(b));
      CHECK(std::abs(mix.d) < 1e-14);
      // With equal halves the second entry would be (1 - b^q)/2, not 0.
      CHECK(std::abs(0.5 * (oracle::B(2, p, b).d + oracle::A(1, p, b).d)) > 1e-3);
      const auto split = initial_split(p, b);
      double total = 0.0;
      for (const auto& w : split) total += w.weight;
      CHECK(total == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("order-2 weights at p = 3, b = 1/2") {
  const LaminateBuild lb = build_laminate(2, 3.0, 0.5);
  const oracle::Weights ref = oracle::laminate_weights(2, 3.0, 0.5);
  // mu = 1/(1 + 1/4) = 4/5: the A_1 branch carries 1/10 on each sign.
  CHECK(oracle::mu(3.0, 0.5) == doctest::Approx(0.8));
  REQUIRE(lb.laminate.atoms.size() == 6);
  for (const Atom& a : lb.laminate.atoms) {
    CHECK(a.weight == doctest::Approx(ref.w.at(a.label.str())).epsilon(1e-14));
    CHECK(std::log(a.weight) == doctest::Approx(a.log_weight).epsilon(1e-12));
  }
  // gamma_2 = (1 - 12/17)(1 - 1/6) = 25/102, so Gamma bar_2 = 25/1020.
  CHECK(gamma_tail(2, 3.0, 0.5) == doctest::Approx(25.0 / 1020.0).epsilon(1e-14));
  CHECK(ref.gamma_bar == doctest::Approx(25.0 / 1020.0).epsilon(1e-14));
}

TEST_CASE("property: laminate weights equal the forward recursion") {
  for (double p : {1.5, 2.5, 4.0}) {
    const double b = q1_threshold(p).b_star;
    for (int N : {2, 3, 7, 40}) {
      const LaminateBuild lb = build_laminate(N, p, b);
      const oracle::Weights ref = oracle::laminate_weights(N, p, b);
      for (const Atom& a : lb.laminate.atoms) {
        CHECK(rel_diff(a.weight, ref.w.at(a.label.str())) < 1e-11);
      }
      CHECK(rel_diff(gamma_tail(N, p, b), ref.gamma_bar) < 1e-11);
    }
  }
}

TEST_CASE("laminate invariants hold across orders") {
  const double p = 4.0;
  const double b = q1_threshold(p).b_star;
  for (int N : {2, 5, 50, 400}) {
    const LaminateBuild lb = build_laminate(N, p, b);
    CHECK(lb.laminate.atoms.size() == static_cast<std::size_t>(4 * (N - 1) + 2));
    CHECK(std::abs(lb.laminate.total_weight() - 1.0) <= 1e-12);
    CHECK(max_abs_entry(lb.laminate.barycenter()) <= 1e-12);
    CHECK(validate_laminate(lb.laminate).ok());
    CHECK(validate_split_tree(lb.tree, lb.laminate).ok());
  }
}

TEST_CASE("log-space tail stays finite where the linear weight underflows") {
  const double p = 4.0, b = q1_threshold(4.0).b_star;
  const double lg = log_gamma_tail(1'000'000, p, b);
  CHECK(std::isfinite(lg));
  CHECK(lg < -30.0);
  // Summing logs of the factors directly.
  double acc = std::log(0.5 * (1 - oracle::mu(p, b)));
  for (int i = 1; i < 1'000'000; ++i) acc += std::log(oracle::gamma(i, p, b));
  CHECK(lg == doctest::Approx(acc).epsilon(1e-9));
}

TEST_CASE("rank-one connections") {
  const Mat2 x = Mat2::diag(1.0, 2.0);
  const Mat2 y = Mat2::diag(3.0, 2.0);
  auto c = rank_one_connection(x, y);
  REQUIRE(c);
  CHECK(max_abs_entry(Mat2::outer(c->a, c->n) - (x - y)) < 1e-15);
  CHECK(norm(c->n) == doctest::Approx(1.0));
  CHECK_FALSE(rank_one_connection(Mat2::diag(1, 1), Mat2::diag(0, 0)));
  CHECK_FALSE(rank_one_connection(x, x));
}

TEST_CASE("injected faults in the split tree are flagged") {
  LaminateBuild lb = build_laminate(3, 3.0, 0.4);
  SUBCASE("lambda perturbed by 1e-3") {
    lb.tree.steps[4].lambda += 1e-3;
    const ValidationReport r = validate_split_tree(lb.tree, lb.laminate);
    CHECK(r.has(ViolationKind::Convexity));
  }
  SUBCASE("child moved off the rank-one line") {
    lb.tree.steps[3].childC.m11 += 0.5;
    const ValidationReport r = validate_split_tree(lb.tree, lb.laminate);
    CHECK(r.has(ViolationKind::RankOne));
  }
  SUBCASE("lambda out of range") {
    lb.tree.steps[0].lambda = 1.5;
    CHECK(validate_split_tree(lb.tree, lb.laminate).has(ViolationKind::LambdaRange));
  }
  SUBCASE("atom weight edited") {
    lb.laminate.atoms[0].weight *= 1.01;
    CHECK(validate_split_tree(lb.tree, lb.laminate).has(ViolationKind::Replay));
    CHECK_FALSE(validate_laminate(lb.laminate).ok());
  }
}

TEST_CASE("rational b makes B and -C atoms coincide") {
  // b = 1/2: B_{2j+1} = diag(j, -j^q) = -C_j, first at B_5 = -C_2.
  const LaminateBuild four = build_laminate(4, 3.0, 0.5);
  CHECK(min_support_distance(four.laminate) > 0.0);
  const LaminateBuild five = build_laminate(5, 3.0, 0.5);
  CHECK(min_support_distance(five.laminate) == 0.0);
  CHECK_FALSE(validate_laminate(five.laminate).ok());
}

TEST_CASE("min support distance matches brute force") {
  const LaminateBuild lb = build_laminate(12, 2.5, 0.37);
  double best = 1e300;
  const auto& at = lb.laminate.atoms;
  for (std::size_t i = 0; i < at.size(); ++i)
    for (std::size_t j = i + 1; j < at.size(); ++j) best = std::min(best, frobenius(at[i].matrix - at[j].matrix));
  CHECK(min_support_distance(lb.laminate) == best);
}

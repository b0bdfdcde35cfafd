#include <cmath>
#include <map>

#include "doctest.h"
#include "lamcert/flux.hpp"
#include "lamcert/io.hpp"
#include "lamcert/realization.hpp"
#include "lamcert/verification.hpp"
#include "support/fixtures.hpp"

using namespace lamcert;

TEST_CASE("domains") {
  CHECK(parse_domain("square") == DomainKind::Square);
  CHECK(parse_domain("disk64") == DomainKind::Disk64);
  CHECK_THROWS(parse_domain("circle"));
  CHECK(area(make_domain(DomainKind::Square)) == 1.0);
  CHECK(make_domain(DomainKind::Disk64).size() == 64);
}

TEST_CASE("simple laminate patch on the square") {
  const fixtures::Patch patch = fixtures::root_patch(16);
  const PWAffineMap& map = patch.map;
  const MapReport rep = validate_map(map);
  CHECK(rep.ok());
  for (const auto& v : rep.violations) MESSAGE(to_string(v.kind) << ": " << v.message);

  // Exact area fractions by tag, against the split weights.
  std::map<std::string, double> by_tag;
  double trans = 0.0;
  for (const auto& c : map.cells) {
    if (c.tag)
      by_tag[c.tag->str()] += area(c.region);
    else
      trans += area(c.region);
  }
  const SplitStep& s = patch.build.tree.steps[0];
  CHECK(trans <= 0.2);
  CHECK(by_tag[s.childB_label.str()] == doctest::Approx(s.lambda).epsilon(0.2));
  CHECK(by_tag[s.childC_label.str()] == doctest::Approx(1 - s.lambda).epsilon(0.2));
  CHECK(by_tag[s.childB_label.str()] + by_tag[s.childC_label.str()] + trans == doctest::Approx(1.0));

  // Tagged cells carry exactly one of the two rank-one connected gradients.
  for (const auto& c : map.cells) {
    if (!c.tag) continue;
    const Mat2& target = *c.tag == s.childB_label ? s.childB : s.childC;
    CHECK(max_abs_entry(c.gradient - target) < 1e-12);
  }
}

TEST_CASE("patch frame shrinks with more stripes") {
  double prev = 1.0;
  for (int m : {4, 8, 16, 32}) {
    const fixtures::Patch patch = fixtures::root_patch(m);
    const double t = transition_fraction(patch.map);
    CHECK(t < prev);
    prev = t;
  }
}

TEST_CASE("too few stripes report the minimal count") {
  const LaminateBuild lb = build_laminate(2, 3.0, 0.5);
  AffineCell cell = fixtures::zero_cell(unit_square());
  try {
    simple_laminate_patch(cell, lb.tree.steps[0], 2, 0.01);
    FAIL("expected InsufficientStripes");
  } catch (const InsufficientStripes& e) {
    CHECK(e.minimal_stripes > 2);
    const auto ok = simple_laminate_patch(cell, lb.tree.steps[0], e.minimal_stripes, 0.01);
    CHECK_FALSE(ok.empty());
  }
}

TEST_CASE("injected map faults are flagged") {
  fixtures::Patch patch = fixtures::root_patch(8);
  PWAffineMap& map = patch.map;
  SUBCASE("offset jump breaks continuity") {
    for (auto& c : map.cells) {
      if (centroid(c.region).x > 0.5) {
        c.offset.y += 1e-3;
        for (auto& v : c.values) v.y += 1e-3;
      }
    }
    CHECK(validate_map(map).has(MapViolationKind::Continuity));
  }
  SUBCASE("missing cell breaks the tiling") {
    map.cells.erase(map.cells.begin() + static_cast<long>(map.cells.size() / 2));
    CHECK(validate_map(map).has(MapViolationKind::Tiling));
  }
  SUBCASE("non-zero boundary value") {
    for (auto& c : map.cells) {
      for (std::size_t i = 0; i < c.region.size(); ++i) {
        if (c.region[i].x == 0.0) c.values[i].x = 1e-6;
      }
    }
    CHECK(validate_map(map).has(MapViolationKind::Boundary));
  }
  SUBCASE("gradient above the Lipschitz bound") {
    map.cells[0].gradient.m11 = 10 * map.lipschitz_bound;
    CHECK(validate_map(map).has(MapViolationKind::Lipschitz));
  }
}

TEST_CASE("order-2 realization meets its budget") {
  const LaminateBuild lb = build_laminate(2, 3.0, 0.5);
  const double delta = min_support_distance(lb.laminate) / 4;
  RealizeStats stats;
  const PWAffineMap map =
      realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, delta, 0.1, 16, {}, &stats);
  const MapReport rep = validate_map(map, &lb.laminate);
  CHECK(rep.ok());
  CHECK(rep.transition_fraction <= 0.1);
  CHECK(stats.rounds.size() >= 2);
  const Histogram h = gradient_histogram(map, lb.laminate, delta);
  CHECK(h.total() == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t k = 0; k < h.labels.size(); ++k) {
    CHECK(std::abs(h.fractions[k] - lb.laminate.atoms[k].weight) <= 0.1);
  }
  // ± symmetry of the construction.
  CHECK(h.fraction({AtomKind::B, 2, Sign::Plus}).value() ==
        doctest::Approx(h.fraction({AtomKind::B, 2, Sign::Minus}).value()).epsilon(1e-9));
}

TEST_CASE("realization is deterministic") {
  const LaminateBuild lb = build_laminate(2, 4.0, 0.27);
  const double delta = min_support_distance(lb.laminate) / 4;
  auto digest = [&] {
    const PWAffineMap map = realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, delta, 0.1, 8);
    HashStream h;
    write_map_json(h.stream(), map);
    return h.digest();
  };
  CHECK(digest() == digest());
}

TEST_CASE("infeasible budgets are reported with an achievable eta") {
  const LaminateBuild lb = build_laminate(2, 3.0, 0.5);
  const double delta = min_support_distance(lb.laminate) / 4;
  try {
    realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, delta, 1e-9, 2);
    FAIL("expected InfeasibleBudget");
  } catch (const InfeasibleBudget& e) {
    CHECK(e.achievable_eta > 1e-9);
    CHECK(std::string(e.what()).find("achievable") != std::string::npos);
  }
  CHECK_THROWS_AS(realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, 10.0, 0.1, 16),
                  std::domain_error);
  CHECK_THROWS_AS(realize_laminate(unit_square(), DomainKind::Square, lb.tree, lb.laminate, delta, 0.7, 16),
                  std::domain_error);
}

TEST_CASE("disk domain realization") {
  const LaminateBuild lb = build_laminate(2, 4.0, 0.27);
  const double delta = min_support_distance(lb.laminate) / 4;
  const PWAffineMap map =
      realize_laminate(make_domain(DomainKind::Disk64), DomainKind::Disk64, lb.tree, lb.laminate, delta, 0.1, 16);
  CHECK(validate_map(map, &lb.laminate).ok());
}

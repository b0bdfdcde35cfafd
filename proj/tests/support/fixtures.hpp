#pragma once

#include <algorithm>

#include "lamcert/laminate.hpp"
#include "lamcert/realization.hpp"

namespace fixtures {

inline lamcert::AffineCell zero_cell(const lamcert::Polygon& region) {
  lamcert::AffineCell c;
  c.region = region;
  c.values.assign(region.size(), {0.0, 0.0});
  return c;
}

struct Patch {
  lamcert::LaminateBuild build;
  lamcert::PWAffineMap map;
};

/// The root splitting 0 -> +-diag(b, 0) as one simple laminate on the unit square.
inline Patch root_patch(int stripes, double p = 3.0, double b = 0.5) {
  using namespace lamcert;
  Patch out;
  out.build = build_laminate(2, p, b);
  const SplitStep& step = out.build.tree.steps[0];
  out.map.domain = unit_square();
  out.map.cells = simple_laminate_patch(zero_cell(unit_square()), step, stripes, 0.5);
  out.map.stripes = stripes;
  out.map.eta = 0.5;
  // |parent| + K |a| bounds every frame gradient.
  out.map.lipschitz_bound =
      frobenius(step.parent) + kFrameSlope * norm(step.direction.a) + frobenius(step.childB - step.childC);
  return out;
}

}  // namespace fixtures

#pragma once

// Budget planner for the recursive construction. Each round of splittings gets a
// target frame fraction; the planner picks them to keep the cell count low while
// the modelled transition area stays under a target.

#include <vector>

#include "lamcert/geometry.hpp"
#include "lamcert/laminate.hpp"

namespace lamcert::detail {

/// Consecutive steps handled together: the +- halves of one splitting.
struct Round {
  std::vector<std::size_t> steps;
};

std::vector<Round> group_rounds(const SplitTree& tree);

struct Plan {
  std::vector<double> fractions;  // per round; entry 0 (the root) is unused
  double transition = 0.0;        // modelled transition area fraction
  double cells = 0.0;             // modelled final cell count
  bool feasible = false;
};

/// Models every cell class as a rectangle aligned with the splitting normals;
/// suited to the diagonal family, where every normal is a coordinate axis.
Plan plan_rounds(const SplitTree& tree, const std::vector<Round>& rounds, const Box& domain_box,
                 int stripes, double frame_slope, double target_transition);

}  // namespace lamcert::detail

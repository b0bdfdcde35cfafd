#pragma once

#include <span>
#include <vector>

#include "lamcert/mat2.hpp"

namespace lamcert {

/// Convex polygon, counterclockwise.
struct Polygon {
  std::vector<Vec2> vertices;

  std::size_t size() const { return vertices.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices[i]; }
  const Vec2& next(std::size_t i) const { return vertices[(i + 1) % vertices.size()]; }
};

double signed_area(const Polygon& poly);
double area(const Polygon& poly);
Vec2 centroid(const Polygon& poly);
double diameter(const Polygon& poly);
double perimeter(const Polygon& poly);

struct Box {
  Vec2 lo;
  Vec2 hi;
};
Box bounding_box(const Polygon& poly);

/// Half-plane {x : dot(normal, x) <= offset}.
struct HalfPlane {
  Vec2 normal;
  double offset = 0.0;
};

/// Sutherland-Hodgman clip of a convex polygon against one half-plane.
Polygon clip(const Polygon& poly, const HalfPlane& h);

/// Closed containment test with an absolute slack.
bool contains(const Polygon& poly, const Vec2& x, double slack);

/// Distance from x to the segment [a, b].
double segment_distance(const Vec2& x, const Vec2& a, const Vec2& b);

/// Reasons a polygon fails to be a valid cell.
struct PolygonCheck {
  bool convex = true;
  bool positive_area = true;
  bool distinct_vertices = true;
  bool ok() const { return convex && positive_area && distinct_vertices; }
};
/// Size of coordinate rounding error for points of this polygon: a small
/// multiple of machine epsilon times the largest coordinate.
double rounding_scale(const Polygon& poly);

PolygonCheck check_polygon(const Polygon& poly, double rel_tol = 1e-12);

/// Uniform bucket grid over polygon bounding boxes for point location.
class PolygonGrid {
 public:
  PolygonGrid() = default;
  /// `boxes[i]` bounds polygon i; `extent` bounds all of them.
  PolygonGrid(const std::vector<Box>& boxes, const Box& extent, double cells_per_item = 1.0);

  /// Indices of polygons whose box bucket covers x, in increasing order.
  std::span<const std::size_t> candidates(const Vec2& x) const;

 private:
  std::size_t bucket(const Vec2& x) const;

  Box extent_{};
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  double sx_ = 0.0;
  double sy_ = 0.0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

Polygon unit_square();
/// Regular n-gon inscribed in the circle of the given radius about the origin.
Polygon regular_polygon(int n, double radius = 1.0);

}  // namespace lamcert

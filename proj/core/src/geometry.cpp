#include "lamcert/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lamcert {

double signed_area(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  // Shoelace about the first vertex to limit cancellation far from the origin.
  const Vec2 o = poly[0];
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) acc += cross(poly[i] - o, poly[i + 1] - o);
  return 0.5 * acc;
}

double area(const Polygon& poly) { return std::abs(signed_area(poly)); }

Vec2 centroid(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n == 0) return {};
  const Vec2 o = poly[0];
  double a = 0.0;
  Vec2 c;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 p = poly[i] - o;
    const Vec2 q = poly[i + 1] - o;
    const double t = cross(p, q);
    a += t;
    c += (p + q) * t;
  }
  if (a == 0.0) {
    Vec2 mean;
    for (const auto& v : poly.vertices) mean += v;
    return mean * (1.0 / static_cast<double>(n));
  }
  return o + c * (1.0 / (3.0 * a));
}

double diameter(const Polygon& poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, norm(poly[i] - poly[j]));
  }
  return d;
}

double perimeter(const Polygon& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) s += norm(poly.next(i) - poly[i]);
  return s;
}

Box bounding_box(const Polygon& poly) {
  Box b{poly[0], poly[0]};
  for (const auto& v : poly.vertices) {
    b.lo.x = std::min(b.lo.x, v.x);
    b.lo.y = std::min(b.lo.y, v.y);
    b.hi.x = std::max(b.hi.x, v.x);
    b.hi.y = std::max(b.hi.y, v.y);
  }
  return b;
}

Polygon clip(const Polygon& poly, const HalfPlane& h) {
  Polygon out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  out.vertices.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly.next(i);
    const double fp = dot(h.normal, p) - h.offset;
    const double fq = dot(h.normal, q) - h.offset;
    if (fp <= 0.0) out.vertices.push_back(p);
    if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
      const double t = fp / (fp - fq);
      out.vertices.push_back(p + (q - p) * t);
    }
  }
  return out;
}

bool contains(const Polygon& poly, const Vec2& x, double slack) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = poly.next(i) - poly[i];
    const double len = norm(e);
    if (len == 0.0) continue;
    if (cross(e, x - poly[i]) / len < -slack) return false;
  }
  return true;
}

double segment_distance(const Vec2& x, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double ee = dot(e, e);
  double t = ee > 0.0 ? dot(x - a, e) / ee : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(x - (a + e * t));
}

double rounding_scale(const Polygon& poly) {
  double m = 0.0;
  for (const auto& v : poly.vertices) m = std::max({m, std::abs(v.x), std::abs(v.y)});
  return 64.0 * std::numeric_limits<double>::epsilon() * m;
}

PolygonCheck check_polygon(const Polygon& poly, double rel_tol) {
  PolygonCheck c;
  const std::size_t n = poly.size();
  if (n < 3) {
    c.positive_area = false;
    return c;
  }
  const double diam = diameter(poly);
  const double tol = std::max(rel_tol * diam, rounding_scale(poly));
  for (std::size_t i = 0; i < n; ++i) {
    if (norm(poly.next(i) - poly[i]) <= tol) c.distinct_vertices = false;
  }
  if (!(signed_area(poly) > tol * diam)) c.positive_area = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e1 = poly.next(i) - poly[i];
    const Vec2 e2 = poly[(i + 2) % n] - poly.next(i);
    if (cross(e1, e2) < -tol * diam) c.convex = false;
  }
  return c;
}

PolygonGrid::PolygonGrid(const std::vector<Box>& boxes, const Box& extent, double cells_per_item)
    : extent_(extent) {
  const double w = std::max(extent.hi.x - extent.lo.x, 1e-300);
  const double h = std::max(extent.hi.y - extent.lo.y, 1e-300);
  const double target = std::max(1.0, cells_per_item * static_cast<double>(boxes.size()));
  const double side = std::sqrt(w * h / target);
  nx_ = static_cast<std::size_t>(std::clamp(std::ceil(w / side), 1.0, 1e5));
  ny_ = static_cast<std::size_t>(std::clamp(std::ceil(h / side), 1.0, 1e5));
  sx_ = static_cast<double>(nx_) / w;
  sy_ = static_cast<double>(ny_) / h;

  auto range = [&](const Box& b) {
    auto ix = [&](double x) {
      const double t = std::floor((x - extent_.lo.x) * sx_);
      return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(nx_ - 1)));
    };
    auto iy = [&](double y) {
      const double t = std::floor((y - extent_.lo.y) * sy_);
      return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(ny_ - 1)));
    };
    return std::array<std::size_t, 4>{ix(b.lo.x), ix(b.hi.x), iy(b.lo.y), iy(b.hi.y)};
  };

  std::vector<std::size_t> count(nx_ * ny_ + 1, 0);
  for (const auto& b : boxes) {
    const auto r = range(b);
    for (std::size_t j = r[2]; j <= r[3]; ++j)
      for (std::size_t i = r[0]; i <= r[1]; ++i) ++count[j * nx_ + i + 1];
  }
  for (std::size_t k = 1; k < count.size(); ++k) count[k] += count[k - 1];
  start_ = count;
  items_.resize(count.back());
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    const auto r = range(boxes[n]);
    for (std::size_t j = r[2]; j <= r[3]; ++j)
      for (std::size_t i = r[0]; i <= r[1]; ++i) items_[count[j * nx_ + i]++] = n;
  }
}

std::size_t PolygonGrid::bucket(const Vec2& x) const {
  const double tx = std::floor((x.x - extent_.lo.x) * sx_);
  const double ty = std::floor((x.y - extent_.lo.y) * sy_);
  const auto i = static_cast<std::size_t>(std::clamp(tx, 0.0, static_cast<double>(nx_ - 1)));
  const auto j = static_cast<std::size_t>(std::clamp(ty, 0.0, static_cast<double>(ny_ - 1)));
  return j * nx_ + i;
}

std::span<const std::size_t> PolygonGrid::candidates(const Vec2& x) const {
  if (start_.empty()) return {};
  const std::size_t k = bucket(x);
  return {items_.data() + start_[k], start_[k + 1] - start_[k]};
}

Polygon unit_square() { return Polygon{{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}}; }

Polygon regular_polygon(int n, double radius) {
  if (n < 3) throw std::invalid_argument("regular_polygon needs at least 3 vertices");
  Polygon poly;
  poly.vertices.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    poly.vertices.push_back({radius * std::cos(t), radius * std::sin(t)});
  }
  return poly;
}

}  // namespace lamcert

#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace lamcert {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::sqrt(v.x * v.x + v.y * v.y); }
/// Counterclockwise rotation by a quarter turn.
constexpr Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

/// Real 2x2 matrix. Row 1 holds grad u, row 2 holds grad v.
struct Mat2 {
  double m11 = 0.0;
  double m12 = 0.0;
  double m21 = 0.0;
  double m22 = 0.0;

  constexpr Mat2() = default;
  constexpr Mat2(double a, double b, double c, double d) : m11(a), m12(b), m21(c), m22(d) {}

  static constexpr Mat2 diag(double a, double d) { return {a, 0.0, 0.0, d}; }
  /// Outer product a n^T.
  static constexpr Mat2 outer(const Vec2& a, const Vec2& n) {
    return {a.x * n.x, a.x * n.y, a.y * n.x, a.y * n.y};
  }

  constexpr Vec2 row1() const { return {m11, m12}; }
  constexpr Vec2 row2() const { return {m21, m22}; }

  constexpr Mat2 operator+(const Mat2& o) const {
    return {m11 + o.m11, m12 + o.m12, m21 + o.m21, m22 + o.m22};
  }
  constexpr Mat2 operator-(const Mat2& o) const {
    return {m11 - o.m11, m12 - o.m12, m21 - o.m21, m22 - o.m22};
  }
  constexpr Mat2 operator-() const { return {-m11, -m12, -m21, -m22}; }
  constexpr Mat2 operator*(double s) const { return {m11 * s, m12 * s, m21 * s, m22 * s}; }
  constexpr Vec2 operator*(const Vec2& v) const {
    return {m11 * v.x + m12 * v.y, m21 * v.x + m22 * v.y};
  }
  constexpr Mat2& operator+=(const Mat2& o) {
    m11 += o.m11;
    m12 += o.m12;
    m21 += o.m21;
    m22 += o.m22;
    return *this;
  }
  constexpr bool operator==(const Mat2&) const = default;

  constexpr double det() const { return m11 * m22 - m12 * m21; }
  constexpr std::array<double, 4> entries() const { return {m11, m12, m21, m22}; }

  bool finite() const {
    return std::isfinite(m11) && std::isfinite(m12) && std::isfinite(m21) && std::isfinite(m22);
  }
};

constexpr Mat2 operator*(double s, const Mat2& m) { return m * s; }

inline double frobenius(const Mat2& m) {
  return std::sqrt(m.m11 * m.m11 + m.m12 * m.m12 + m.m21 * m.m21 + m.m22 * m.m22);
}

inline double max_abs_entry(const Mat2& m) {
  return std::max(std::max(std::abs(m.m11), std::abs(m.m12)),
                  std::max(std::abs(m.m21), std::abs(m.m22)));
}

}  // namespace lamcert

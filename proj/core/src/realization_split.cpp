#include "realization_split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace lamcert::detail {

Lamination canonical(const SplitStep& step) {
  Lamination l{step.direction.a, step.direction.n, step.lambda,
               step.childB,      step.childC,      step.childB_label,
               step.childC_label};
  if (l.a.x < 0.0 || (l.a.x == 0.0 && l.a.y < 0.0)) {
    l.a = -l.a;
    std::swap(l.first, l.second);
    std::swap(l.first_label, l.second_label);
    l.lambda = 1.0 - l.lambda;
  }
  return l;
}

void projection_range(const Polygon& poly, const Vec2& n, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& v : poly.vertices) {
    const double s = dot(n, v);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
}

namespace {

Vec2 inward_normal(const Polygon& poly, std::size_t j) {
  const Vec2 e = poly.next(j) - poly[j];
  return perp(e) * (1.0 / norm(e));
}

// Drops repeated vertices and vertices that only rounding makes non-convex;
// returns false when nothing of positive area is left.
bool clean(Polygon& poly, double len_tol, double area_tol) {
  auto& v = poly.vertices;
  if (v.size() < 3) return false;
  const double noise = rounding_scale(poly);
  // Merge anything the polygon check would call a repeated vertex.
  len_tol = std::max({len_tol, 2e-12 * diameter(poly), 2.0 * noise});
  std::vector<Vec2> kept;
  kept.reserve(v.size());
  for (const auto& x : v) {
    if (kept.empty() || norm(x - kept.back()) > len_tol) kept.push_back(x);
  }
  while (kept.size() > 1 && norm(kept.front() - kept.back()) <= len_tol) kept.pop_back();
  bool changed = true;
  while (changed && kept.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < kept.size() && kept.size() >= 3; ++i) {
      const Vec2& a = kept[(i + kept.size() - 1) % kept.size()];
      const Vec2& b = kept[i];
      const Vec2& c = kept[(i + 1) % kept.size()];
      const Vec2 e1 = b - a;
      const Vec2 e2 = c - b;
      if (cross(e1, e2) < 4.0 * noise * (norm(e1) + norm(e2))) {
        kept.erase(kept.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
    }
  }
  v = std::move(kept);
  if (v.size() < 3) return false;
  return signed_area(poly) > area_tol;
}

}  // namespace

EdgeFlags isolated_flags(const Polygon& region, const Vec2& n) {
  EdgeFlags f;
  f.framed.resize(region.size());
  f.clamped.assign(region.size(), 1);
  for (std::size_t j = 0; j < region.size(); ++j) {
    const Vec2 nu = inward_normal(region, j);
    f.framed[j] = std::abs(dot(nu, n)) >= 1.0 - 1e-12 ? 0 : 1;
  }
  return f;
}

Sawtooth fitted_sawtooth(const Polygon& region, const Vec2& n, double target_eps,
                         long max_periods) {
  double lo = 0.0;
  double hi = 0.0;
  projection_range(region, n, lo, hi);
  const double len = hi - lo;
  Sawtooth s;
  s.s0 = lo;
  double m = std::isfinite(target_eps) && target_eps > 0.0 ? std::ceil(len / target_eps - 1e-9) : 1.0;
  m = std::clamp(m, 1.0, static_cast<double>(max_periods));
  s.periods = static_cast<long>(m);
  s.eps = len / m;
  return s;
}

double framed_length(const Polygon& region, const EdgeFlags& flags) {
  double len = 0.0;
  for (std::size_t j = 0; j < region.size(); ++j) {
    if (flags.framed[j]) len += norm(region.next(j) - region[j]);
  }
  return len;
}

double split_cell(const CellData& parent, const Lamination& lam, const Sawtooth& saw,
                  const EdgeFlags& flags, double K, std::vector<Piece>& out) {
  const Polygon& region = parent.region;
  const std::size_t nv = region.size();
  const Vec2 n = lam.n;
  const Vec2 a = lam.a;
  const double lambda = lam.lambda;
  const double diam = diameter(region);
  const double len_tol = 1e-13 * diam;
  const double area_tol = 1e-14 * area(region);
  const double on_tol = std::max(1e-11 * diam, 4.0 * rounding_scale(region));

  struct Edge {
    Vec2 nu;
    double o;
  };
  std::vector<Edge> frames;
  for (std::size_t j = 0; j < nv; ++j) {
    if (!flags.framed[j]) continue;
    const Vec2 nu = inward_normal(region, j);
    frames.push_back({nu, dot(nu, region[j])});
  }

  // g(x) = min(h(n.x), K min_j d_j(x)) evaluated directly; used for vertex values
  // that do not sit on a clamped parent edge.
  auto g_at = [&](const Vec2& x) {
    const double s = dot(n, x);
    double k = std::floor((s - saw.s0) / saw.eps);
    k = std::clamp(k, 0.0, static_cast<double>(saw.periods - 1));
    const double t = s - (saw.s0 + k * saw.eps);
    double h = t <= lambda * saw.eps ? (1.0 - lambda) * t : lambda * (saw.eps - t);
    h = std::max(h, 0.0);
    for (const auto& e : frames) h = std::min(h, K * std::max(dot(e.nu, x) - e.o, 0.0));
    return h;
  };

  auto vertex_value = [&](const Vec2& x) {
    long best = -1;
    double best_d = on_tol;
    double best_t = 0.0;
    for (std::size_t j = 0; j < nv; ++j) {
      if (!flags.clamped[j]) continue;
      const Vec2 p = region[j];
      const Vec2 e = region.next(j) - p;
      const double ee = dot(e, e);
      if (ee == 0.0) continue;
      const double t = dot(x - p, e) / ee;
      if (t < -1e-12 || t > 1.0 + 1e-12) continue;
      const double d = std::abs(cross(e, x - p)) / std::sqrt(ee);
      if (d <= best_d) {
        best_d = d;
        best = static_cast<long>(j);
        best_t = std::clamp(t, 0.0, 1.0);
      }
    }
    if (best >= 0) {
      const std::size_t j = static_cast<std::size_t>(best);
      const Vec2& v0 = parent.values[j];
      const Vec2& v1 = parent.values[(j + 1) % nv];
      if (norm(x - region[j]) <= on_tol) return v0;
      if (norm(x - region.next(j)) <= on_tol) return v1;
      return v0 * (1.0 - best_t) + v1 * best_t;
    }
    return parent.gradient * x + parent.offset + a * g_at(x);
  };

  auto emit = [&](Polygon&& poly, const Mat2& grad, const Vec2& offset, PieceKind kind) {
    if (!clean(poly, len_tol, area_tol)) return 0.0;
    Piece piece;
    piece.kind = kind;
    piece.cell.gradient = grad;
    piece.cell.offset = offset;
    piece.cell.values.reserve(poly.size());
    for (const auto& x : poly.vertices) piece.cell.values.push_back(vertex_value(x));
    const double ar = area(poly);
    piece.cell.region = std::move(poly);
    out.push_back(std::move(piece));
    return ar;
  };

  double frame_area = 0.0;
  for (long k = 0; k < saw.periods; ++k) {
    const double sk = saw.s0 + static_cast<double>(k) * saw.eps;
    for (int part = 0; part < 2; ++part) {
      const bool rising = part == 0;
      const double lo = rising ? sk : sk + lambda * saw.eps;
      const double hi = rising ? sk + lambda * saw.eps : sk + saw.eps;
      Polygon slab = region;
      if (k > 0 || !rising) slab = clip(slab, {-n, -lo});
      if (k + 1 < saw.periods || rising) slab = clip(slab, {n, hi});
      if (slab.size() < 3) continue;

      // h = sigma (n.x) + tau on this slab.
      const double sigma = rising ? 1.0 - lambda : -lambda;
      const double tau = rising ? -(1.0 - lambda) * sk : lambda * (sk + saw.eps);

      Polygon child = slab;
      for (const auto& e : frames) {
        child = clip(child, {n * sigma - e.nu * K, -tau - K * e.o});
        if (child.size() < 3) break;
      }
      const Mat2& grad = rising ? lam.first : lam.second;
      emit(std::move(child), grad, parent.offset + a * tau,
           rising ? PieceKind::First : PieceKind::Second);

      for (std::size_t f = 0; f < frames.size(); ++f) {
        const Edge& e = frames[f];
        double excess = -std::numeric_limits<double>::infinity();
        for (const auto& x : slab.vertices) {
          excess = std::max(excess, sigma * dot(n, x) + tau - K * (dot(e.nu, x) - e.o));
        }
        if (!(excess > 0.0)) continue;
        Polygon piece = clip(slab, {e.nu * K - n * sigma, K * e.o + tau});
        for (std::size_t o = 0; o < frames.size() && piece.size() >= 3; ++o) {
          if (o == f) continue;
          const Edge& d = frames[o];
          // nearest framed edge wins
          piece = clip(piece, {e.nu - d.nu, e.o - d.o});
        }
        frame_area += emit(std::move(piece), parent.gradient + Mat2::outer(a, e.nu * K),
                           parent.offset - a * (K * e.o), PieceKind::Frame);
      }
    }
  }
  return frame_area;
}

}  // namespace lamcert::detail

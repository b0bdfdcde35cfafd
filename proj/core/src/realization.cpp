#include "lamcert/realization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "realization_plan.hpp"
#include "realization_split.hpp"

namespace lamcert {

using detail::CellData;
using detail::EdgeFlags;
using detail::Lamination;
using detail::Piece;
using detail::PieceKind;
using detail::Sawtooth;

std::string to_string(DomainKind kind) { return kind == DomainKind::Square ? "square" : "disk64"; }

DomainKind parse_domain(const std::string& text) {
  if (text == "square") return DomainKind::Square;
  if (text == "disk64") return DomainKind::Disk64;
  throw std::invalid_argument("unknown domain '" + text + "' (expected square or disk64)");
}

Polygon make_domain(DomainKind kind) {
  return kind == DomainKind::Square ? unit_square() : regular_polygon(64, 1.0);
}

namespace {

constexpr long kMaxPeriods = 10'000'000;

struct WorkCell {
  CellData data;
  AtomLabel label;
  bool frame = false;
};

Box inflate(Box b, double pad) {
  b.lo = b.lo - Vec2{pad, pad};
  b.hi = b.hi + Vec2{pad, pad};
  return b;
}

double lamination_norm_bound(const SplitStep& s, double K) {
  return frobenius(s.parent) + std::max(K, 2.0) * frobenius(s.childB - s.childC);
}

struct RoundResult {
  std::vector<Piece> pieces;
  std::vector<std::size_t> owner;  // member index per piece
  double frame_area = 0.0;
  double period = 0.0;
  long periods = 0;
};

struct Builder {
  const SplitTree& tree;
  const Laminate& lam;
  const Polygon& domain;
  int stripes;
  RealizeOptions opts;
  double domain_area;

  std::vector<WorkCell> cells;

  RoundResult run_isolated(const std::vector<std::size_t>& members,
                           const std::vector<Lamination>& lams, double target_eps, bool pinned) {
    RoundResult res;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const WorkCell& c = cells[members[k]];
      const Lamination& l = lams[k];
      const EdgeFlags flags = detail::isolated_flags(c.data.region, l.n);
      Sawtooth saw;
      if (pinned) {
        double lo = 0.0;
        double hi = 0.0;
        detail::projection_range(c.data.region, l.n, lo, hi);
        saw = {lo, (hi - lo) / stripes, stripes};
      } else {
        saw = detail::fitted_sawtooth(c.data.region, l.n, target_eps, kMaxPeriods);
      }
      const std::size_t before = res.pieces.size();
      res.frame_area += detail::split_cell(c.data, l, saw, flags, opts.frame_slope, res.pieces);
      res.owner.resize(res.pieces.size(), k);
      res.period = std::max(res.period, saw.eps);
      res.periods += saw.periods;
      if (cells.size() + res.pieces.size() - before > opts.max_cells + members.size()) {
        throw InfeasibleBudget("cell cap exceeded", std::numeric_limits<double>::quiet_NaN());
      }
    }
    return res;
  }

  double isolated_eps(const std::vector<std::size_t>& members, const std::vector<Lamination>& lams,
                      double fraction) {
    double total_area = 0.0;
    double framed = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      const Polygon& poly = cells[members[k]].data.region;
      total_area += area(poly);
      framed += detail::framed_length(poly, detail::isolated_flags(poly, lams[k].n));
    }
    const double lf = lams[0].lambda * (1.0 - lams[0].lambda);
    if (framed <= 0.0) return std::numeric_limits<double>::infinity();
    return 2.0 * opts.frame_slope * fraction * total_area / (lf * framed);
  }

  // Runs all rounds; returns the total frame area.
  double build(const std::vector<detail::Round>& rounds, const std::vector<double>& fractions,
               RealizeStats* stats) {
    cells.clear();
    WorkCell root;
    root.data.region = domain;
    root.data.values.assign(domain.size(), Vec2{0.0, 0.0});
    root.data.gradient = tree.root;
    root.label = tree.root_label;
    cells.push_back(std::move(root));

    double frame_total = 0.0;
    for (std::size_t r = 0; r < rounds.size(); ++r) {
      const detail::Round& round = rounds[r];
      std::vector<std::size_t> members;
      std::vector<Lamination> lams;
      std::map<AtomLabel, std::size_t> step_of;
      for (std::size_t s : round.steps) step_of[tree.steps[s].parent_label] = s;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const WorkCell& c = cells[i];
        if (c.frame) continue;
        auto it = step_of.find(c.label);
        if (it == step_of.end()) continue;
        const SplitStep& step = tree.steps[it->second];
        if (!(c.data.gradient == step.parent)) {
          throw std::logic_error("cell labelled " + c.label.str() + " does not carry its matrix");
        }
        members.push_back(i);
        lams.push_back(detail::canonical(step));
      }
      RoundStats rs;
      for (std::size_t s : round.steps) {
        if (!rs.parents.empty()) rs.parents += ",";
        rs.parents += tree.steps[s].parent_label.str();
      }
      rs.cells_in = members.size();
      rs.target_fraction = r == 0 ? 0.0 : fractions[r];
      if (members.empty()) {
        if (stats) stats->rounds.push_back(rs);
        continue;
      }

      const double eps = r == 0 ? 0.0 : isolated_eps(members, lams, fractions[r]);
      RoundResult res = run_isolated(members, lams, eps, r == 0);

      // Splice: replace every member by its pieces, keep everything else in place.
      std::vector<WorkCell> next;
      next.reserve(cells.size() - members.size() + res.pieces.size());
      std::size_t mi = 0;
      std::size_t pi = 0;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (mi < members.size() && members[mi] == i) {
          const Lamination& l = lams[mi];
          while (pi < res.pieces.size() && res.owner[pi] == mi) {
            Piece& p = res.pieces[pi];
            WorkCell w;
            w.data = std::move(p.cell);
            w.frame = p.kind == PieceKind::Frame;
            w.label = p.kind == PieceKind::First ? l.first_label : l.second_label;
            next.push_back(std::move(w));
            ++pi;
          }
          ++mi;
        } else {
          next.push_back(std::move(cells[i]));
        }
      }
      cells = std::move(next);
      frame_total += res.frame_area;

      rs.period = res.period;
      rs.periods = res.periods;
      rs.cells_out = res.pieces.size();
      rs.transition_area = res.frame_area / domain_area;
      if (stats) stats->rounds.push_back(rs);
    }
    return frame_total;
  }
};

std::optional<AtomLabel> nearest_atom(const Mat2& g, const Laminate& lam, double delta) {
  const Atom* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& atom : lam.atoms) {
    const double d = frobenius(g - atom.matrix);
    if (d < best_d) {
      best_d = d;
      best = &atom;
    }
  }
  if (best && best_d < delta) return best->label;
  return std::nullopt;
}

void require_realization_inputs(const Laminate& lam, double delta, double eta, int stripes) {
  if (!(eta > 0.0 && eta < 0.5)) throw std::domain_error("eta must lie in (0, 0.5)");
  if (stripes < 2) throw std::domain_error("stripes must be at least 2");
  const double dist = min_support_distance(lam);
  if (!(delta > 0.0 && delta < dist / 2.0)) {
    std::ostringstream os;
    os << "delta must lie in (0, min_support_distance/2) = (0, " << dist / 2.0 << ")";
    throw std::domain_error(os.str());
  }
}

// Target transition area: the stripes set the refinement, eta caps it.
double transition_target(double eta, int stripes) {
  return std::min(0.8 * eta, 1.28 / stripes);
}

}  // namespace

std::vector<AffineCell> simple_laminate_patch(const AffineCell& cell, const SplitStep& step,
                                              int stripes, double eta_local) {
  if (stripes < 1) throw std::domain_error("stripes must be positive");
  const double scale =
      std::max({1.0, max_abs_entry(step.parent), max_abs_entry(step.childB), max_abs_entry(step.childC)});
  if (max_abs_entry(cell.gradient - step.parent) > 1e-10 * scale) {
    throw std::domain_error("cell gradient does not match the splitting parent");
  }
  if (cell.values.size() != cell.region.size()) {
    throw std::invalid_argument("cell values must match its vertices");
  }
  const Lamination l = detail::canonical(step);
  const EdgeFlags flags = detail::isolated_flags(cell.region, l.n);
  CellData data{cell.region, cell.values, cell.gradient, cell.offset};
  double lo = 0.0;
  double hi = 0.0;
  detail::projection_range(cell.region, l.n, lo, hi);
  const double cell_area = area(cell.region);

  auto attempt = [&](int m, std::vector<Piece>& pieces) {
    pieces.clear();
    const Sawtooth saw{lo, (hi - lo) / m, m};
    return detail::split_cell(data, l, saw, flags, kFrameSlope, pieces) / cell_area;
  };

  std::vector<Piece> pieces;
  const double frac = attempt(stripes, pieces);
  if (frac > eta_local) {
    // Frame area falls like 1/stripes; confirm the estimate by construction.
    int m = std::max(stripes + 1, static_cast<int>(std::ceil(stripes * frac / eta_local)));
    std::vector<Piece> probe;
    while (m < 100'000'000 && attempt(m, probe) > eta_local) m = m + std::max(1, m / 8);
    std::ostringstream os;
    os << "transition fraction " << frac << " exceeds eta_local " << eta_local << " with "
       << stripes << " stripes; at least " << m << " stripes are needed";
    throw InsufficientStripes(os.str(), m);
  }
  std::vector<AffineCell> out;
  out.reserve(pieces.size());
  for (auto& p : pieces) {
    AffineCell c;
    c.region = std::move(p.cell.region);
    c.values = std::move(p.cell.values);
    c.gradient = p.cell.gradient;
    c.offset = p.cell.offset;
    if (p.kind == PieceKind::First) c.tag = l.first_label;
    if (p.kind == PieceKind::Second) c.tag = l.second_label;
    out.push_back(std::move(c));
  }
  return out;
}

PWAffineMap realize_laminate(const Polygon& domain, DomainKind kind, const SplitTree& tree,
                             const Laminate& lam, double delta, double eta, int stripes,
                             const RealizeOptions& options, RealizeStats* stats) {
  require_realization_inputs(lam, delta, eta, stripes);
  if (!(options.frame_slope > 0.0 && options.frame_slope <= 2.0)) {
    throw std::domain_error("frame slope must lie in (0, 2]");
  }
  const ValidationReport tree_report = validate_split_tree(tree, lam);
  if (!tree_report.ok()) throw std::domain_error("split tree fails validation");

  PWAffineMap map;
  map.domain = domain;
  map.domain_kind = kind;
  map.delta = delta;
  map.eta = eta;
  map.stripes = stripes;
  for (const auto& s : tree.steps) {
    map.lipschitz_bound = std::max(map.lipschitz_bound, lamination_norm_bound(s, options.frame_slope));
  }
  for (const auto& a : lam.atoms) map.lipschitz_bound = std::max(map.lipschitz_bound, frobenius(a.matrix));

  const std::vector<detail::Round> rounds = detail::group_rounds(tree);
  const Box box = bounding_box(domain);
  const double domain_area = area(domain);
  const double K = options.frame_slope;

  auto plan_for = [&](double target) {
    return detail::plan_rounds(tree, rounds, box, stripes, K, target);
  };
  // Model cells may undershoot the built count; `share` of the cap leaves room.
  double share = 0.7;
  auto plan_fits = [&](const detail::Plan& p) {
    return p.feasible && p.cells <= share * static_cast<double>(options.max_cells);
  };
  auto fits = [&](double e) { return plan_fits(plan_for(0.8 * e)); };
  // Smallest eta whose plan fits the cell cap, for error reports; NaN if none below 0.5.
  auto achievable = [&]() {
    double lo = eta;
    double hi = eta;
    while (!fits(hi)) {
      lo = hi;
      if (hi >= 0.5) return std::numeric_limits<double>::quiet_NaN();
      hi = std::min(2.0 * hi, 0.5);
    }
    if (hi == eta) return eta;
    for (int k = 0; k < 16; ++k) {
      const double mid = 0.5 * (lo + hi);
      (fits(mid) ? hi : lo) = mid;
    }
    return hi;
  };
  auto describe = [](double e) {
    std::ostringstream os;
    if (std::isnan(e)) {
      os << "no eta below 0.5 is achievable";
    } else {
      os << "achievable eta is about " << e;
    }
    return os.str();
  };

  double target = transition_target(eta, stripes);
  Builder builder{tree, lam, domain, stripes, options, domain_area, {}};
  RealizeStats local;
  RealizeStats& st = stats ? *stats : local;
  for (int attempt = 1; attempt <= 4; ++attempt) {
    detail::Plan plan = plan_for(target);
    if (attempt == 1 && !plan_fits(plan) && target < 0.8 * eta) {
      // The stripes only refine what the budget allows.
      target = 0.8 * eta;
      plan = plan_for(target);
    }
    st = RealizeStats{};
    st.planned_transition = plan.transition;
    st.planned_cells = plan.cells;
    st.attempts = attempt;
    if (!plan_fits(plan)) {
      const double e = achievable();
      std::ostringstream os;
      os << "transition budget eta = " << eta << " is infeasible with " << stripes
         << " stripes at order " << lam.order << " within " << options.max_cells
         << " cells; " << describe(e);
      throw InfeasibleBudget(os.str(), e);
    }
    double frame_area = 0.0;
    try {
      frame_area = builder.build(rounds, plan.fractions, &st);
    } catch (const InfeasibleBudget&) {
      share = 0.35;
      const double e = achievable();
      std::ostringstream os;
      os << "cell cap " << options.max_cells << " exceeded at eta = " << eta << " with " << stripes
         << " stripes; " << describe(e);
      throw InfeasibleBudget(os.str(), e);
    }
    if (frame_area / domain_area <= 0.95 * eta || attempt == 4) break;
    target *= 0.7;
  }

  map.cells.reserve(builder.cells.size());
  for (auto& w : builder.cells) {
    AffineCell c;
    c.region = std::move(w.data.region);
    c.values = std::move(w.data.values);
    c.gradient = w.data.gradient;
    c.offset = w.data.offset;
    c.tag = nearest_atom(c.gradient, lam, delta);
    map.cells.push_back(std::move(c));
  }
  builder.cells.clear();
  builder.cells.shrink_to_fit();

  const double tf = transition_fraction(map);
  if (tf > eta) {
    std::ostringstream os;
    os << "transition fraction " << tf << " exceeds eta = " << eta;
    throw InfeasibleBudget(os.str(), tf / 0.8);
  }
  return map;
}

double Histogram::total() const {
  double sum = transition;
  for (double f : fractions) sum += f;
  return sum;
}

std::optional<double> Histogram::fraction(const AtomLabel& label) const {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label) return fractions[k];
  }
  return std::nullopt;
}

Histogram gradient_histogram(const PWAffineMap& map, const Laminate& lam, double delta) {
  Histogram h;
  std::map<AtomLabel, std::size_t> index;
  for (const auto& a : lam.atoms) {
    index[a.label] = h.labels.size();
    h.labels.push_back(a.label);
  }
  // Compensated sums; slot 0 holds the transition area.
  std::vector<double> acc(h.labels.size() + 1, 0.0);
  std::vector<double> comp(acc.size(), 0.0);
  auto add = [&](std::size_t k, double x) {
    const double y = x - comp[k];
    const double t = acc[k] + y;
    comp[k] = (t - acc[k]) - y;
    acc[k] = t;
  };
  for (const auto& c : map.cells) {
    const auto tag = nearest_atom(c.gradient, lam, delta);
    add(tag ? index[*tag] + 1 : 0, area(c.region));
  }
  double total = 0.0;
  for (double a : acc) total += a;
  h.fractions.assign(h.labels.size(), 0.0);
  if (total > 0.0) {
    for (std::size_t k = 0; k < h.labels.size(); ++k) h.fractions[k] = acc[k + 1] / total;
    h.transition = acc[0] / total;
  }
  return h;
}

double transition_fraction(const PWAffineMap& map) {
  double trans = 0.0;
  double total = 0.0;
  for (const auto& c : map.cells) {
    const double ar = area(c.region);
    total += ar;
    if (!c.tag) trans += ar;
  }
  return total > 0.0 ? trans / total : 0.0;
}

std::string to_string(MapViolationKind kind) {
  switch (kind) {
    case MapViolationKind::Tiling: return "tiling";
    case MapViolationKind::Overlap: return "overlap";
    case MapViolationKind::Polygon: return "polygon";
    case MapViolationKind::Continuity: return "continuity";
    case MapViolationKind::Boundary: return "boundary";
    case MapViolationKind::Lipschitz: return "lipschitz";
    case MapViolationKind::Histogram: return "histogram";
  }
  return "unknown";
}

bool MapReport::has(MapViolationKind kind) const { return count(kind) > 0; }

std::size_t MapReport::count(MapViolationKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      violations.begin(), violations.end(), [kind](const MapViolation& v) { return v.kind == kind; }));
}

MapReport validate_map(const PWAffineMap& map, const Laminate* lam, std::size_t max_reported) {
  MapReport rep;
  std::size_t reported = 0;
  std::set<std::pair<int, long>> seen;
  auto flag = [&](MapViolationKind kind, long cell, long vertex, const std::string& msg) {
    if (reported >= max_reported) return;
    if (!seen.insert({static_cast<int>(kind), cell}).second) return;
    rep.violations.push_back({kind, cell, vertex, msg});
    ++reported;
  };

  const double dom_area = area(map.domain);
  const double diam = diameter(map.domain);
  const double L = std::max(map.lipschitz_bound, 1e-300);
  rep.continuity_scale = L * diam;
  const double tol = 1e-9 * rep.continuity_scale;
  const double slack = 1e-12 * diam;
  const auto& cells = map.cells;

  if (cells.empty()) {
    flag(MapViolationKind::Tiling, -1, -1, "map has no cells");
    return rep;
  }

  // Polygons, own-vertex values, Lipschitz bound.
  double area_sum = 0.0;
  std::vector<Box> boxes;
  boxes.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const AffineCell& c = cells[i];
    const long id = static_cast<long>(i);
    ++rep.checks;
    if (c.values.size() != c.region.size()) {
      flag(MapViolationKind::Polygon, id, -1, "vertex values do not match the polygon");
      boxes.push_back(inflate(bounding_box(c.region), slack));
      continue;
    }
    const PolygonCheck pc = check_polygon(c.region);
    if (!pc.ok()) {
      flag(MapViolationKind::Polygon, id, -1,
           std::string("cell polygon is ") + (!pc.convex ? "not convex" : !pc.positive_area ? "degenerate" : "repeating vertices"));
    }
    area_sum += area(c.region);
    ++rep.checks;
    if (frobenius(c.gradient) > L * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "gradient norm " << frobenius(c.gradient) << " exceeds the bound " << L;
      flag(MapViolationKind::Lipschitz, id, -1, os.str());
    }
    for (std::size_t v = 0; v < c.region.size(); ++v) {
      const double d = norm(c.eval(c.region[v]) - c.values[v]);
      rep.continuity_defect = std::max(rep.continuity_defect, d);
      if (d > tol) {
        std::ostringstream os;
        os << "affine map misses the vertex value by " << d;
        flag(MapViolationKind::Continuity, id, static_cast<long>(v), os.str());
      }
    }
    boxes.push_back(inflate(bounding_box(c.region), slack));
  }

  ++rep.checks;
  rep.area_error = std::abs(area_sum - dom_area) / dom_area;
  if (rep.area_error > 1e-9) {
    std::ostringstream os;
    os << "cell areas sum to " << area_sum << ", domain area " << dom_area;
    flag(MapViolationKind::Tiling, -1, -1, os.str());
  }

  const PolygonGrid grid(boxes, inflate(bounding_box(map.domain), 2.0 * slack), 4.0);
  auto in_box = [&](std::size_t j, const Vec2& x) {
    const Box& b = boxes[j];
    return x.x >= b.lo.x && x.x <= b.hi.x && x.y >= b.lo.y && x.y <= b.hi.y;
  };

  // Cells stay inside the domain; boundary vertices carry zero.
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const AffineCell& c = cells[i];
    if (c.values.size() != c.region.size()) continue;
    for (std::size_t v = 0; v < c.region.size(); ++v) {
      const Vec2 x = c.region[v];
      ++rep.checks;
      if (!contains(map.domain, x, slack)) {
        flag(MapViolationKind::Tiling, static_cast<long>(i), static_cast<long>(v), "vertex outside the domain");
        continue;
      }
      bool on_boundary = false;
      for (std::size_t e = 0; e < map.domain.size() && !on_boundary; ++e) {
        on_boundary = segment_distance(x, map.domain[e], map.domain.next(e)) <= slack;
      }
      if (on_boundary && !(c.values[v].x == 0.0 && c.values[v].y == 0.0)) {
        std::ostringstream os;
        os << "boundary vertex carries w = (" << c.values[v].x << ", " << c.values[v].y << ")";
        flag(MapViolationKind::Boundary, static_cast<long>(i), static_cast<long>(v), os.str());
      }
    }
  }

  // Continuity through shared points, and overlap through centroids.
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const AffineCell& c = cells[i];
    if (c.values.size() != c.region.size()) continue;
    for (std::size_t v = 0; v < c.region.size(); ++v) {
      const Vec2 x = c.region[v];
      for (std::size_t j : grid.candidates(x)) {
        if (j == i || !in_box(j, x)) continue;
        const AffineCell& o = cells[j];
        if (!contains(o.region, x, slack)) continue;
        ++rep.checks;
        const double d = norm(o.eval(x) - c.values[v]);
        rep.continuity_defect = std::max(rep.continuity_defect, d);
        if (d > tol) {
          std::ostringstream os;
          os << "w jumps by " << d << " against cell " << j << " at vertex " << v;
          flag(MapViolationKind::Continuity, static_cast<long>(i), static_cast<long>(v), os.str());
          flag(MapViolationKind::Continuity, static_cast<long>(j), -1, os.str());
        }
      }
    }
    const Vec2 g = centroid(c.region);
    for (std::size_t j : grid.candidates(g)) {
      if (j == i || !in_box(j, g)) continue;
      const Polygon& o = cells[j].region;
      ++rep.checks;
      // strictly inside another cell
      const Box& ob = boxes[j];
      if (contains(o, g, -1e-9 * norm(ob.hi - ob.lo))) {
        flag(MapViolationKind::Overlap, static_cast<long>(i), -1,
             "centroid lies inside cell " + std::to_string(j));
      }
    }
  }

  rep.transition_fraction = transition_fraction(map);
  ++rep.checks;
  if (map.eta > 0.0 && rep.transition_fraction > map.eta) {
    std::ostringstream os;
    os << "transition fraction " << rep.transition_fraction << " exceeds eta " << map.eta;
    flag(MapViolationKind::Histogram, -1, -1, os.str());
  }
  if (lam) {
    ++rep.checks;
    const Histogram h = gradient_histogram(map, *lam, map.delta);
    if (std::abs(h.total() - 1.0) > 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << "histogram fractions sum to " << h.total();
      flag(MapViolationKind::Histogram, -1, -1, os.str());
    }
  }
  return rep;
}

}  // namespace lamcert

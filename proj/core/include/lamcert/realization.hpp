#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lamcert/geometry.hpp"
#include "lamcert/laminate.hpp"

namespace lamcert {

enum class DomainKind { Square, Disk64 };
std::string to_string(DomainKind kind);
DomainKind parse_domain(const std::string& text);
/// Unit square, or the regular 64-gon inscribed in the unit disk.
Polygon make_domain(DomainKind kind);

struct AffineCell {
  Polygon region;
  Mat2 gradient;
  Vec2 offset;
  /// Atom within delta of the gradient; empty marks a transition cell.
  std::optional<AtomLabel> tag;
  /// w at each vertex of `region`. Vertices on the domain boundary hold exact zeros.
  std::vector<Vec2> values;

  Vec2 eval(const Vec2& x) const { return gradient * x + offset; }
};

struct PWAffineMap {
  Polygon domain;
  DomainKind domain_kind = DomainKind::Square;
  std::vector<AffineCell> cells;
  double delta = 0.0;
  double eta = 0.0;
  int stripes = 0;
  /// Upper bound for the Frobenius norm of every cell gradient.
  double lipschitz_bound = 0.0;
};

struct RealizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The transition budget cannot be met with the given stripes, order and cell cap.
struct InfeasibleBudget : RealizationError {
  InfeasibleBudget(const std::string& what, double achievable)
      : RealizationError(what), achievable_eta(achievable) {}
  double achievable_eta;
};

/// A single patch needs more stripes to keep its frame inside eta_local.
struct InsufficientStripes : RealizationError {
  InsufficientStripes(const std::string& what, int minimal)
      : RealizationError(what), minimal_stripes(minimal) {}
  int minimal_stripes;
};

/// Slope of the frame cut-off g = min(sawtooth, K * dist). Frame gradients are
/// parent + K a n_edge^T, which keeps every cell below |parent| + 2|a|.
inline constexpr double kFrameSlope = 2.0;

/// Simple laminate inside one convex cell: `stripes` sawtooth periods along
/// step.direction.n, with a frame of transition cells along every edge that is
/// not perpendicular to n. The cell's `values` must be set.
std::vector<AffineCell> simple_laminate_patch(const AffineCell& cell, const SplitStep& step,
                                              int stripes, double eta_local);

struct RealizeOptions {
  /// Hard cap on the emitted cell count.
  std::size_t max_cells = 3'000'000;
  double frame_slope = kFrameSlope;
};

struct RoundStats {
  std::string parents;  // e.g. "+E0,-E0"
  double target_fraction = 0.0;
  double period = 0.0;
  long periods = 0;
  std::size_t cells_in = 0;
  std::size_t cells_out = 0;
  double transition_area = 0.0;
};

struct RealizeStats {
  std::vector<RoundStats> rounds;
  double planned_transition = 0.0;
  double planned_cells = 0.0;
  int attempts = 0;
};

/// Applies the splittings of `tree` in order to every cell carrying the step's
/// parent label, starting from w = 0 on `domain`.
PWAffineMap realize_laminate(const Polygon& domain, DomainKind kind, const SplitTree& tree,
                             const Laminate& lam, double delta, double eta, int stripes,
                             const RealizeOptions& options = {}, RealizeStats* stats = nullptr);

struct Histogram {
  std::vector<AtomLabel> labels;   // laminate atom order
  std::vector<double> fractions;   // area fraction per atom
  double transition = 0.0;

  double total() const;
  std::optional<double> fraction(const AtomLabel& label) const;
};

/// Per-atom area fractions of cells whose gradient lies within delta of that atom.
Histogram gradient_histogram(const PWAffineMap& map, const Laminate& lam, double delta);

enum class MapViolationKind { Tiling, Overlap, Polygon, Continuity, Boundary, Lipschitz, Histogram };
std::string to_string(MapViolationKind kind);

struct MapViolation {
  MapViolationKind kind;
  long cell = -1;
  long vertex = -1;  // vertex index inside the cell, when applicable
  std::string message;
};

struct MapReport {
  std::vector<MapViolation> violations;
  std::size_t checks = 0;
  double area_error = 0.0;          // relative
  double continuity_defect = 0.0;   // max |w_i - w_j| over shared points
  double continuity_scale = 0.0;    // Lipschitz bound times diameter
  double transition_fraction = 0.0;

  bool ok() const { return violations.empty(); }
  bool has(MapViolationKind kind) const;
  std::size_t count(MapViolationKind kind) const;
};

/// Tiling, continuity, boundary values, Lipschitz bound and histogram sum.
/// The laminate is optional; without it the histogram check is skipped.
MapReport validate_map(const PWAffineMap& map, const Laminate* lam = nullptr,
                       std::size_t max_reported = 64);

/// Transition area fraction of the map under its own tags.
double transition_fraction(const PWAffineMap& map);

}  // namespace lamcert

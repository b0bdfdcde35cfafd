#pragma once

// Internal pieces of the realization shared between the patch, the recursive
// construction and its planner.

#include <vector>

#include "lamcert/geometry.hpp"
#include "lamcert/laminate.hpp"

namespace lamcert::detail {

/// A splitting written so that a has its first nonzero component positive.
/// `first` occupies the rising part of each sawtooth period (fraction lambda).
struct Lamination {
  Vec2 a;
  Vec2 n;
  double lambda = 0.5;
  Mat2 first;
  Mat2 second;
  AtomLabel first_label;
  AtomLabel second_label;
};

Lamination canonical(const SplitStep& step);

struct CellData {
  Polygon region;
  std::vector<Vec2> values;
  Mat2 gradient;
  Vec2 offset;
};

enum class PieceKind : unsigned char { First, Second, Frame };

struct Piece {
  CellData cell;
  PieceKind kind;
};

/// Sawtooth s -> h(s) over `periods` periods of length `eps` starting at s0.
struct Sawtooth {
  double s0 = 0.0;
  double eps = 1.0;
  long periods = 1;
};

/// Per-edge flags of the parent polygon. Framed edges get a transition layer;
/// clamped edges carry g = 0, so child vertices on them interpolate the parent.
struct EdgeFlags {
  std::vector<char> framed;
  std::vector<char> clamped;
};

/// Flags for an isolated cell: edges perpendicular to n sit at the ends of the
/// sawtooth and stay unframed, all other edges are framed.
EdgeFlags isolated_flags(const Polygon& region, const Vec2& n);

/// Sawtooth anchored at the cell's extent along n with the period closest to
/// `target_eps` that fits an integer number of times.
Sawtooth fitted_sawtooth(const Polygon& region, const Vec2& n, double target_eps,
                         long max_periods);

/// Splits one cell. Appends pieces to `out` and returns the frame area.
double split_cell(const CellData& parent, const Lamination& lam, const Sawtooth& saw,
                  const EdgeFlags& flags, double frame_slope, std::vector<Piece>& out);

/// Extent of the polygon along n.
void projection_range(const Polygon& poly, const Vec2& n, double& lo, double& hi);

/// Frame perimeter of a cell under the given flags.
double framed_length(const Polygon& region, const EdgeFlags& flags);

}  // namespace lamcert::detail

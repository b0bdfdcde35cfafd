#pragma once

#include <compare>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lamcert/mat2.hpp"

namespace lamcert {

/// A, B, C are the atom families of the final laminate. D and E label the
/// intermediate matrices that appear only inside the splitting history:
///   D_i = diag(b i, (i+1)^(p-1))  (left over after splitting off B_{i+1})
///   E   = diag(b, 0)              (first half of the root splitting)
enum class AtomKind { A, B, C, D, E };
enum class Sign { Plus, Minus };

struct AtomLabel {
  AtomKind kind = AtomKind::A;
  int index = 0;
  Sign sign = Sign::Plus;

  auto operator<=>(const AtomLabel&) const = default;

  AtomLabel negated() const { return {kind, index, sign == Sign::Plus ? Sign::Minus : Sign::Plus}; }
  /// "+B2", "-A10", "+E0", ...
  std::string str() const;
  static AtomLabel parse(const std::string& text);
};

char kind_char(AtomKind kind);
AtomKind kind_from_char(char c);

struct LaminateParams {
  double p = 3.0;
  double b = 0.5;
};

/// Throws std::domain_error unless p > 1, b > 0 and b != 1.
void require_params(double p, double b);

/// Closed-form matrix of the family member named by `label`.
///
/// Entries that appear in both the p-flux of row 1 and the rotated gradient of
/// row 2 are evaluated with the same expression (pow(b(i-1), p-1) for B_i,
/// pow(i, p-1) for C_i) so the flux residual on B and C atoms is exactly zero.
Mat2 matrix_family(const AtomLabel& label, double p, double b);

struct SplitCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Weights of the two elementary splittings taking A_i to
/// alpha B_{i+1} + beta C_{i+1} + gamma A_{i+1}. Requires i >= 1.
SplitCoefficients split_coefficients(int i, double p, double b);

/// Convex weight of the second splitting D_i = beta' C_{i+1} + (1 - beta') A_{i+1}.
double second_split_weight(int i, double b);

/// log(gamma_{i+1}) from the product form, accurate for large i.
double log_gamma_factor(int i, double p, double b);

struct WeightedLabel {
  double weight = 0.0;
  AtomLabel label;
};

/// Weight mu = 1/(1 + b^(p-1)) of B2 in the splitting diag(b, 0) = mu B2 + (1 - mu) A1.
/// Equal halves would move the second diagonal entry to (1 - b^(p-1))/2.
double initial_split_weight(double p, double b);

/// Root splitting 0 -> +-diag(b, 0) -> mu/2 (B2 + (-B2)) + (1 - mu)/2 (A1 + (-A1)).
std::vector<WeightedLabel> initial_split(double p, double b);

struct Atom {
  double weight = 0.0;
  /// Natural log of the weight, kept for large orders where `weight` underflows.
  double log_weight = 0.0;
  Mat2 matrix;
  AtomLabel label;
};

struct Laminate {
  std::vector<Atom> atoms;
  double p = 0.0;
  double b = 0.0;
  int order = 0;

  double total_weight() const;
  Mat2 barycenter() const;
  const Atom* find(const AtomLabel& label) const;
};

struct RankOneDirection {
  Vec2 a;
  Vec2 n;  // unit, first nonzero component positive
};

struct SplitStep {
  Mat2 parent;
  double lambda = 0.0;
  Mat2 childB;
  Mat2 childC;
  RankOneDirection direction;
  AtomLabel parent_label;
  AtomLabel childB_label;
  AtomLabel childC_label;
};

struct SplitTree {
  Mat2 root;
  AtomLabel root_label{AtomKind::A, 0, Sign::Plus};
  std::vector<SplitStep> steps;
};

struct LaminateBuild {
  Laminate laminate;
  SplitTree tree;
};

/// Laminate of order N together with the splitting history that produces it.
LaminateBuild build_laminate(int N, double p, double b);

/// Weight of each of the atoms +-A_N without building the laminate; computed
/// as a sum of logs so large N does not underflow.
double gamma_tail(int N, double p, double b);
double log_gamma_tail(int N, double p, double b);

/// Minimum Frobenius distance between distinct support matrices.
double min_support_distance(const Laminate& lam);

/// Returns (a, n) with M1 - M2 = a n^T when M1 - M2 has rank exactly one.
std::optional<RankOneDirection> rank_one_connection(const Mat2& M1, const Mat2& M2);

enum class ViolationKind { Convexity, RankOne, Direction, LambdaRange, Replay, Weight };
std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  long index = -1;  // step index, or -1 for whole-tree checks
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t checks = 0;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

/// Replays the tree from the root Dirac mass and checks every splitting.
ValidationReport validate_split_tree(const SplitTree& tree, const Laminate& lam);

/// Checks the laminate's own invariants (weights, barycenter, atom count,
/// distinct support, matrices equal to the closed form).
ValidationReport validate_laminate(const Laminate& lam);

}  // namespace lamcert

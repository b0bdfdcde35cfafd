#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lamcert/flux.hpp"
#include "lamcert/realization.hpp"

namespace lamcert {

/// Exact per-cell sums; both integrands are constant on each cell.
Integrals mesh_integrals(const PWAffineMap& map, double p, double r);

/// phi(x) = poly(X, Y) * bump(X, Y) in coordinates X = (x - center) / radius, where
/// poly is the cubic sum c[k] X^i Y^j over i + j <= 3 (k = 0..9 in the order
/// 1, X, Y, X^2, XY, Y^2, X^3, X^2 Y, X Y^2, Y^3).
struct TestFunction {
  enum class Bump { Tensor, Radial };
  Bump bump = Bump::Tensor;
  Vec2 center{0.0, 0.0};
  double radius = 1.0;
  double coeff[10] = {1.0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  double amplitude = 1.0;

  double value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
};

/// Tensor bump (1-X^2)^2 (1-Y^2)^2 fitted to the bounding box of a square domain,
/// or the radial bump (1-|X|^2)^2 on the inscribed disk otherwise, plus `extra`
/// random cubic multiples drawn from `seed`. Each is scaled to |grad phi| <= 1.
std::vector<TestFunction> default_test_functions(const PWAffineMap& map, int extra = 8,
                                                 std::uint64_t seed = 20240917);

/// max over phi of |sum over cells of the boundary integral of phi (c . nu)| with
/// c = (-d2 v, d1 v), by 8-point Gauss-Legendre per edge. Throws std::domain_error
/// when a test function does not vanish on the domain boundary.
double weak_divergence_residual(const PWAffineMap& map, const std::vector<TestFunction>& tests);

/// Natural size of the residual: Lipschitz bound times domain area (the test
/// functions have unit gradient bound).
double residual_scale(const PWAffineMap& map);

/// Oracle ratio I_grad / I_flux against the laminate of each order, from one
/// incremental pass over the splitting series.
struct RatioGrowth {
  std::vector<int> N;
  std::vector<double> grad;
  std::vector<double> flux;
  std::vector<double> ratio;
  double slope = 0.0;       // least squares of log ratio on log N
  double flux_slope = 0.0;  // minus the slope of log I_flux, near q_tilde - r
  int monotone_from = 0;    // smallest listed N after which the ratio only increases
};

/// Throws std::domain_error unless max(p-1, 1) < r < q_bar <= q_tilde(b, p).
RatioGrowth ratio_growth(double p, double r, double q_bar, double b, const std::vector<int>& N_range);

/// Oracle integrals for order N without storing the laminate.
Integrals oracle_integrals(int N, double p, double b, double r);

/// First N in [2, limit] whose oracle ratio reaches Lambda.
std::optional<int> smallest_order_reaching(double Lambda, double p, double b, double r, int limit);

/// `count` log-spaced integers in [lo, hi], increasing and without repeats.
std::vector<int> log_spaced(int lo, int hi, int count);

/// Mesh integrals against the laminate's, with the deviation each side can
/// inherit from the histogram error and the transition cells.
struct MeshAgreement {
  Integrals mesh;    // over the domain
  Integrals oracle;  // per unit area
  double grad_discrepancy = 0.0;  // relative, after scaling the oracle by the domain area
  double flux_discrepancy = 0.0;
  // sum_k |fraction_k - weight_k| f(A_k) + transition * max f on transition
  // cells, relative to the oracle.
  double grad_bound = 0.0;
  double flux_bound = 0.0;
  // max(2 eta * largest integrand / oracle, 5%).
  double grad_tolerance = 0.0;
  double flux_tolerance = 0.0;
  double histogram_deviation = 0.0;  // max |fraction - weight|
  // Transition cells: max |f| against max delta |grad u|^(p-2).
  double transition_flux_max = 0.0;
  double transition_delta_bound = 0.0;

  bool within_tolerance() const {
    return grad_discrepancy <= grad_tolerance && flux_discrepancy <= flux_tolerance;
  }
};

MeshAgreement compare_with_laminate(const PWAffineMap& map, const Laminate& lam, double r, double delta);

struct CertificateBudget {
  int max_order = 4;
  double eta = 0.05;
  int stripes = 32;
  DomainKind domain = DomainKind::Square;
  std::size_t max_cells = 3'000'000;
  int scan_limit = 10'000'000;
  double delta = 0.0;  // 0 selects min_support_distance / 4
  std::uint64_t seed = 20240917;  // random test functions of the weak residual
};

struct CertificateReport {
  double p = 0.0;
  double r = 0.0;
  double Lambda = 0.0;
  double q1 = 0.0;
  double q_bar = 0.0;
  double b = 0.0;
  double q_tilde = 0.0;

  // Oracle level.
  int scan_limit = 0;
  std::optional<int> oracle_N;
  double oracle_ratio = 0.0;  // at oracle_N, or at scan_limit when not reached
  double ratio_slope = 0.0;   // over [10^3, 10^5]
  double flux_slope = 0.0;
  int monotone_from = 0;

  // Mesh level at the realized order.
  int realized_N = 0;
  std::string domain;
  double delta = 0.0;
  double eta = 0.0;
  int stripes = 0;
  std::size_t cells = 0;
  double transition = 0.0;
  Integrals mesh;
  Integrals oracle;
  double grad_discrepancy = 0.0;  // relative
  double flux_discrepancy = 0.0;
  double grad_bound = 0.0;        // relative transition-budget bound
  double flux_bound = 0.0;
  double grad_tolerance = 0.0;
  double flux_tolerance = 0.0;
  double histogram_deviation = 0.0;  // max |fraction - weight|
  bool map_valid = false;
  std::size_t map_violations = 0;
  double weak_residual = 0.0;
  double residual_scale = 0.0;
  // Transition cells: max |f| against max delta |grad u|^(p-2).
  double transition_flux_max = 0.0;
  double transition_delta_bound = 0.0;

  bool verdict_oracle = false;     // (a) oracle ratio >= Lambda
  bool verdict_agreement = false;  // (b) mesh matches oracle at realized_N
  bool verdict_structure = false;  // (c) every structural validation passes
  std::vector<std::string> notes;

  bool passed() const { return verdict_oracle && verdict_agreement && verdict_structure; }
};

/// End-to-end check of the reverse inequality. Throws std::domain_error for p = 2
/// or r outside (max(p-1, 1), q1(p)).
CertificateReport certificate(double p, double r, double Lambda,
                              const CertificateBudget& budget = {});

}  // namespace lamcert

#pragma once

#include <functional>
#include <span>

namespace lamcert {

/// Decay exponent of the A-tail weights for a given b:
///   (p-1)/(b^(p-1)+1) + b/(b+1).
double q_tilde(double b, double p);

struct ScalarMax {
  double argmax = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section search for a maximum of `f` on [lo, hi]; stops when the
/// bracket is narrower than `width`.
ScalarMax golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                                  double width, int max_iterations = 500);

struct Threshold {
  double q1 = 0.0;
  double b_star = 0.0;
};

inline constexpr int kThresholdGridPoints = 400;
inline constexpr double kThresholdBMin = 1e-6;
inline constexpr double kThresholdBMax = 1e8;

/// Supremum of q_tilde(., p) over b > 0: a log-spaced grid on [1e-6, 1e8]
/// locates the best cell, then golden-section refines it in log b.
Threshold q1_threshold(double p, int grid_points = kThresholdGridPoints);

/// Largest exponent that no Calderon-Zygmund type bound can reach: max(p-1, 1).
double lower_exponent(double p);

/// A b != 1 with q_tilde(b, p) > q_bar. Throws std::domain_error unless
/// max(p-1, 1) < q_bar < q1_threshold(p).q1.
double choose_b(double p, double q_bar);

/// Ordinary least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

}  // namespace lamcert

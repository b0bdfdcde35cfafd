#include "lamcert/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lamcert {

double q_tilde(double b, double p) {
  if (!(b > 0.0)) throw std::domain_error("q_tilde requires b > 0");
  if (!(p > 1.0)) throw std::domain_error("q_tilde requires p > 1");
  return (p - 1.0) / (std::pow(b, p - 1.0) + 1.0) + b / (b + 1.0);
}

ScalarMax golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                                  double width, int max_iterations) {
  if (hi < lo) std::swap(lo, hi);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  ScalarMax out;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  out.evaluations = 2;
  for (int it = 0; it < max_iterations && (hi - lo) > width; ++it) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
    ++out.evaluations;
  }
  if (fc >= fd) {
    out.argmax = c;
    out.value = fc;
  } else {
    out.argmax = d;
    out.value = fd;
  }
  return out;
}

Threshold q1_threshold(double p, int grid_points) {
  if (!(p > 1.0)) throw std::domain_error("q1_threshold requires p > 1");
  if (grid_points < 3) throw std::invalid_argument("q1_threshold needs at least 3 grid points");
  const double t_lo = std::log(kThresholdBMin);
  const double t_hi = std::log(kThresholdBMax);
  const double dt = (t_hi - t_lo) / (grid_points - 1);
  auto g = [p](double t) { return q_tilde(std::exp(t), p); };

  int best = 0;
  double best_val = -1.0;
  for (int k = 0; k < grid_points; ++k) {
    const double v = g(t_lo + k * dt);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  const double lo = t_lo + std::max(best - 1, 0) * dt;
  const double hi = t_lo + std::min(best + 1, grid_points - 1) * dt;
  const ScalarMax refined = golden_section_maximize(g, lo, hi, 1e-10);

  Threshold out;
  if (refined.value >= best_val) {
    out.q1 = refined.value;
    out.b_star = std::exp(refined.argmax);
  } else {
    out.q1 = best_val;
    out.b_star = std::exp(t_lo + best * dt);
  }
  return out;
}

double lower_exponent(double p) { return std::max(p - 1.0, 1.0); }

double choose_b(double p, double q_bar) {
  const Threshold th = q1_threshold(p);
  const double lo = lower_exponent(p);
  if (!(q_bar > lo && q_bar < th.q1)) {
    std::ostringstream os;
    os.precision(10);
    os << "exponent " << q_bar << " outside the admissible range r in (max{p-1,1}, q1) = (" << lo
       << ", " << th.q1 << ") for p = " << p;
    if (p == 2.0) os << "; the range is empty when p = 2";
    throw std::domain_error(os.str());
  }
  double b = th.b_star;
  if (std::abs(b - 1.0) < 1e-3) {
    const double up = 1.0 + 1e-3;
    const double down = 1.0 - 1e-3;
    b = q_tilde(up, p) >= q_tilde(down, p) ? up : down;
  }
  if (!(q_tilde(b, p) > q_bar)) {
    std::ostringstream os;
    os << "no b != 1 with q_tilde(b) > " << q_bar << " for p = " << p;
    throw std::domain_error(os.str());
  }
  return b;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least_squares_slope needs two equally sized series of length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace lamcert

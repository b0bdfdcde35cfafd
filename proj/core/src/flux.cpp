#include "lamcert/flux.hpp"

#include <cmath>
#include <stdexcept>

namespace lamcert {

Vec2 p_flux(const Vec2& g, double p) {
  if (!(p > 1.0)) throw std::domain_error("p_flux requires p > 1");
  const double len = norm(g);
  if (len == 0.0) return {0.0, 0.0};
  // pow(|g|, p-1) * (g/|g|) so that an axis-aligned g gives exactly pow(|g_k|, p-1).
  const double s = std::pow(len, p - 1.0);
  return {s * (g.x / len), s * (g.y / len)};
}

Vec2 residual_field(const Mat2& M, double p) { return p_flux(M.row1(), p) - rotated_row2(M); }

double flux_integrand(const Mat2& M, double p, double r) {
  return std::pow(norm(residual_field(M, p)), r / (p - 1.0));
}

Integrals measure_integrals(const Laminate& lam, double r) {
  if (!(r > 0.0)) throw std::domain_error("measure_integrals requires r > 0");
  Integrals out;
  for (const auto& atom : lam.atoms) {
    const double w = atom.weight > 0.0 ? atom.weight : std::exp(atom.log_weight);
    out.grad += w * grad_integrand(atom.matrix, r);
    const double f = flux_integrand(atom.matrix, lam.p, r);
    if (f != 0.0) out.flux += w * f;
  }
  return out;
}

double measure_flux_closed_form(int N, double p, double b, double r) {
  const double q = p - 1.0;
  return 2.0 * std::exp(log_gamma_tail(N, p, b) + (r / q) * std::log(std::pow(b, q) + 1.0) +
                        r * std::log(static_cast<double>(N)));
}

}  // namespace lamcert

#pragma once

#include <cmath>
#include <limits>

#include "lamcert/laminate.hpp"
#include "lamcert/mat2.hpp"

namespace lamcert {

/// |g|^(p-2) g, extended by 0 at g = 0.
Vec2 p_flux(const Vec2& g, double p);

/// Rotated gradient (-d2 v, d1 v) of the second row.
inline Vec2 rotated_row2(const Mat2& m) { return {-m.m22, m.m21}; }

/// f = p_flux(grad u) - rotated grad v for the constant gradient M = (grad u; grad v).
Vec2 residual_field(const Mat2& M, double p);

/// Integrands of the two sides of the reverse inequality.
inline double grad_integrand(const Mat2& M, double r) { return std::pow(norm(M.row1()), r); }
double flux_integrand(const Mat2& M, double p, double r);

struct Integrals {
  double grad = 0.0;  // integral of |grad u|^r
  double flux = 0.0;  // integral of |f|^(r/(p-1))

  double ratio() const { return flux > 0.0 ? grad / flux : std::numeric_limits<double>::infinity(); }
};

/// Integrals against the laminate, an exact weighted sum over the atoms.
Integrals measure_integrals(const Laminate& lam, double r);

/// Closed form of the flux side: only +-A_N contribute.
double measure_flux_closed_form(int N, double p, double b, double r);

}  // namespace lamcert

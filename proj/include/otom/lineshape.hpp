#pragma once

#include "otom/bloch.hpp"

namespace otom {

// Absorption lineshape value g(delta_omega, t2) in seconds.
//
//   lorentzian:        (t2/pi) / (1 + (dw t2)^2)
//   gaussian:          t2 / sqrt(2 pi) * exp(-(dw t2)^2 / 2)
//   super_lorentzian:  sqrt(2/pi) * integral_0^{pi/2} sin(th)
//                        * t2/|3 cos^2 th - 1| * exp(-2 (dw t2 / (3 cos^2 th - 1))^2) dth
//
// The super-Lorentzian integral is evaluated with a 256-point double-
// exponential (tanh-sinh) rule split at the singular angle; it diverges at
// dw = 0 and throws there. g is even in dw.
double lineshape_value(Lineshape kind, double dw_rad_per_sec, double t2_sec);

// Dimensionless super-Lorentzian factor F(u) with u = |dw| * t2, so that
// g = t2 * F(u). n_half points per half-interval (2*n_half total).
double super_lorentzian_factor(double u, int n_half = 128);

// Memoized super-Lorentzian factor: linear interpolation in log(u) over a
// 4096-knot table spanning u in [1e-5, 1e3], built once on first use and
// immutable afterwards (safe for concurrent readers). Falls back to direct
// quadrature outside the table.
double super_lorentzian_factor_fast(double u);

}  // namespace otom

#pragma once

#include "h2d/common.hpp"

namespace h2d {

// Bessel functions of order zero. Absolute error stays below 1e-14 on
// [1e-6, 100]; bessel_y0 and hankel0 throw std::domain_error for x <= 0.
double bessel_j0(double x);
double bessel_y0(double x);

// First-kind Hankel function H0^(1)(x) = J0(x) + i Y0(x).
Complex hankel0(double x);

}  // namespace h2d

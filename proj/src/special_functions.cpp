#include "h2d/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace h2d {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kSeriesLimit = 5.0;
constexpr double kAsymptoticLimit = 25.0;

struct J0Y0 {
  double j0;
  double y0;
};

// Ascending series:
//   J0 = sum (-1)^k (x^2/4)^k / (k!)^2
//   Y0 = (2/pi) [(ln(x/2) + gamma) J0 + sum_{k>=1} (-1)^(k+1) H_k (x^2/4)^k / (k!)^2]
J0Y0 series(double x, bool want_y0) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double j0 = 1.0;
  double harmonic = 0.0;
  double tail = 0.0;
  for (int k = 1; k < 60; ++k) {
    term *= -q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    j0 += term;
    tail -= harmonic * term;
    if (std::abs(term) * (1.0 + harmonic) < 1e-18) break;
  }
  double y0 = 0.0;
  if (want_y0) y0 = std::numbers::inv_pi * 2.0 * ((std::log(0.5 * x) + kEulerGamma) * j0 + tail);
  return {j0, y0};
}

// Miller backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalised by
// J0 + 2 sum J_{2k} = 1. Y0 follows from the Neumann series
//   Y0 = (2/pi) (ln(x/2) + gamma) J0 - (4/pi) sum_{k>=1} (-1)^k J_{2k} / k.
J0Y0 miller(double x) {
  const int start = 2 * (static_cast<int>(x / 2.0) + 25);
  double j_next = 0.0;   // J_{k+1}
  double j_cur = 1e-30;  // J_k, arbitrary scale
  double norm = 0.0;
  double neumann = 0.0;
  for (int k = start; k >= 1; --k) {
    const double j_prev = (2.0 * k / x) * j_cur - j_next;
    j_next = j_cur;
    j_cur = j_prev;
    const int order = k - 1;
    if (order > 0 && order % 2 == 0) {
      const int half = order / 2;
      norm += 2.0 * j_cur;
      neumann += (half % 2 == 0 ? 1.0 : -1.0) * j_cur / half;
    }
    if (std::abs(j_cur) > 1e200) {
      j_cur *= 1e-200;
      j_next *= 1e-200;
      norm *= 1e-200;
      neumann *= 1e-200;
    }
  }
  norm += j_cur;
  const double j0 = j_cur / norm;
  const double y0 = 2.0 * std::numbers::inv_pi * ((std::log(0.5 * x) + kEulerGamma) * j0 - 2.0 * neumann / norm);
  return {j0, y0};
}

// Hankel asymptotic expansion with w = x - pi/4:
//   J0 = sqrt(2/(pi x)) (P cos w - Q sin w),  Y0 = sqrt(2/(pi x)) (P sin w + Q cos w).
J0Y0 asymptotic(double x) {
  double p = 1.0;
  double q = 0.0;
  double a = 1.0;  // a_k / x^k
  double last = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    a *= -(odd * odd) / (8.0 * k * x);
    if (std::abs(a) > last) break;  // series has started to diverge
    last = std::abs(a);
    const double signed_term = ((k / 2) % 2 == 0 ? 1.0 : -1.0) * a;
    if (k % 2 == 0) {
      p += signed_term;
    } else {
      q += signed_term;
    }
    if (last < 1e-18) break;
  }
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double cos_w = (c + s) * std::numbers::sqrt2 * 0.5;
  const double sin_w = (s - c) * std::numbers::sqrt2 * 0.5;
  const double scale = std::sqrt(2.0 * std::numbers::inv_pi / x);
  return {scale * (p * cos_w - q * sin_w), scale * (p * sin_w + q * cos_w)};
}

J0Y0 evaluate(double x, bool want_y0) {
  if (x <= kSeriesLimit) return series(x, want_y0);
  if (x < kAsymptoticLimit) return miller(x);
  return asymptotic(x);
}

}  // namespace

double bessel_j0(double x) {
  x = std::abs(x);
  return evaluate(x, false).j0;
}

double bessel_y0(double x) {
  if (!(x > 0.0)) throw std::domain_error("bessel_y0: argument must be positive");
  return evaluate(x, true).y0;
}

Complex hankel0(double x) {
  if (!(x > 0.0)) throw std::domain_error("hankel0: argument must be positive");
  const auto v = evaluate(x, true);
  return {v.j0, v.y0};
}

}  // namespace h2d

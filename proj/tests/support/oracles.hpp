#pragma once

// Reference computations for the tests. They share no code with the
// library: long double arithmetic, textbook series and brute force.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

using real = long double;

/// Adaptive Simpson in long double.
inline real simpson(const std::function<real(real)>& f, real a, real b, real tol = 1e-14L, int depth = 50) {
  struct Rec {
    static real run(const std::function<real(real)>& f, real a, real b, real fa, real fm, real fb, real whole,
                    real tol, int depth) {
      const real m = (a + b) / 2, lm = (a + m) / 2, rm = (m + b) / 2;
      const real flm = f(lm), frm = f(rm);
      const real left = (m - a) / 6 * (fa + 4 * flm + fm);
      const real right = (b - m) / 6 * (fm + 4 * frm + fb);
      const real delta = left + right - whole;
      if (depth <= 0 || std::fabs(delta) <= 15 * tol) return left + right + delta / 15;
      return run(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + run(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
    }
  };
  const real fa = f(a), fb = f(b), fm = f((a + b) / 2);
  const real whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return Rec::run(f, a, b, fa, fm, fb, whole, tol, depth);
}

/// Composite Simpson with many panels; for integrands with kinks at known
/// points, call once per smooth piece.
inline real simpson_fixed(const std::function<real(real)>& f, real a, real b, int panels) {
  if (panels % 2) ++panels;
  const real h = (b - a) / panels;
  real s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4 : 2) * f(a + i * h);
  return s * h / 3;
}

/// Adaptive Simpson with a tolerance relative to a coarse first estimate.
inline real simpson_rel(const std::function<real(real)>& f, real a, real b, real rel = 1e-15L) {
  const real rough = simpson_fixed(f, a, b, 512);
  return simpson(f, a, b, std::max(std::fabs(rough) * rel, std::numeric_limits<real>::min()), 40);
}

/// erf by its Maclaurin series, |x| <= 3.
inline real erf_series(real x) {
  real term = x, sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= -x * x / k;
    const real add = term / (2 * k + 1);
    sum += add;
    if (std::fabs(add) < 1e-22L) break;
  }
  return 2 / std::sqrt(std::numbers::pi_v<real>) * sum;
}

/// ln Gamma by recursion up to a >= 20 and the Stirling series.
inline real lgamma_recursion(real a) {
  real shift = 0;
  while (a < 20) {
    shift -= std::log(a);
    a += 1;
  }
  const real inv = 1 / a, inv2 = inv * inv;
  const real series = inv * (1.0L / 12 - inv2 * (1.0L / 360 - inv2 * (1.0L / 1260 - inv2 * (1.0L / 1680 - inv2 / 1188))));
  return shift + (a - 0.5L) * std::log(a) - a + 0.5L * std::log(2 * std::numbers::pi_v<real>) + series;
}

/// Lower regularized incomplete gamma by its power series in long double.
inline real reg_lower_series(real a, real x) {
  if (x <= 0) return 0;
  real term = 1 / a, sum = term;
  for (int k = 1; k < 100000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  return std::exp(-x + a * std::log(x) - lgamma_recursion(a)) * sum;
}

/// Kolmogorov-Smirnov statistic of a sample against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

/// Kahan-compensated long double sum.
inline real accurate_sum(const std::vector<real>& v) {
  real s = 0, c = 0;
  for (real x : v) {
    const real y = x - c;
    const real t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

/// Block index by linear scan over boundaries.
inline int linear_block_of(const std::vector<int>& starts, int j) {
  int k = -1;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i] <= j) k = static_cast<int>(i);
  }
  return k;
}

/// Standard normal CDF from the long double erfc.
inline real normal_cdf(real z) { return 0.5L * std::erfc(-z / std::numbers::sqrt2_v<real>); }

}  // namespace oracle

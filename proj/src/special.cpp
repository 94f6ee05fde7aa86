#include "blockprior/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace blockprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxSeriesTerms = 100000;

// Lanczos coefficients, g = 671/128.
constexpr double kLanczos[14] = {
    57.1562356658629235,      -59.5979603554754912,     14.1360979747417471,
    -0.491913816097620199,    .339946499848118887e-4,   .465236289270485756e-4,
    -.983744753048795646e-4,  .158088703224912494e-3,   -.210264441724104883e-3,
    .217439618115212643e-3,   -.164318106536763890e-3,  .844182239838527433e-4,
    -.261908384015814087e-4,  .368991826595316234e-5};

void require_shape(double a, const char* where) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw std::invalid_argument(std::string(where) + ": shape must be positive and finite, got " +
                                std::to_string(a));
  }
}

// log of the series Σ x^n / ((a+1)...(a+n)); x < a + 1 keeps it short.
double log_lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kMaxSeriesTerms; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return std::log(sum) + a * std::log(x) - x - log_gamma(a);
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double log_upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxSeriesTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::log(h) - x + a * std::log(x) - log_gamma(a);
}

double log_gamma_pdf(double a, double x) {
  return (a - 1.0) * std::log(x) - x - log_gamma(a);
}

}  // namespace

double log_gamma(double a) {
  require_shape(a, "log_gamma");
  if (a == 1.0 || a == 2.0) return 0.0;
  if (a < 0.5) return log_gamma(a + 1.0) - std::log(a);
  double y = a;
  double tmp = a + 5.24218750000000000;
  tmp = (a + 0.5) * std::log(tmp) - tmp;
  double ser = 0.999999999999997092;
  for (double c : kLanczos) ser += c / ++y;
  return tmp + std::log(2.5066282746310005 * ser / a);
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log1m_exp(double x) {
  if (x > 0.0) throw std::domain_error("log1m_exp: argument must be <= 0");
  if (x == 0.0) return -kInf;
  return x > -std::numbers::ln2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

double log_diff_exp(double a, double b) {
  if (b > a) throw std::domain_error("log_diff_exp: requires a >= b");
  if (b == -kInf) return a;
  return a + log1m_exp(b - a);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -kInf;
  const double m = *std::max_element(values.begin(), values.end());
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_reg_inc_gamma_lower(double a, double x) {
  require_shape(a, "reg_inc_gamma_lower");
  if (x < 0.0 || std::isnan(x)) throw std::invalid_argument("reg_inc_gamma_lower: x must be >= 0");
  if (x == 0.0) return -kInf;
  if (x == kInf) return 0.0;
  if (x < a + 1.0) return std::min(0.0, log_lower_series(a, x));
  return log1m_exp(std::min(0.0, log_upper_fraction(a, x)));
}

double log_reg_inc_gamma_upper(double a, double x) {
  require_shape(a, "reg_inc_gamma_upper");
  if (x < 0.0 || std::isnan(x)) throw std::invalid_argument("reg_inc_gamma_upper: x must be >= 0");
  if (x == 0.0) return 0.0;
  if (x == kInf) return -kInf;
  if (x < a + 1.0) return log1m_exp(std::min(0.0, log_lower_series(a, x)));
  return std::min(0.0, log_upper_fraction(a, x));
}

double reg_inc_gamma_lower(double a, double x) { return std::exp(log_reg_inc_gamma_lower(a, x)); }

double reg_inc_gamma_upper(double a, double x) { return std::exp(log_reg_inc_gamma_upper(a, x)); }

double inv_reg_inc_gamma(double a, double log_p, double log_q) {
  require_shape(a, "inv_reg_inc_gamma");
  // One log may round to 0 when the other tail is below the double range.
  if (!(log_p <= 0.0) || !(log_q <= 0.0) || (log_p == 0.0 && log_q == 0.0)) {
    throw std::invalid_argument("inv_reg_inc_gamma: probability must lie strictly inside (0, 1)");
  }
  const bool lower = log_p < log_q;

  // Increasing in x, zero at the root.
  auto residual = [&](double x) {
    return lower ? log_reg_inc_gamma_lower(a, x) - log_p : log_q - log_reg_inc_gamma_upper(a, x);
  };
  auto slope = [&](double x) {
    const double lpdf = log_gamma_pdf(a, x);
    return lower ? std::exp(lpdf - log_reg_inc_gamma_lower(a, x))
                 : std::exp(lpdf - log_reg_inc_gamma_upper(a, x));
  };

  // Starting point: tail asymptotics when the target is far out, otherwise
  // the Wilson-Hilferty / small-shape guesses.
  double x;
  if (lower && log_p < -5.0) {
    x = std::exp((log_p + log_gamma(a + 1.0)) / a);
  } else if (!lower && log_q < -5.0) {
    double y = std::max(1.0, a - log_q);
    for (int i = 0; i < 4; ++i) y = std::max(1.0, -log_q - log_gamma(a) + (a - 1.0) * std::log(y));
    x = y;
  } else {
    const double p = std::exp(log_p);
    if (a > 1.0) {
      const double pp = p < 0.5 ? p : 1.0 - p;
      const double t = std::sqrt(-2.0 * std::log(pp));
      double z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
      if (p < 0.5) z = -z;
      x = std::max(1e-3, a * std::pow(1.0 - 1.0 / (9.0 * a) - z / (3.0 * std::sqrt(a)), 3));
    } else {
      const double t = 1.0 - a * (0.253 + a * 0.12);
      x = p < t ? std::pow(p / t, 1.0 / a) : 1.0 - std::log1p(-(p - t) / (1.0 - t));
    }
  }
  if (!(x > 0.0) || !std::isfinite(x)) x = std::max(a, 1.0);

  // Bracket the root.
  double lo = 0.0;
  double hi = kInf;
  double r = residual(x);
  if (r == 0.0) return x;
  if (r < 0.0) {
    lo = x;
    double step = std::max(x, 1.0);
    while (true) {
      const double cand = lo + step;
      if (residual(cand) >= 0.0) {
        hi = cand;
        break;
      }
      lo = cand;
      step *= 2.0;
      if (!std::isfinite(cand)) throw std::runtime_error("inv_reg_inc_gamma: failed to bracket");
    }
  } else {
    hi = x;
    double cand = x;
    while (true) {
      cand *= 0.5;
      if (cand < std::numeric_limits<double>::min()) {
        lo = 0.0;
        break;
      }
      if (residual(cand) <= 0.0) {
        lo = cand;
        break;
      }
      hi = cand;
    }
  }

  x = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
  for (int iter = 0; iter < 200; ++iter) {
    r = residual(x);
    if (r == 0.0) return x;
    if (r < 0.0) lo = x; else hi = x;
    const double d = slope(x);
    double next = (d > 0.0 && std::isfinite(d)) ? x - r / d : std::nan("");
    if (!(next > lo && next < hi)) {
      next = (lo > 0.0 && hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    }
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      return next;
    }
    x = next;
  }
  throw std::runtime_error("inv_reg_inc_gamma: no convergence after 200 iterations (a=" +
                           std::to_string(a) + ")");
}

double inv_reg_inc_gamma_lower(double a, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_reg_inc_gamma_lower: p must be in (0, 1)");
  return inv_reg_inc_gamma(a, std::log(p), std::log1p(-p));
}

double inv_reg_inc_gamma_upper_log(double a, double log_q) {
  if (!(log_q < 0.0)) throw std::invalid_argument("inv_reg_inc_gamma_upper_log: q must be in (0, 1)");
  return inv_reg_inc_gamma(a, log1m_exp(log_q), log_q);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double log_normal_pdf(double z) {
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
}

double log_normal_cdf(double z) {
  if (z > 5.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
  if (z > -30.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  // Mills ratio: Φ(z) = φ(z)/|z| (1 - 1/z² + 3/z⁴ - 15/z⁶ + 105/z⁸ - ...)
  const double r = 1.0 / (z * z);
  const double series = 1.0 - r * (1.0 - r * (3.0 - r * (15.0 - r * 105.0)));
  return log_normal_pdf(z) - std::log(-z) + std::log(series);
}

}  // namespace blockprior

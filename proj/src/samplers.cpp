#include "blockprior/samplers.hpp"

#include <cmath>
#include <stdexcept>

namespace blockprior {

double sample_std_normal(RandomStream& rng) {
  if (rng.has_spare_normal) {
    rng.has_spare_normal = false;
    return rng.spare_normal;
  }
  double u, v, s;
  do {
    u = 2.0 * rng.uniform() - 1.0;
    v = 2.0 * rng.uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  rng.spare_normal = v * f;
  rng.has_spare_normal = true;
  return u * f;
}

double sample_gamma(double shape, RandomStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw std::invalid_argument("sample_gamma: shape must be positive");
  }
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, rng);
    return g * std::pow(rng.uniform_open(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = sample_std_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_std_normal_above(double lower, RandomStream& rng) {
  if (lower < 0.5) {
    while (true) {
      const double z = sample_std_normal(rng);
      if (z > lower) return z;
    }
  }
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  while (true) {
    const double z = lower - std::log(rng.uniform_open()) / rate;
    const double d = z - rate;
    if (std::log(rng.uniform_open()) <= -0.5 * d * d) return z;
  }
}

}  // namespace blockprior

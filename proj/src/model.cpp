#include "blockprior/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "blockprior/random.hpp"
#include "blockprior/samplers.hpp"

namespace blockprior {

SignalSpec SignalSpec::for_smoothness(double alpha, std::uint64_t sign_seed, double amplitude) {
  return SignalSpec{alpha, alpha + 0.6, amplitude, sign_seed};
}

TruthSequence make_truth(const SignalSpec& spec, int j_trunc) {
  if (j_trunc < 1) throw std::invalid_argument("make_truth: j_trunc must be >= 1");
  if (!(spec.beta > 0.5)) {
    throw std::invalid_argument("make_truth: beta = " + std::to_string(spec.beta) +
                                " <= 0.5 gives a signal that is not square-summable");
  }
  if (!(spec.amplitude >= 0.0)) throw std::invalid_argument("make_truth: amplitude must be >= 0");
  TruthSequence truth;
  truth.spec = spec;
  truth.coeffs.resize(j_trunc);
  RandomStream signs(spec.sign_seed, 0);
  for (int j = 1; j <= j_trunc; ++j) {
    const double xi = (signs() >> 63) ? 1.0 : -1.0;
    truth.coeffs[j - 1] = spec.amplitude * xi * std::pow(static_cast<double>(j), -spec.beta);
  }
  return truth;
}

Dataset gen_data(const TruthSequence& truth, int n, std::uint64_t noise_seed, std::uint64_t noise_stream) {
  if (n < 1) throw std::invalid_argument("gen_data: n must be >= 1");
  Dataset data;
  data.n = n;
  data.truth = &truth;
  data.noise_seed = noise_seed;
  data.noise_stream = noise_stream;
  data.x.resize(truth.size());
  RandomStream rng(noise_seed, noise_stream);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < truth.size(); ++j) {
    data.x[j] = truth.coeffs[j] + scale * sample_std_normal(rng);
  }
  return data;
}

double l2_risk(std::span<const double> estimate, const TruthSequence& truth) {
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("l2_risk: estimate has length " + std::to_string(estimate.size()) +
                                ", truth has " + std::to_string(truth.size()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < estimate.size(); ++j) {
    const double d = estimate[j] - truth.coeffs[j];
    s += d * d;
  }
  return s;
}

double sobolev_norm_sq(const TruthSequence& truth, double alpha) {
  double s = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double c = truth.coeffs[j];
    s += std::pow(static_cast<double>(j + 1), 2.0 * alpha) * c * c;
  }
  return s;
}

double tail_energy(const SignalSpec& spec, int j_trunc) {
  constexpr int kDirect = 1 << 20;
  const double a2 = spec.amplitude * spec.amplitude;
  const double p = 2.0 * spec.beta;
  double s = 0.0;
  // Smallest terms first.
  for (int j = kDirect; j > j_trunc; --j) s += std::pow(static_cast<double>(j), -p);
  // Σ_{j > M} j^-p ≈ ∫_{M + 1/2}^∞ x^-p dx (midpoint rule, error O(M^(-p-2))).
  const double m = std::max(kDirect, j_trunc) + 0.5;
  s += std::pow(m, 1.0 - p) / (p - 1.0);
  return a2 * s;
}

double minimax_rate(double alpha, int n) {
  return std::pow(static_cast<double>(n), -alpha / (2.0 * alpha + 1.0));
}

}  // namespace blockprior

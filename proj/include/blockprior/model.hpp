#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace blockprior {

/// Generating parameters of a polynomially decaying truth
/// theta_0j = amplitude * xi_j * j^(-beta), xi_j uniform on {-1, +1}.
struct SignalSpec {
  double alpha = 1.0;
  double beta = 1.6;
  double amplitude = 5.0;
  std::uint64_t sign_seed = 0;

  /// beta = alpha + 0.6, the decay used for the simulation tables.
  static SignalSpec for_smoothness(double alpha, std::uint64_t sign_seed, double amplitude = 5.0);
};

struct TruthSequence {
  std::vector<double> coeffs;  // coeffs[j - 1] = theta_0j
  SignalSpec spec;

  std::size_t size() const { return coeffs.size(); }
};

/// Observations X_j = theta_0j + Z_j / sqrt(n) of the Gaussian sequence model.
struct Dataset {
  int n = 0;
  std::vector<double> x;
  const TruthSequence* truth = nullptr;
  std::uint64_t noise_seed = 0;
  std::uint64_t noise_stream = 0;

  std::size_t size() const { return x.size(); }
};

/// Signs come from RandomStream(spec.sign_seed, 0), one draw per index, so
/// a longer truncation extends a shorter one.
TruthSequence make_truth(const SignalSpec& spec, int j_trunc);

Dataset gen_data(const TruthSequence& truth, int n, std::uint64_t noise_seed, std::uint64_t noise_stream = 0);

/// Σ_j (estimate_j - theta_0j)^2 over the truncated range.
double l2_risk(std::span<const double> estimate, const TruthSequence& truth);

/// Σ_j j^(2 alpha) theta_0j^2 over the truncated range.
double sobolev_norm_sq(const TruthSequence& truth, double alpha);

/// Σ_{j > j_trunc} theta_0j^2 of the untruncated signal (all |xi_j| = 1),
/// by direct summation up to 2^20 plus an integral bound for the rest.
double tail_energy(const SignalSpec& spec, int j_trunc);

/// Minimax rate n^(-alpha / (2 alpha + 1)).
double minimax_rate(double alpha, int n);

}  // namespace blockprior

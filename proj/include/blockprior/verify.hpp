#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockprior/block_gibbs.hpp"
#include "blockprior/mixing.hpp"

namespace blockprior {

enum class VerifyLevel { quick, full };

VerifyLevel parse_verify_level(const std::string& s);

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::quick;
  std::uint64_t seed = 20240601;
  /// Freeze the block scales inside the oracle check (mutation probe).
  bool freeze_scales = false;
  int threads = 0;
};

struct VerifyItem {
  std::string id;
  std::string title;
  bool passed = false;
  std::vector<std::string> details;
};

struct VerifyReport {
  std::vector<VerifyItem> items;
  bool all_passed() const;
  std::string to_text() const;
};

VerifyReport verify_suite(const VerifyOptions& opts);

// ---------------------------------------------------------------------------
// Building blocks of the suite, exposed for direct testing.

/// Importance-sampled estimate of a small probability.
struct MassEstimate {
  int n = 0;
  double eps_sq = 0.0;
  double estimate = 0.0;
  /// Standard error relative to the estimate.
  double rel_se = 0.0;
  long draws = 0;
  long hits = 0;
};

/// Block-prior mass of {Σ_j (theta_j - theta_0j)^2 <= eps_n^2}, eps_n the
/// minimax rate, for theta_0j = 5 j^-(alpha + 0.6).
///
/// Blocks 0..7 are simulated; each block needs only the component of
/// theta_k along theta_0k and the squared norm of the rest. Scales of
/// blocks 0..3 are proposed from an even mixture of g_k and the uniform law
/// on its outer piece, coefficients from the prior tilted towards theta_0.
/// Coordinates past block 7 contribute their truth energy.
MassEstimate prior_mass_estimate(int n, double alpha, MixingFamily family, long draws, std::uint64_t seed);

/// Block-prior mass of the complement of
///   {Σ_{j > (n / beta)^(1/(2 alpha + 1))} (theta_j - theta_0j)^2 <= eps_n^2}.
MassEstimate sieve_complement_mass(int n, double alpha, double beta, MixingFamily family, long draws,
                                   std::uint64_t seed);

/// Single-block Gibbs chain against the quadrature posterior.
struct OracleComparison {
  int k = 0;
  int n = 0;
  long sweeps = 0;
  /// max_j |gibbs mean_j - oracle mean_j| / |oracle mean_j|.
  double max_rel_mean_error = 0.0;
  /// Total variation between the chain's scale draws and the oracle,
  /// over the oracle's deciles.
  double tv = 0.0;
  double oracle_shrinkage = 0.0;
  double chain_shrinkage = 0.0;
};

/// Block data used by the oracle check: X_j = ±sqrt(0.9 e^-k + 1/n) with
/// alternating signs, so every coordinate is away from zero.
std::vector<double> oracle_check_data(int k, int n);

OracleComparison single_block_oracle_check(int k, int n, long sweeps, std::uint64_t seed, bool update_scales = true,
                                           InitRule init = InitRule::collapsed_posterior);

}  // namespace blockprior

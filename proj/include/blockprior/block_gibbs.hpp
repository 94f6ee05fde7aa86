#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "blockprior/blocks.hpp"
#include "blockprior/mixing.hpp"
#include "blockprior/model.hpp"
#include "blockprior/random.hpp"

namespace blockprior {

enum class Estimator { single_draw, posterior_mean };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& s);

/// How the chain picks its starting scales.
///
/// collapsed_posterior draws each A_k from its exact marginal posterior
/// given X_k (one-dimensional quadrature, constraint ignored); mid_support
/// sets A_k = e^-k / 2. theta starts at X either way.
enum class InitRule { collapsed_posterior, mid_support };

struct BlockPriorConfig {
  BlockScheme scheme = BlockScheme::exponential(1);
  MixingFamily family = MixingFamily::two_level;
  /// Leading blocks estimated directly by X_k; -1 picks 2 for the
  /// exponential scheme and 0 otherwise. Blocks of size <= 2 always pass
  /// through.
  int passthrough_leading = -1;
  /// Radius B of the l1 ball D = {Σ|theta_j| <= B}; set for the modified prior.
  std::optional<double> constraint_b;
  InitRule init = InitRule::collapsed_posterior;
  /// false freezes every A_k at its initial value. Diagnostic only.
  bool update_scales = true;
  int max_rejections = 100;

  int leading_passthrough() const;
  bool is_passthrough(int k) const;
  void validate() const;
};

struct ChainConfig {
  int sweeps = 2000;
  int burn_in = 500;
  Estimator estimator = Estimator::single_draw;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  void validate() const;
};

struct GibbsState {
  std::vector<double> theta;
  /// One entry per block; passthrough blocks hold 0.
  std::vector<double> scale;
  long sweep_count = 0;
};

struct GibbsDiagnostics {
  long theta_updates = 0;
  long scale_updates = 0;
  long constraint_rejections = 0;
  long constraint_fallbacks = 0;
  long trunc_invgamma_fallbacks = 0;
  /// Per block: A-updates that chose the inner (e^(-k^2)) component.
  std::vector<long> inner_component;
  /// Per block, over retained sweeps.
  std::vector<double> mean_log_scale;
  std::vector<double> min_scale;
  std::vector<double> max_scale;
};

struct ChainResult {
  std::vector<double> estimate;
  GibbsState final_state;
  GibbsDiagnostics diagnostics;
};

/// Conjugate shrinkage n / (1/A + n).
double shrinkage_weight(double scale, int n);

/// Draw theta_k ~ N(w X_k, (1/A + n)^-1 I), w = shrinkage_weight(A, n).
void sample_theta_given_scale(std::span<const double> x_k, double scale, int n, RandomStream& rng,
                              std::span<double> out);

struct MixtureWeights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double log_lambda1 = 0.0;
  double log_lambda2 = 0.0;
};

/// Weights of the two truncated inverse-Gamma components of A_k | theta_k
/// under the two-level mixing density:
///   lambda1 ∝ T_1k M(e^(-k^2)),  lambda2 ∝ T_2k M(e^-k),
/// with M(s) = Q(a, b/s) the inverse-Gamma(a, b) mass below s. b = 0 gives
/// M = 1 for every s. lambda2 is defined as 1 - lambda1.
MixtureWeights mixture_weights(double a, double b, int k);

/// Inverse-Gamma(a, b) truncated to (0, s); s may be +inf.
///
/// Inverse-CDF draw through F(t) = Q(a, b/t): u ~ U(0, F(s)), t = b / Q^-1(a, u)
/// with everything in log space. b = 0 has a degenerate limit at 0 and
/// returns the smallest normal double; a zero mass below s returns
/// s (1 - eps). Both set *fallback when given.
double sample_trunc_invgamma(double a, double b, double s, RandomStream& rng, bool* fallback = nullptr);

/// Analytic CDF of the truncated inverse-Gamma at t.
double trunc_invgamma_cdf(double a, double b, double s, double t);

struct ScaleDraw {
  double scale = 0.0;
  bool inner = false;
  bool fallback = false;
};

/// A_k | theta_k for the two-level mixing density; needs |theta_k| > 2.
ScaleDraw sample_scale_given_theta(std::span<const double> theta_k, int k, RandomStream& rng);

/// Posterior of the block scale on a quadrature grid, and the implied
/// posterior mean of theta_k.
///
/// Marginally X_k | A ~ N(0, (A + 1/n) I), so
///   p(A | X_k) ∝ g_k(A) (A + 1/n)^(-n_k/2) exp(-|X_k|^2 / (2 (A + 1/n))).
/// The grid is 8-point Gauss-Legendre in log A on log-spaced panels over
/// (0, e^-k], split at the knot e^(-k^2), with the sliver below the lowest
/// panel treated as flat.
class BlockPosterior {
 public:
  /// Mass on each panel (log A edges in `edges`), normalized.
  const std::vector<double>& panel_edges() const { return edges_; }
  const std::vector<double>& panel_mass() const { return mass_; }

  const std::vector<double>& posterior_mean() const { return mean_; }
  /// E[n A / (1 + n A) | X_k].
  double mean_shrinkage() const { return mean_weight_; }
  double mean_log_scale() const { return mean_log_scale_; }
  /// log of the normalizing constant ∫ g(A) L(A) dA.
  double log_evidence() const { return log_evidence_; }

  double cdf(double scale) const;
  double quantile(double p) const;
  double sample(RandomStream& rng) const { return quantile(rng.uniform_open()); }

 private:
  friend BlockPosterior oracle_block_posterior(std::span<const double>, int, int, MixingFamily, int);
  friend BlockPosterior point_mass_posterior(std::span<const double>, int, double);

  std::function<double(double)> log_density_;  // in log A, unnormalized
  double log_norm_ = 0.0;
  double floor_mass_ = 0.0;  // mass below edges_.front()
  std::vector<double> edges_;
  std::vector<double> mass_;
  std::vector<double> cum_;  // cumulative mass at each right edge
  std::vector<double> mean_;
  double mean_weight_ = 0.0;
  double mean_log_scale_ = 0.0;
  double log_evidence_ = 0.0;
  std::optional<double> atom_;  // point-mass prior
};

BlockPosterior oracle_block_posterior(std::span<const double> x_k, int k, int n,
                                      MixingFamily family = MixingFamily::two_level, int panels = 2000);

/// Same posterior with g_k replaced by a point mass at `scale`.
BlockPosterior point_mass_posterior(std::span<const double> x_k, int n, double scale);

/// Writes retained draws as CSV: a `# blockprior draws` comment, a header
/// `sweep,theta_1,...,theta_J`, then one row per retained sweep.
class DrawDump {
 public:
  explicit DrawDump(std::ostream& out) : out_(out) {}
  void write(long sweep, std::span<const double> theta);

 private:
  std::ostream& out_;
  bool header_written_ = false;
};

GibbsState initial_state(const Dataset& data, const BlockPriorConfig& cfg, RandomStream& rng);

void gibbs_sweep(GibbsState& state, const Dataset& data, const BlockPriorConfig& cfg, RandomStream& rng,
                 GibbsDiagnostics* diag = nullptr);

ChainResult run_chain(const Dataset& data, const BlockPriorConfig& prior, const ChainConfig& chain,
                      DrawDump* dump = nullptr);

}  // namespace blockprior

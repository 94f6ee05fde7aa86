#pragma once

#include <vector>

#include "blockprior/block_gibbs.hpp"
#include "blockprior/model.hpp"
#include "blockprior/random.hpp"

namespace blockprior {

enum class SieveMode { fixed_J, adaptive };

struct SieveConfig {
  SieveMode mode = SieveMode::fixed_J;
  double alpha = 1.0;
  /// Dimension of the fixed sieve; -1 selects floor(n^(1/(2 alpha + 1))).
  int J = -1;
  /// Dimension prior pi(k) ∝ exp(-D k).
  double D = 1.0;
  /// Largest dimension; 0 selects n (capped at the data length).
  int k_max = 0;

  int dimension(int n) const;
  int max_dimension(int n, int data_size) const;
  void validate() const;
};

// Fixed dimension J with a N(0, 1) prior on each of theta_1..theta_J.

std::vector<double> fixed_sieve_posterior(const Dataset& data, const SieveConfig& cfg, Estimator estimator,
                                          RandomStream& rng);

// Random dimension k ~ pi, then sqrt(n) theta_j ~ Laplace(0, 1) for j <= k
// and theta_j = 0 beyond. With y = sqrt(n) X every quantity below is a
// function of y alone.

/// log m(X) = log ∫ N(X; theta, 1/n) sqrt(n) g(sqrt(n) theta) dtheta for
/// the unit double-exponential g, in closed form.
double log_sieve_marginal(double x, int n);

/// log N(X; 0, 1/n), the likelihood of a coordinate set to zero.
double log_noise_density(double x, int n);

/// Normalized posterior over k = 0..k_max.
std::vector<double> dimension_posterior(const Dataset& data, const SieveConfig& cfg);

/// Posterior of one active coordinate: a two-piece truncated normal in
/// u = sqrt(n) theta, N(y - 1, 1) on (0, ∞) and N(y + 1, 1) on (-∞, 0).
struct LaplaceCoordinatePosterior {
  LaplaceCoordinatePosterior(double x, int n);

  double positive_weight() const { return p_pos_; }
  double mean() const;
  double cdf(double theta) const;
  double sample(RandomStream& rng) const;

 private:
  double y_;
  double sqrt_n_;
  double p_pos_;
};

std::vector<double> adaptive_sieve_posterior(const Dataset& data, const SieveConfig& cfg, Estimator estimator,
                                             RandomStream& rng);

}  // namespace blockprior

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "blockprior/block_gibbs.hpp"
#include "blockprior/model.hpp"
#include "blockprior/random.hpp"

namespace blockprior {

// Rescaled squared-exponential Gaussian process priors expressed in the
// trigonometric coefficient basis
//   phi_1 = 1, phi_2m = sqrt2 cos(2 pi m t), phi_2m+1 = sqrt2 sin(2 pi m t).
// The process W_{t/c} with E W_s W_t = exp(-(s-t)^2) has covariance
// exp(-(s-t)^2 / c^2), projected onto the basis by Simpson quadrature.

enum class RGPMode { fixed_c, gamma_c };

struct RGPConfig {
  RGPMode mode = RGPMode::fixed_c;
  double alpha = 1.0;
  double gamma_shape = 1.0;
  double gamma_rate = 1.0;
  /// Empty selects default_c_grid().
  std::vector<double> c_grid;
  /// Simpson panels per axis (rounded up to even).
  int quadrature_points = 1024;
  double jitter = 1e-8;
  /// 0 selects n.
  int basis_cut = 0;
  /// Overrides the rate-tuned c of fixed_c mode.
  std::optional<double> c;
  /// Replace the GP covariance by the identity (testing).
  bool identity_covariance = false;

  /// 40 log-spaced points on [1e-3, 10].
  static std::vector<double> default_c_grid();
  /// c = (1/2) (n / (log n)^2)^(-1 / (2 alpha + 1)), or the override.
  double fixed_c(int n) const;
  std::vector<double> grid() const;
  int basis_size(int n) const { return basis_cut > 0 ? basis_cut : n; }
  void validate() const;
};

/// Basis function j (1-based) at t.
double trig_basis(int j, double t);

/// Sigma_ij = ∫∫ phi_i(s) phi_j(t) exp(-(s-t)^2/c^2) ds dt plus jitter on the
/// diagonal, symmetrized.
Eigen::MatrixXd gp_prior_covariance(double c, int basis_cut, int quadrature_points, double jitter = 0.0);

/// Eigendecomposition of a prior covariance with the conjugate posterior of
/// the sequence model in closed form.
class SpectralPrior {
 public:
  /// Factors cov + jitter I; when an eigenvalue is still not positive the
  /// jitter grows tenfold up to 1e-4, after which std::runtime_error.
  static SpectralPrior factor(const Eigen::MatrixXd& cov, double jitter);
  static SpectralPrior identity(int dim);

  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double jitter_used() const { return jitter_used_; }
  double log_det() const { return log_det_; }

  /// (Sigma^-1 + n I)^-1 n x.
  Eigen::VectorXd posterior_mean(const Eigen::VectorXd& x, int n) const;
  /// Diagonal of (Sigma^-1 + n I)^-1.
  Eigen::VectorXd posterior_variance_diagonal(int n) const;
  Eigen::VectorXd posterior_draw(const Eigen::VectorXd& x, int n, RandomStream& rng) const;
  /// log N(theta; 0, Sigma).
  double log_density(const Eigen::VectorXd& theta) const;
  /// log N(x; 0, Sigma + I/n).
  double log_marginal(const Eigen::VectorXd& x, int n) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  double jitter_used_ = 0.0;
  double log_det_ = 0.0;
};

/// Prior factorization for one (n, alpha); reusable across datasets.
class RGPFModel {
 public:
  RGPFModel(const RGPConfig& cfg, int n);
  double c() const { return c_; }
  const SpectralPrior& prior() const { return prior_; }
  std::vector<double> estimate(const Dataset& data, Estimator estimator, RandomStream& rng) const;

 private:
  int n_;
  int dim_;
  double c_;
  SpectralPrior prior_;
};

std::vector<double> rgpf_posterior(const Dataset& data, const RGPConfig& cfg, Estimator estimator,
                                   RandomStream& rng);

struct RGPGDiagnostics {
  /// Retained sweeps spent at each grid point.
  std::vector<long> grid_visits;
};

/// Per-grid-point factorizations and log prior weights for gamma_c mode.
class RGPGModel {
 public:
  RGPGModel(const RGPConfig& cfg, int n);
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<SpectralPrior>& priors() const { return priors_; }
  /// Log prior weight of each grid point: Gamma log density at c plus log c
  /// for the log-spaced cell width, normalized.
  const std::vector<double>& log_prior_weights() const { return log_weights_; }

  /// Gibbs alternation of theta | c, X and c | theta over the grid. The
  /// posterior_mean estimator averages the conditional means E[theta | c, X].
  std::vector<double> run(const Dataset& data, const ChainConfig& chain, RGPGDiagnostics* diag = nullptr) const;

  /// Normalized p(c | theta) over the grid.
  std::vector<double> grid_posterior(const Eigen::VectorXd& theta) const;

 private:
  int n_;
  int dim_;
  std::vector<double> grid_;
  std::vector<SpectralPrior> priors_;
  std::vector<double> log_weights_;
};

std::vector<double> rgpg_chain(const Dataset& data, const RGPConfig& cfg, const ChainConfig& chain);

}  // namespace blockprior

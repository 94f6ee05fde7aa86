#include "blockprior/rgp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "blockprior/samplers.hpp"
#include "blockprior/special.hpp"

namespace blockprior {

namespace {

constexpr double kMaxJitter = 1e-4;

Eigen::VectorXd to_eigen(std::span<const double> v, int dim) {
  Eigen::VectorXd out(dim);
  for (int i = 0; i < dim; ++i) out[i] = v[i];
  return out;
}

std::vector<double> to_estimate(const Eigen::VectorXd& v, std::size_t size) {
  std::vector<double> out(size, 0.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

void check_dim(const Dataset& data, int dim) {
  if (dim > static_cast<int>(data.size())) {
    throw std::invalid_argument("RGP: basis_cut " + std::to_string(dim) + " exceeds data length " +
                                std::to_string(data.size()));
  }
}

std::size_t draw_index(std::span<const double> probs, RandomStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  // Rounding left u above the total; take the last positive entry.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

std::vector<double> normalize_log(std::vector<double> logs) {
  const double z = log_sum_exp(logs);
  for (double& v : logs) v = std::exp(v - z);
  return logs;
}

}  // namespace

std::vector<double> RGPConfig::default_c_grid() {
  constexpr int kPoints = 40;
  std::vector<double> g(kPoints);
  const double lo = std::log(1e-3), hi = std::log(10.0);
  for (int i = 0; i < kPoints; ++i) g[i] = std::exp(lo + (hi - lo) * i / (kPoints - 1));
  return g;
}

double RGPConfig::fixed_c(int n) const {
  if (c) return *c;
  if (n < 2) throw std::invalid_argument("RGPConfig: rate-tuned c needs n >= 2");
  const double ln = std::log(static_cast<double>(n));
  return 0.5 * std::pow(n / (ln * ln), -1.0 / (2.0 * alpha + 1.0));
}

std::vector<double> RGPConfig::grid() const { return c_grid.empty() ? default_c_grid() : c_grid; }

void RGPConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("RGPConfig: alpha must be > 0");
  if (!(gamma_shape > 0.0) || !(gamma_rate > 0.0)) {
    throw std::invalid_argument("RGPConfig: gamma hyperparameters must be > 0");
  }
  if (quadrature_points < 2) throw std::invalid_argument("RGPConfig: quadrature_points must be >= 2");
  if (!(jitter > 0.0)) throw std::invalid_argument("RGPConfig: jitter must be > 0");
  if (basis_cut < 0) throw std::invalid_argument("RGPConfig: basis_cut must be >= 0");
  if (c && !(*c > 0.0)) throw std::invalid_argument("RGPConfig: c must be > 0");
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    if (!(c_grid[i] > 0.0) || (i > 0 && !(c_grid[i] > c_grid[i - 1]))) {
      throw std::invalid_argument("RGPConfig: c_grid must be positive and strictly increasing");
    }
  }
}

double trig_basis(int j, double t) {
  if (j < 1) throw std::invalid_argument("trig_basis: index must be >= 1");
  if (j == 1) return 1.0;
  const double arg = 2.0 * std::numbers::pi * (j / 2) * t;
  return std::numbers::sqrt2 * (j % 2 == 0 ? std::cos(arg) : std::sin(arg));
}

Eigen::MatrixXd gp_prior_covariance(double c, int basis_cut, int quadrature_points, double jitter) {
  if (!(c > 0.0)) throw std::invalid_argument("gp_prior_covariance: c must be > 0");
  if (basis_cut < 1) throw std::invalid_argument("gp_prior_covariance: basis_cut must be >= 1");
  const int panels = quadrature_points + (quadrature_points % 2);
  const double h = 1.0 / panels;
  const int nodes = panels + 1;

  Eigen::VectorXd w(nodes);
  for (int q = 0; q < nodes; ++q) {
    w[q] = (q == 0 || q == panels) ? 1.0 : (q % 2 == 1 ? 4.0 : 2.0);
  }
  w *= h / 3.0;

  // Weighted basis values P(j, q) = w_q phi_j(t_q).
  Eigen::MatrixXd p(basis_cut, nodes);
  for (int q = 0; q < nodes; ++q) {
    const double t = q * h;
    for (int j = 1; j <= basis_cut; ++j) p(j - 1, q) = w[q] * trig_basis(j, t);
  }
  // The kernel depends on |s - t| only, so one row determines the matrix.
  Eigen::VectorXd kernel_row(nodes);
  const double inv_c2 = 1.0 / (c * c);
  for (int d = 0; d < nodes; ++d) {
    const double diff = d * h;
    kernel_row[d] = std::exp(-diff * diff * inv_c2);
  }
  Eigen::MatrixXd kernel(nodes, nodes);
  for (int a = 0; a < nodes; ++a) {
    for (int b = 0; b < nodes; ++b) kernel(a, b) = kernel_row[std::abs(a - b)];
  }
  Eigen::MatrixXd pk = p * kernel;
  Eigen::MatrixXd sigma = pk * p.transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  sigma.diagonal().array() += jitter;
  return sigma;
}

SpectralPrior SpectralPrior::factor(const Eigen::MatrixXd& cov, double jitter) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw std::invalid_argument("SpectralPrior: covariance must be square and nonempty");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("SpectralPrior: eigendecomposition failed");
  SpectralPrior out;
  double added = jitter;
  while (solver.eigenvalues().minCoeff() + added <= 0.0) {
    added *= 10.0;
    if (added > kMaxJitter * (1.0 + 1e-9)) {
      throw std::runtime_error("SpectralPrior: covariance not positive definite with jitter up to 1e-4");
    }
  }
  out.eigenvalues_ = solver.eigenvalues().array() + added;
  out.eigenvectors_ = solver.eigenvectors();
  out.jitter_used_ = added;
  out.log_det_ = out.eigenvalues_.array().log().sum();
  return out;
}

SpectralPrior SpectralPrior::identity(int dim) {
  SpectralPrior out;
  out.eigenvalues_ = Eigen::VectorXd::Ones(dim);
  out.eigenvectors_ = Eigen::MatrixXd::Identity(dim, dim);
  return out;
}

Eigen::VectorXd SpectralPrior::posterior_mean(const Eigen::VectorXd& x, int n) const {
  const Eigen::ArrayXd nl = n * eigenvalues_.array();
  const Eigen::VectorXd rotated = eigenvectors_.transpose() * x;
  return eigenvectors_ * (nl / (1.0 + nl) * rotated.array()).matrix();
}

Eigen::VectorXd SpectralPrior::posterior_variance_diagonal(int n) const {
  const Eigen::ArrayXd v = eigenvalues_.array() / (1.0 + n * eigenvalues_.array());
  return (eigenvectors_.array().square().matrix() * v.matrix());
}

Eigen::VectorXd SpectralPrior::posterior_draw(const Eigen::VectorXd& x, int n, RandomStream& rng) const {
  Eigen::VectorXd z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = sample_std_normal(rng);
  const Eigen::ArrayXd l = eigenvalues_.array();
  const Eigen::VectorXd rotated = eigenvectors_.transpose() * x;
  const Eigen::ArrayXd coef = n * l / (1.0 + n * l) * rotated.array() + (l / (1.0 + n * l)).sqrt() * z.array();
  return eigenvectors_ * coef.matrix();
}

double SpectralPrior::log_density(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd rotated = eigenvectors_.transpose() * theta;
  const double quad = (rotated.array().square() / eigenvalues_.array()).sum();
  return -0.5 * (dim() * std::log(2.0 * std::numbers::pi) + log_det_ + quad);
}

double SpectralPrior::log_marginal(const Eigen::VectorXd& x, int n) const {
  const Eigen::ArrayXd v = eigenvalues_.array() + 1.0 / n;
  const Eigen::VectorXd rotated = eigenvectors_.transpose() * x;
  const double quad = (rotated.array().square() / v).sum();
  return -0.5 * (dim() * std::log(2.0 * std::numbers::pi) + v.log().sum() + quad);
}

RGPFModel::RGPFModel(const RGPConfig& cfg, int n) : n_(n), dim_(cfg.basis_size(n)), c_(cfg.fixed_c(n)) {
  cfg.validate();
  if (cfg.mode != RGPMode::fixed_c) throw std::invalid_argument("RGPFModel: needs fixed_c mode");
  prior_ = cfg.identity_covariance
               ? SpectralPrior::identity(dim_)
               : SpectralPrior::factor(gp_prior_covariance(c_, dim_, cfg.quadrature_points), cfg.jitter);
}

std::vector<double> RGPFModel::estimate(const Dataset& data, Estimator estimator, RandomStream& rng) const {
  if (data.n != n_) throw std::invalid_argument("RGPFModel: dataset n differs from the model's n");
  check_dim(data, dim_);
  const Eigen::VectorXd x = to_eigen(data.x, dim_);
  const Eigen::VectorXd est =
      estimator == Estimator::posterior_mean ? prior_.posterior_mean(x, n_) : prior_.posterior_draw(x, n_, rng);
  return to_estimate(est, data.size());
}

std::vector<double> rgpf_posterior(const Dataset& data, const RGPConfig& cfg, Estimator estimator,
                                   RandomStream& rng) {
  return RGPFModel(cfg, data.n).estimate(data, estimator, rng);
}

RGPGModel::RGPGModel(const RGPConfig& cfg, int n) : n_(n), dim_(cfg.basis_size(n)), grid_(cfg.grid()) {
  cfg.validate();
  if (cfg.mode != RGPMode::gamma_c) throw std::invalid_argument("RGPGModel: needs gamma_c mode");
  if (grid_.empty()) throw std::invalid_argument("RGPGModel: empty c grid");
  priors_.reserve(grid_.size());
  std::vector<double> logs;
  for (double c : grid_) {
    priors_.push_back(cfg.identity_covariance
                          ? SpectralPrior::identity(dim_)
                          : SpectralPrior::factor(gp_prior_covariance(c, dim_, cfg.quadrature_points), cfg.jitter));
    const double log_gamma_density = cfg.gamma_shape * std::log(cfg.gamma_rate) - log_gamma(cfg.gamma_shape) +
                                     (cfg.gamma_shape - 1.0) * std::log(c) - cfg.gamma_rate * c;
    logs.push_back(log_gamma_density + std::log(c));
  }
  const double z = log_sum_exp(logs);
  for (double& v : logs) v -= z;
  log_weights_ = std::move(logs);
}

std::vector<double> RGPGModel::grid_posterior(const Eigen::VectorXd& theta) const {
  std::vector<double> logs(grid_.size());
  for (std::size_t g = 0; g < grid_.size(); ++g) logs[g] = log_weights_[g] + priors_[g].log_density(theta);
  return normalize_log(std::move(logs));
}

std::vector<double> RGPGModel::run(const Dataset& data, const ChainConfig& chain, RGPGDiagnostics* diag) const {
  chain.validate();
  if (data.n != n_) throw std::invalid_argument("RGPGModel: dataset n differs from the model's n");
  check_dim(data, dim_);
  RandomStream rng(chain.seed, chain.stream);
  const Eigen::VectorXd x = to_eigen(data.x, dim_);

  // Start c from its collapsed posterior given X.
  std::vector<double> logs(grid_.size());
  for (std::size_t g = 0; g < grid_.size(); ++g) logs[g] = log_weights_[g] + priors_[g].log_marginal(x, n_);
  std::size_t current = draw_index(normalize_log(std::move(logs)), rng);

  std::vector<long> visits(grid_.size(), 0);
  Eigen::VectorXd theta;
  for (int sweep = 1; sweep <= chain.sweeps; ++sweep) {
    theta = priors_[current].posterior_draw(x, n_, rng);
    current = draw_index(grid_posterior(theta), rng);
    if (sweep > chain.burn_in) ++visits[current];
  }
  if (diag) diag->grid_visits = visits;

  if (chain.estimator == Estimator::single_draw) return to_estimate(theta, data.size());
  // Rao-Blackwellized: E[theta | c, X] weighted by the visit frequencies.
  const double retained = chain.sweeps - chain.burn_in;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim_);
  for (std::size_t g = 0; g < grid_.size(); ++g) {
    if (visits[g] == 0) continue;
    mean += (visits[g] / retained) * priors_[g].posterior_mean(x, n_);
  }
  return to_estimate(mean, data.size());
}

std::vector<double> rgpg_chain(const Dataset& data, const RGPConfig& cfg, const ChainConfig& chain) {
  return RGPGModel(cfg, data.n).run(data, chain);
}

}  // namespace blockprior

#include "blockprior/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "blockprior/samplers.hpp"
#include "blockprior/special.hpp"

namespace blockprior {

int SieveConfig::dimension(int n) const {
  if (J >= 0) return J;
  return static_cast<int>(std::floor(std::pow(static_cast<double>(n), 1.0 / (2.0 * alpha + 1.0)) + 1e-12));
}

int SieveConfig::max_dimension(int n, int data_size) const {
  return std::min(k_max > 0 ? k_max : n, data_size);
}

void SieveConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("SieveConfig: alpha must be > 0");
  if (J < -1) throw std::invalid_argument("SieveConfig: J must be >= 0");
  if (!(D > 0.0)) throw std::invalid_argument("SieveConfig: D must be > 0");
  if (k_max < 0) throw std::invalid_argument("SieveConfig: k_max must be >= 0");
}

std::vector<double> fixed_sieve_posterior(const Dataset& data, const SieveConfig& cfg, Estimator estimator,
                                          RandomStream& rng) {
  cfg.validate();
  const int n = data.n;
  const int dim = std::min<int>(cfg.dimension(n), static_cast<int>(data.size()));
  std::vector<double> out(data.size(), 0.0);
  const double sd = std::sqrt(1.0 / (n + 1.0));
  for (int j = 0; j < dim; ++j) {
    out[j] = n * data.x[j] / (n + 1.0);
    if (estimator == Estimator::single_draw) out[j] += sd * sample_std_normal(rng);
  }
  return out;
}

double log_sieve_marginal(double x, int n) {
  const double y = std::sqrt(static_cast<double>(n)) * x;
  return 0.5 * std::log(static_cast<double>(n)) + 0.5 - std::numbers::ln2 +
         log_add_exp(-y + log_normal_cdf(y - 1.0), y + log_normal_cdf(-y - 1.0));
}

double log_noise_density(double x, int n) {
  const double y = std::sqrt(static_cast<double>(n)) * x;
  return 0.5 * std::log(static_cast<double>(n)) + log_normal_pdf(y);
}

std::vector<double> dimension_posterior(const Dataset& data, const SieveConfig& cfg) {
  cfg.validate();
  const int kmax = cfg.max_dimension(data.n, static_cast<int>(data.size()));
  std::vector<double> logs(kmax + 1);
  double gain = 0.0;
  logs[0] = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    gain += log_sieve_marginal(data.x[k - 1], data.n) - log_noise_density(data.x[k - 1], data.n);
    logs[k] = -cfg.D * k + gain;
  }
  const double z = log_sum_exp(logs);
  for (double& v : logs) v = std::exp(v - z);
  return logs;
}

LaplaceCoordinatePosterior::LaplaceCoordinatePosterior(double x, int n)
    : y_(std::sqrt(static_cast<double>(n)) * x), sqrt_n_(std::sqrt(static_cast<double>(n))) {
  const double lpos = -y_ + log_normal_cdf(y_ - 1.0);
  const double lneg = y_ + log_normal_cdf(-y_ - 1.0);
  p_pos_ = std::exp(lpos - log_add_exp(lpos, lneg));
}

double LaplaceCoordinatePosterior::mean() const {
  // Truncated normal means: mu + phi(mu)/Phi(mu) on (0, ∞), mu - phi(mu)/Phi(-mu) on (-∞, 0).
  const double mu_pos = y_ - 1.0;
  const double mu_neg = y_ + 1.0;
  const double m_pos = mu_pos + std::exp(log_normal_pdf(mu_pos) - log_normal_cdf(mu_pos));
  const double m_neg = mu_neg - std::exp(log_normal_pdf(mu_neg) - log_normal_cdf(-mu_neg));
  return (p_pos_ * m_pos + (1.0 - p_pos_) * m_neg) / sqrt_n_;
}

double LaplaceCoordinatePosterior::cdf(double theta) const {
  const double u = sqrt_n_ * theta;
  const double mu_pos = y_ - 1.0;
  const double mu_neg = y_ + 1.0;
  const double p_neg = 1.0 - p_pos_;
  if (u < 0.0) return p_neg * std::exp(log_normal_cdf(u - mu_neg) - log_normal_cdf(-mu_neg));
  // Mass of N(mu_pos, 1) on (u, ∞) relative to (0, ∞).
  const double upper = std::exp(log_normal_cdf(mu_pos - u) - log_normal_cdf(mu_pos));
  return p_neg + p_pos_ * (1.0 - upper);
}

double LaplaceCoordinatePosterior::sample(RandomStream& rng) const {
  double u;
  if (rng.uniform() < p_pos_) {
    const double mu = y_ - 1.0;
    u = mu + sample_std_normal_above(-mu, rng);
  } else {
    const double mu = y_ + 1.0;
    u = mu - sample_std_normal_above(mu, rng);
  }
  return u / sqrt_n_;
}

std::vector<double> adaptive_sieve_posterior(const Dataset& data, const SieveConfig& cfg, Estimator estimator,
                                             RandomStream& rng) {
  const std::vector<double> post = dimension_posterior(data, cfg);
  const int kmax = static_cast<int>(post.size()) - 1;
  std::vector<double> out(data.size(), 0.0);
  if (estimator == Estimator::posterior_mean) {
    // E[theta_j | X] = P(k >= j | X) E[theta_j | X_j, active].
    double tail = 1.0 - post[0];
    for (int j = 1; j <= kmax; ++j) {
      out[j - 1] = std::max(tail, 0.0) * LaplaceCoordinatePosterior(data.x[j - 1], data.n).mean();
      tail -= post[j];
    }
    return out;
  }
  const double u = rng.uniform();
  double cum = 0.0;
  int k = kmax;
  for (int i = 0; i <= kmax; ++i) {
    cum += post[i];
    if (u < cum) {
      k = i;
      break;
    }
  }
  for (int j = 1; j <= k; ++j) out[j - 1] = LaplaceCoordinatePosterior(data.x[j - 1], data.n).sample(rng);
  return out;
}

}  // namespace blockprior

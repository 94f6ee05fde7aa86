#include "blockprior/block_gibbs.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "blockprior/format.hpp"
#include "blockprior/quadrature.hpp"
#include "blockprior/samplers.hpp"
#include "blockprior/special.hpp"

namespace blockprior {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const GaussLegendreRule& gl8() {
  static const GaussLegendreRule rule = gauss_legendre(8);
  return rule;
}

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double sq_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

std::string to_string(Estimator e) {
  return e == Estimator::single_draw ? "single_draw" : "posterior_mean";
}

Estimator parse_estimator(const std::string& s) {
  if (s == "single_draw") return Estimator::single_draw;
  if (s == "posterior_mean") return Estimator::posterior_mean;
  throw std::invalid_argument("unknown estimator '" + s + "' (expected single_draw or posterior_mean)");
}

// ---------------------------------------------------------------------------
// Configuration

int BlockPriorConfig::leading_passthrough() const {
  if (passthrough_leading >= 0) return passthrough_leading;
  return scheme.kind() == BlockKind::exponential ? 2 : 0;
}

bool BlockPriorConfig::is_passthrough(int k) const {
  return k < leading_passthrough() || scheme.size(k) <= 2;
}

void BlockPriorConfig::validate() const {
  if (family != MixingFamily::two_level) {
    throw std::invalid_argument("BlockPriorConfig: the Gibbs sampler needs the two_level mixing family");
  }
  if (constraint_b && !(*constraint_b > 0.0)) {
    throw std::invalid_argument("BlockPriorConfig: constraint B must be > 0");
  }
  if (max_rejections < 1) throw std::invalid_argument("BlockPriorConfig: max_rejections must be >= 1");
  for (int k = 0; k < scheme.num_blocks(); ++k) {
    if (!is_passthrough(k) && scheme.size(k) <= 2) {
      throw std::logic_error("BlockPriorConfig: sampled block with n_k <= 2");
    }
  }
}

void ChainConfig::validate() const {
  if (sweeps < 1) throw std::invalid_argument("ChainConfig: sweeps must be >= 1");
  if (burn_in < 0 || burn_in >= sweeps) {
    throw std::invalid_argument("ChainConfig: burn_in must satisfy 0 <= burn_in < sweeps");
  }
}

// ---------------------------------------------------------------------------
// Conditional updates

double shrinkage_weight(double scale, int n) {
  const double na = n * scale;
  return na / (1.0 + na);
}

void sample_theta_given_scale(std::span<const double> x_k, double scale, int n, RandomStream& rng,
                              std::span<double> out) {
  if (!(scale > 0.0)) throw std::invalid_argument("sample_theta_given_scale: scale must be > 0");
  if (n < 1) throw std::invalid_argument("sample_theta_given_scale: n must be >= 1");
  const double w = shrinkage_weight(scale, n);
  const double sd = std::sqrt(scale / (1.0 + n * scale));
  for (std::size_t j = 0; j < x_k.size(); ++j) out[j] = w * x_k[j] + sd * sample_std_normal(rng);
}

MixtureWeights mixture_weights(double a, double b, int k) {
  if (!(a > 0.0)) throw std::invalid_argument("mixture_weights: a must be > 0");
  if (!(b >= 0.0)) throw std::invalid_argument("mixture_weights: b must be >= 0");
  const MixingDensity md(MixingFamily::two_level, k);
  auto log_mass_below = [&](double log_s) {
    if (b == 0.0) return 0.0;
    return log_reg_inc_gamma_upper(a, std::exp(std::log(b) - log_s));
  };
  const double l1 = md.log_t1() + log_mass_below(md.log_knot());
  const double l2 = md.log_t2() + log_mass_below(md.log_upper());
  const double total = log_add_exp(l1, l2);
  MixtureWeights w;
  w.log_lambda1 = l1 - total;
  w.log_lambda2 = l2 - total;
  w.lambda1 = std::exp(w.log_lambda1);
  w.lambda2 = 1.0 - w.lambda1;
  return w;
}

double sample_trunc_invgamma(double a, double b, double s, RandomStream& rng, bool* fallback) {
  if (!(a > 0.0) || !(b >= 0.0) || !(s > 0.0)) {
    throw std::invalid_argument("sample_trunc_invgamma: needs a > 0, b >= 0, s > 0");
  }
  if (fallback) *fallback = false;
  if (b == 0.0) {
    if (fallback) *fallback = true;
    return std::numeric_limits<double>::min();
  }
  const double x_min = std::isinf(s) ? 0.0 : b / s;  // t < s  <=>  b/t > x_min
  const double log_f = log_reg_inc_gamma_upper(a, x_min);
  if (log_f == kNegInf) {
    if (fallback) *fallback = true;
    return s * (1.0 - std::numeric_limits<double>::epsilon());
  }
  const double u = rng.uniform_open();
  const double log_q = std::log(u) + log_f;
  // 1 - u F(s) = (1 - u) + u P(a, b/s), kept accurate when F(s) ~ 1.
  const double log_p = x_min == 0.0 ? std::log1p(-u)
                                     : std::min(0.0, log_add_exp(std::log1p(-u), std::log(u) + log_reg_inc_gamma_lower(a, x_min)));
  const double x = inv_reg_inc_gamma(a, log_p, log_q);
  double t = b / x;
  if (!(t > 0.0) || !std::isfinite(t)) {
    if (fallback) *fallback = true;
    return std::isinf(s) ? std::numeric_limits<double>::max() : s * (1.0 - std::numeric_limits<double>::epsilon());
  }
  t = std::min(t, s);
  assert(t <= s);
  return t;
}

double trunc_invgamma_cdf(double a, double b, double s, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= s) return 1.0;
  const double log_ft = log_reg_inc_gamma_upper(a, b / t);
  const double log_fs = std::isinf(s) ? 0.0 : log_reg_inc_gamma_upper(a, b / s);
  return std::exp(log_ft - log_fs);
}

ScaleDraw sample_scale_given_theta(std::span<const double> theta_k, int k, RandomStream& rng) {
  const int nk = static_cast<int>(theta_k.size());
  if (nk <= 2) {
    throw std::invalid_argument("sample_scale_given_theta: block size " + std::to_string(nk) +
                                " <= 2 must be passed through");
  }
  const double a = 0.5 * nk - 1.0;
  const double b = 0.5 * sq_norm(theta_k);
  const MixtureWeights w = mixture_weights(a, b, k);
  const MixingDensity md(MixingFamily::two_level, k);
  ScaleDraw draw;
  draw.inner = rng.uniform() < w.lambda1;
  const double s = draw.inner ? md.knot() : md.upper();
  draw.scale = sample_trunc_invgamma(a, b, s, rng, &draw.fallback);
  return draw;
}

// ---------------------------------------------------------------------------
// Quadrature posterior of a single block

BlockPosterior oracle_block_posterior(std::span<const double> x_k, int k, int n, MixingFamily family,
                                      int panels) {
  if (x_k.empty()) throw std::invalid_argument("oracle_block_posterior: empty block");
  if (n < 1) throw std::invalid_argument("oracle_block_posterior: n must be >= 1");
  if (panels < 8) throw std::invalid_argument("oracle_block_posterior: need at least 8 panels");
  const MixingDensity md(family, k);
  const double nk = static_cast<double>(x_k.size());
  const double s2 = sq_norm(x_k);
  const double inv_n = 1.0 / n;

  auto log_lik = [=](double la) {
    const double v = std::exp(la) + inv_n;
    return -0.5 * nk * std::log(v) - s2 / (2.0 * v);
  };

  BlockPosterior post;
  post.log_density_ = [md, log_lik](double la) { return md.log_density(la) + la + log_lik(la); };

  const double log_lo = std::min(md.log_knot(), -std::log(static_cast<double>(n))) - 25.0;
  const double log_knot = std::max(md.log_knot(), log_lo);
  const double log_hi = md.log_upper();
  const double len_in = log_knot - log_lo;
  const double len_out = log_hi - log_knot;
  int p_in = panels, p_out = 0;
  if (len_out > 0.0) {
    p_out = std::clamp(static_cast<int>(std::lround(panels * len_out / (len_in + len_out))), panels / 4,
                       panels - panels / 4);
    p_in = panels - p_out;
  }
  post.edges_.reserve(panels + 1);
  for (int i = 0; i <= p_in; ++i) post.edges_.push_back(log_lo + len_in * i / p_in);
  for (int i = 1; i <= p_out; ++i) post.edges_.push_back(log_knot + len_out * i / p_out);

  const auto& rule = gl8();
  const int m = static_cast<int>(rule.nodes.size());
  const int np = static_cast<int>(post.edges_.size()) - 1;
  std::vector<double> log_w(static_cast<std::size_t>(np) * m);
  std::vector<double> node_la(log_w.size());
  std::vector<double> log_panel(np);
  for (int p = 0; p < np; ++p) {
    const double lo = post.edges_[p], hi = post.edges_[p + 1];
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    for (int i = 0; i < m; ++i) {
      const double la = mid + half * rule.nodes[i];
      node_la[p * m + i] = la;
      log_w[p * m + i] = std::log(half * rule.weights[i]) + post.log_density_(la);
    }
    log_panel[p] = log_sum_exp(std::span<const double>(log_w.data() + p * m, m));
  }
  // Below the lowest panel prior and likelihood are flat to within e^-25.
  const double log_floor = log_lo + md.log_density(log_lo) + log_lik(log_lo);
  std::vector<double> all = log_panel;
  all.push_back(log_floor);
  const double log_z = log_sum_exp(all);
  post.log_norm_ = log_z;
  post.log_evidence_ = log_z;
  post.floor_mass_ = std::exp(log_floor - log_z);

  post.mass_.resize(np);
  post.cum_.resize(np);
  double cum = post.floor_mass_;
  for (int p = 0; p < np; ++p) {
    post.mass_[p] = std::exp(log_panel[p] - log_z);
    cum += post.mass_[p];
    post.cum_[p] = cum;
  }

  double ew = post.floor_mass_ * shrinkage_weight(0.5 * std::exp(log_lo), n);
  double ela = post.floor_mass_ * (log_lo - 1.0);
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    const double pr = std::exp(log_w[i] - log_z);
    ew += pr * shrinkage_weight(std::exp(node_la[i]), n);
    ela += pr * node_la[i];
  }
  post.mean_weight_ = ew;
  post.mean_log_scale_ = ela;
  post.mean_.resize(x_k.size());
  for (std::size_t j = 0; j < x_k.size(); ++j) post.mean_[j] = ew * x_k[j];
  return post;
}

BlockPosterior point_mass_posterior(std::span<const double> x_k, int n, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("point_mass_posterior: scale must be > 0");
  BlockPosterior post;
  post.atom_ = scale;
  post.mean_weight_ = shrinkage_weight(scale, n);
  post.mean_log_scale_ = std::log(scale);
  const double v = scale + 1.0 / n;
  post.log_evidence_ = -0.5 * x_k.size() * std::log(v) - sq_norm(x_k) / (2.0 * v);
  post.mean_.resize(x_k.size());
  for (std::size_t j = 0; j < x_k.size(); ++j) post.mean_[j] = post.mean_weight_ * x_k[j];
  return post;
}

double BlockPosterior::cdf(double scale) const {
  if (atom_) return scale >= *atom_ ? 1.0 : 0.0;
  if (scale <= 0.0) return 0.0;
  const double la = std::log(scale);
  if (la <= edges_.front()) return floor_mass_ * std::exp(la - edges_.front());
  if (la >= edges_.back()) return 1.0;
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), la);
  const int p = static_cast<int>(it - edges_.begin()) - 1;
  const double before = p == 0 ? floor_mass_ : cum_[p - 1];
  const double lo = edges_[p];
  const double half = 0.5 * (la - lo), mid = 0.5 * (la + lo);
  const auto& rule = gl8();
  double partial = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    partial += half * rule.weights[i] * std::exp(log_density_(mid + half * rule.nodes[i]) - log_norm_);
  }
  return std::min(1.0, before + partial);
}

double BlockPosterior::quantile(double prob) const {
  if (atom_) return *atom_;
  if (prob <= 0.0) return 0.0;
  if (prob >= 1.0) return std::exp(edges_.back());
  if (prob <= floor_mass_) return std::exp(edges_.front()) * prob / floor_mass_;
  const auto it = std::lower_bound(cum_.begin(), cum_.end(), prob);
  const int p = std::min(static_cast<int>(it - cum_.begin()), static_cast<int>(cum_.size()) - 1);
  double lo = edges_[p], hi = edges_[p + 1];
  for (int iter = 0; iter < 60 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(std::exp(mid)) < prob) lo = mid; else hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------
// Chain

void DrawDump::write(long sweep, std::span<const double> theta) {
  if (!header_written_) {
    out_ << "# blockprior draws\nsweep";
    for (std::size_t j = 1; j <= theta.size(); ++j) out_ << ",theta_" << j;
    out_ << '\n';
    header_written_ = true;
  }
  out_ << sweep;
  for (double v : theta) out_ << ',' << format_double(v);
  out_ << '\n';
}

GibbsState initial_state(const Dataset& data, const BlockPriorConfig& cfg, RandomStream& rng) {
  cfg.validate();
  const BlockScheme& scheme = cfg.scheme;
  if (scheme.j_max() != static_cast<int>(data.size())) {
    throw std::invalid_argument("initial_state: block scheme covers " + std::to_string(scheme.j_max()) +
                                " coordinates, data has " + std::to_string(data.size()));
  }
  GibbsState state;
  state.theta = data.x;
  state.scale.assign(scheme.num_blocks(), 0.0);

  if (cfg.constraint_b) {
    const double bound = *cfg.constraint_b;
    double fixed = 0.0, free = 0.0;
    for (int k = 0; k < scheme.num_blocks(); ++k) {
      const double l1 = l1_norm(std::span<const double>(data.x).subspan(scheme.start(k) - 1, scheme.size(k)));
      (cfg.is_passthrough(k) ? fixed : free) += l1;
    }
    if (fixed >= bound) {
      throw std::invalid_argument("initial_state: passthrough coordinates alone have l1 norm " +
                                  std::to_string(fixed) + " >= B = " + std::to_string(bound));
    }
    if (fixed + free > bound) {
      const double factor = (0.99 * bound - fixed) / free;
      for (int k = 0; k < scheme.num_blocks(); ++k) {
        if (cfg.is_passthrough(k)) continue;
        for (int j = scheme.start(k); j < scheme.end(k); ++j) state.theta[j - 1] *= std::max(0.0, factor);
      }
    }
  }

  for (int k = 0; k < scheme.num_blocks(); ++k) {
    if (cfg.is_passthrough(k)) continue;
    const MixingDensity md(MixingFamily::two_level, k);
    if (cfg.init == InitRule::mid_support) {
      state.scale[k] = 0.5 * md.upper();
    } else {
      const auto x_k = std::span<const double>(data.x).subspan(scheme.start(k) - 1, scheme.size(k));
      const double a = oracle_block_posterior(x_k, k, data.n).sample(rng);
      state.scale[k] = std::clamp(a, std::numeric_limits<double>::min(), md.upper());
    }
  }
  return state;
}

void gibbs_sweep(GibbsState& state, const Dataset& data, const BlockPriorConfig& cfg, RandomStream& rng,
                 GibbsDiagnostics* diag) {
  const BlockScheme& scheme = cfg.scheme;
  if (state.theta.size() != data.size() || static_cast<int>(state.scale.size()) != scheme.num_blocks()) {
    throw std::invalid_argument("gibbs_sweep: state dimensions do not match data and scheme");
  }
  const int n = data.n;
  const bool constrained = cfg.constraint_b.has_value();
  double l1_total = constrained ? l1_norm(state.theta) : 0.0;
  std::vector<double> proposal;

  for (int k = 0; k < scheme.num_blocks(); ++k) {
    const int lo = scheme.start(k) - 1;
    const int nk = scheme.size(k);
    const auto x_k = std::span<const double>(data.x).subspan(lo, nk);
    const auto theta_k = std::span<double>(state.theta).subspan(lo, nk);

    if (cfg.is_passthrough(k)) {
      if (constrained) l1_total -= l1_norm(theta_k);
      std::copy(x_k.begin(), x_k.end(), theta_k.begin());
      if (constrained) l1_total += l1_norm(theta_k);
      continue;
    }

    const double scale = state.scale[k];
    if (!constrained) {
      sample_theta_given_scale(x_k, scale, n, rng, theta_k);
    } else {
      // Gaussian conditional restricted to the remaining l1 budget.
      const double budget = *cfg.constraint_b - (l1_total - l1_norm(theta_k));
      proposal.resize(nk);
      bool accepted = false;
      for (int attempt = 0; attempt < cfg.max_rejections; ++attempt) {
        sample_theta_given_scale(x_k, scale, n, rng, proposal);
        if (l1_norm(proposal) <= budget) {
          accepted = true;
          break;
        }
        if (diag) ++diag->constraint_rejections;
      }
      if (!accepted) {
        const double norm = l1_norm(proposal);
        const double factor = budget > 0.0 && norm > 0.0 ? 0.99 * budget / norm : 0.0;
        for (double& v : proposal) v *= factor;
        if (diag) ++diag->constraint_fallbacks;
      }
      l1_total += l1_norm(proposal) - l1_norm(theta_k);
      std::copy(proposal.begin(), proposal.end(), theta_k.begin());
    }
    if (diag) ++diag->theta_updates;

    if (cfg.update_scales) {
      const ScaleDraw draw = sample_scale_given_theta(theta_k, k, rng);
      state.scale[k] = draw.scale;
      if (diag) {
        ++diag->scale_updates;
        if (draw.inner) ++diag->inner_component[k];
        if (draw.fallback) ++diag->trunc_invgamma_fallbacks;
      }
    }
  }
  assert(!constrained || l1_norm(state.theta) <= *cfg.constraint_b * (1.0 + 1e-12));
  ++state.sweep_count;
}

ChainResult run_chain(const Dataset& data, const BlockPriorConfig& prior, const ChainConfig& chain,
                      DrawDump* dump) {
  chain.validate();
  RandomStream rng(chain.seed, chain.stream);
  ChainResult result;
  GibbsState state = initial_state(data, prior, rng);
  const int blocks = prior.scheme.num_blocks();

  GibbsDiagnostics& diag = result.diagnostics;
  diag.inner_component.assign(blocks, 0);
  diag.mean_log_scale.assign(blocks, 0.0);
  diag.min_scale.assign(blocks, std::numeric_limits<double>::infinity());
  diag.max_scale.assign(blocks, 0.0);

  std::vector<double> sum(data.size(), 0.0);
  const int retained = chain.sweeps - chain.burn_in;
  for (int sweep = 1; sweep <= chain.sweeps; ++sweep) {
    gibbs_sweep(state, data, prior, rng, &diag);
    if (sweep <= chain.burn_in) continue;
    if (chain.estimator == Estimator::posterior_mean) {
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += state.theta[j];
    }
    for (int k = 0; k < blocks; ++k) {
      if (prior.is_passthrough(k)) continue;
      const double a = state.scale[k];
      diag.mean_log_scale[k] += std::log(a) / retained;
      diag.min_scale[k] = std::min(diag.min_scale[k], a);
      diag.max_scale[k] = std::max(diag.max_scale[k], a);
    }
    if (dump) dump->write(sweep, state.theta);
  }

  if (chain.estimator == Estimator::posterior_mean) {
    result.estimate.resize(sum.size());
    for (std::size_t j = 0; j < sum.size(); ++j) result.estimate[j] = sum[j] / retained;
  } else {
    result.estimate = state.theta;
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace blockprior

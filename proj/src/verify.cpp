#include "blockprior/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "blockprior/blocks.hpp"
#include "blockprior/experiment.hpp"
#include "blockprior/format.hpp"
#include "blockprior/model.hpp"
#include "blockprior/quadrature.hpp"
#include "blockprior/rgp.hpp"
#include "blockprior/samplers.hpp"
#include "blockprior/sieve.hpp"
#include "blockprior/special.hpp"

namespace blockprior {

namespace {

constexpr int kLastSimulatedBlock = 7;
constexpr int kBoostedBlocks = 4;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// Running log-sum of weights and squared weights.
struct LogAccumulator {
  double log_sum = kNegInf;
  double log_sum_sq = kNegInf;
  long hits = 0;
  void add(double log_w) {
    log_sum = log_add_exp(log_sum, log_w);
    log_sum_sq = log_add_exp(log_sum_sq, 2.0 * log_w);
    ++hits;
  }
  MassEstimate finish(int n, double eps_sq, long draws) const {
    MassEstimate m;
    m.n = n;
    m.eps_sq = eps_sq;
    m.draws = draws;
    m.hits = hits;
    if (hits == 0) {
      m.estimate = 0.0;
      m.rel_se = std::numeric_limits<double>::infinity();
      return m;
    }
    const double log_mean = log_sum - std::log(static_cast<double>(draws));
    m.estimate = std::exp(log_mean);
    // Var(w) / N = (E[w^2] - E[w]^2) / N, relative to E[w].
    const double ratio = std::exp(log_sum_sq - std::log(static_cast<double>(draws)) - 2.0 * log_mean);
    m.rel_se = std::sqrt(std::max(ratio - 1.0, 0.0) / draws);
    return m;
  }
};

struct BlockGeometry {
  int k;
  int dim;           // coordinates of the block entering the event
  double truth_sq;   // Σ theta_0j^2 over those coordinates
};

// Blocks 0..kLastSimulatedBlock restricted to coordinates j > first_index;
// returns the truth energy past the last simulated block through `tail`.
std::vector<BlockGeometry> block_geometry(const SignalSpec& spec, int first_index, double* tail) {
  const BlockScheme scheme = BlockScheme::exponential(static_cast<int>(std::floor(std::exp(kLastSimulatedBlock + 1))) - 1);
  std::vector<BlockGeometry> out;
  for (int k = 0; k <= kLastSimulatedBlock; ++k) {
    BlockGeometry g{k, 0, 0.0};
    for (int j = std::max(scheme.start(k), first_index + 1); j < scheme.end(k); ++j) {
      const double t = spec.amplitude * std::pow(j, -spec.beta);
      g.truth_sq += t * t;
      ++g.dim;
    }
    if (g.dim > 0) out.push_back(g);
  }
  *tail = tail_energy(spec, scheme.j_max());
  return out;
}

// Scale proposal: g_k itself, or for boosted blocks an even mixture of g_k
// and the uniform law on the outer piece. Returns log g(A) - log q(A).
double propose_scale(const MixingDensity& md, bool boosted, RandomStream& rng, double* scale) {
  const bool has_outer = md.log_upper() > md.log_knot();
  if (!boosted || !has_outer) {
    *scale = md.sample(rng);
    return 0.0;
  }
  if (rng.uniform() < 0.5) {
    *scale = md.sample(rng);
  } else {
    *scale = md.knot() + (md.upper() - md.knot()) * rng.uniform_open();
  }
  const double log_g = md.log_density(std::log(*scale));
  const double log_uniform = *scale > md.knot() ? -std::log(md.upper() - md.knot()) : kNegInf;
  const double log_q = std::log(0.5) + log_add_exp(log_g, log_uniform);
  return log_g - log_q;
}

double chi_square(int df, RandomStream& rng) { return df <= 0 ? 0.0 : 2.0 * sample_gamma(0.5 * df, rng); }

double eps_sq_for(int n, double alpha) {
  const double eps = minimax_rate(alpha, n);
  return eps * eps;
}

}  // namespace

VerifyLevel parse_verify_level(const std::string& s) {
  if (s == "quick") return VerifyLevel::quick;
  if (s == "full") return VerifyLevel::full;
  throw std::invalid_argument("unknown verify level '" + s + "' (expected quick or full)");
}

bool VerifyReport::all_passed() const {
  return std::all_of(items.begin(), items.end(), [](const VerifyItem& i) { return i.passed; });
}

std::string VerifyReport::to_text() const {
  std::ostringstream os;
  for (const VerifyItem& item : items) {
    os << (item.passed ? "PASS" : "FAIL") << "  (" << item.id << ") " << item.title << '\n';
    for (const std::string& d : item.details) os << "        " << d << '\n';
  }
  os << (all_passed() ? "all items passed" : "some items failed") << '\n';
  return os.str();
}

MassEstimate prior_mass_estimate(int n, double alpha, MixingFamily family, long draws, std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("prior_mass_estimate: draws must be >= 1");
  const SignalSpec spec = SignalSpec::for_smoothness(alpha, 0);
  double tail = 0.0;
  const auto blocks = block_geometry(spec, 0, &tail);
  const double eps_sq = eps_sq_for(n, alpha);
  // Tilt variance: the proposal spreads about eps^2 / 2 over the leading coordinates.
  const double tilt = eps_sq / 40.0;
  std::vector<MixingDensity> densities;
  for (const auto& b : blocks) densities.emplace_back(family, b.k);

  RandomStream rng(seed, hash_words({0x6D617373ULL, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(family)}));
  LogAccumulator acc;
  for (long draw = 0; draw < draws; ++draw) {
    double log_w = 0.0;
    double dist = tail;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const BlockGeometry& b = blocks[i];
      double a;
      log_w += propose_scale(densities[i], b.k < kBoostedBlocks, rng, &a);
      const double r = std::sqrt(b.truth_sq);
      const double rho = a / (a + tilt);
      const double s = a * tilt / (a + tilt);
      const double along = rho * r + std::sqrt(s) * sample_std_normal(rng);
      const double rest = s * chi_square(b.dim - 1, rng);
      const double log_prior = -0.5 * b.dim * std::log(2.0 * std::numbers::pi * a) - (along * along + rest) / (2.0 * a);
      const double dev = along - rho * r;
      const double log_prop = -0.5 * b.dim * std::log(2.0 * std::numbers::pi * s) - (dev * dev + rest) / (2.0 * s);
      log_w += log_prior - log_prop;
      dist += (along - r) * (along - r) + rest;
    }
    if (dist <= eps_sq) acc.add(log_w);
  }
  return acc.finish(n, eps_sq, draws);
}

MassEstimate sieve_complement_mass(int n, double alpha, double beta, MixingFamily family, long draws,
                                   std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("sieve_complement_mass: draws must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("sieve_complement_mass: beta must be > 0");
  const SignalSpec spec = SignalSpec::for_smoothness(alpha, 0);
  const int first = static_cast<int>(std::floor(std::pow(n / beta, 1.0 / (2.0 * alpha + 1.0))));
  double tail = 0.0;
  const auto blocks = block_geometry(spec, first, &tail);
  const double eps_sq = eps_sq_for(n, alpha);
  std::vector<MixingDensity> densities;
  for (const auto& b : blocks) densities.emplace_back(family, b.k);

  RandomStream rng(seed, hash_words({0x7369657665ULL, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(family)}));
  LogAccumulator acc;
  for (long draw = 0; draw < draws; ++draw) {
    double log_w = 0.0;
    double dist = tail;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const BlockGeometry& b = blocks[i];
      double a;
      log_w += propose_scale(densities[i], b.k < kBoostedBlocks, rng, &a);
      const double r = std::sqrt(b.truth_sq);
      const double along = std::sqrt(a) * sample_std_normal(rng);
      const double rest = a * chi_square(b.dim - 1, rng);
      dist += (along - r) * (along - r) + rest;
    }
    if (dist > eps_sq) acc.add(log_w);
  }
  return acc.finish(n, eps_sq, draws);
}

std::vector<double> oracle_check_data(int k, int n) {
  const BlockScheme scheme = BlockScheme::exponential(static_cast<int>(std::floor(std::exp(k + 1))) - 1);
  const int nk = scheme.size(k);
  const double mag = std::sqrt(0.9 * std::exp(-static_cast<double>(k)) + 1.0 / n);
  std::vector<double> x(nk);
  for (int j = 0; j < nk; ++j) x[j] = (j % 2 == 0 ? mag : -mag);
  return x;
}

OracleComparison single_block_oracle_check(int k, int n, long sweeps, std::uint64_t seed, bool update_scales,
                                           InitRule init) {
  if (sweeps < 10) throw std::invalid_argument("single_block_oracle_check: need at least 10 sweeps");
  const std::vector<double> x = oracle_check_data(k, n);
  const BlockPosterior oracle = oracle_block_posterior(x, k, n);
  std::vector<double> edges(9);
  for (int i = 1; i <= 9; ++i) edges[i - 1] = oracle.quantile(i / 10.0);

  RandomStream rng(seed, hash_words({0x6F7261636C65ULL, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n)}));
  const MixingDensity md(MixingFamily::two_level, k);
  double scale = init == InitRule::mid_support ? 0.5 * md.upper() : std::min(oracle.sample(rng), md.upper());
  std::vector<double> theta(x.size()), sum(x.size(), 0.0);
  std::vector<long> bins(10, 0);
  double shrink = 0.0;
  for (long s = 0; s < sweeps; ++s) {
    sample_theta_given_scale(x, scale, n, rng, theta);
    if (update_scales) scale = sample_scale_given_theta(theta, k, rng).scale;
    for (std::size_t j = 0; j < x.size(); ++j) sum[j] += theta[j];
    bins[std::upper_bound(edges.begin(), edges.end(), scale) - edges.begin()]++;
    shrink += shrinkage_weight(scale, n);
  }
  OracleComparison out;
  out.k = k;
  out.n = n;
  out.sweeps = sweeps;
  out.oracle_shrinkage = oracle.mean_shrinkage();
  out.chain_shrinkage = shrink / sweeps;
  const auto& target = oracle.posterior_mean();
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double rel = std::abs(sum[j] / sweeps - target[j]) / std::abs(target[j]);
    out.max_rel_mean_error = std::max(out.max_rel_mean_error, rel);
  }
  double tv = 0.0;
  for (long b : bins) tv += std::abs(static_cast<double>(b) / sweeps - 0.1);
  out.tv = 0.5 * tv;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

VerifyItem item_conditions() {
  VerifyItem item{"a", "mixing conditions with c1 = c2 = c3 = 1, k = 1..10", true, {}};
  for (MixingFamily f : {MixingFamily::piecewise_linear, MixingFamily::two_level}) {
    const ConditionReport rep = verify_conditions(f, 1, 10);
    double lb = std::numeric_limits<double>::infinity(), mean = lb, tail = lb;
    for (const auto& c : rep.checks) {
      lb = std::min(lb, c.lower_bound_margin);
      mean = std::min(mean, c.mean_margin);
      tail = std::min(tail, c.tail_margin);
    }
    item.passed = item.passed && rep.all_ok();
    item.details.push_back(to_string(f) + ": " + (rep.all_ok() ? "ok" : "violated") +
                           "; smallest log-margins lower-bound " + fmt(lb) + ", mean " + fmt(mean) + ", tail " +
                           fmt(tail));
  }
  return item;
}

VerifyItem item_prior_mass(const VerifyOptions& opts) {
  VerifyItem item{"b", "prior mass of the eps_n-ball about theta_0, alpha = 1", true, {}};
  const long draws = opts.level == VerifyLevel::full ? 1000000 : 100000;
  for (MixingFamily f : {MixingFamily::two_level, MixingFamily::piecewise_linear}) {
    std::vector<double> cs;
    for (int n : {8, 16, 32}) {
      const MassEstimate m = prior_mass_estimate(n, 1.0, f, draws, opts.seed);
      const bool ok = m.estimate > 0.0 && std::isfinite(m.estimate);
      const double c = ok ? -std::log(m.estimate) / (n * m.eps_sq) : std::numeric_limits<double>::infinity();
      cs.push_back(c);
      item.passed = item.passed && ok;
      item.details.push_back(to_string(f) + " n=" + std::to_string(n) + ": mass " + fmt(m.estimate) + " (rel se " +
                             fmt(m.rel_se, 2) + ", " + std::to_string(m.hits) + " hits), fitted C " + fmt(c));
    }
    // Bounded: C does not grow across the n range.
    const bool bounded = cs.back() <= 2.0 * cs.front();
    item.passed = item.passed && bounded;
    item.details.push_back(to_string(f) + ": C(32) / C(8) = " + fmt(cs.back() / cs.front()) +
                           (bounded ? " (bounded)" : " (growing)"));
  }
  return item;
}

VerifyItem item_sieve_mass(const VerifyOptions& opts) {
  VerifyItem item{"c", "prior mass outside the sieve, beta = 0.01, alpha = 1", true, {}};
  const long draws = opts.level == VerifyLevel::full ? 400000 : 50000;
  for (MixingFamily f : {MixingFamily::two_level, MixingFamily::piecewise_linear}) {
    std::vector<double> masses;
    for (int n : {32, 64, 128}) {
      const MassEstimate m = sieve_complement_mass(n, 1.0, 0.01, f, draws, opts.seed);
      masses.push_back(m.estimate);
      item.details.push_back(to_string(f) + " n=" + std::to_string(n) + ": mass " + fmt(m.estimate) + " (rel se " +
                             fmt(m.rel_se, 2) + ")");
    }
    const bool decays = masses[0] > masses[1] && masses[1] > masses[2];
    item.passed = item.passed && decays;
    item.details.push_back(to_string(f) + (decays ? ": decreasing in n" : ": not decreasing in n"));
  }
  return item;
}

VerifyItem item_oracles(const VerifyOptions& opts) {
  VerifyItem item{"d", "samplers against exact oracles", true, {}};
  const long sweeps = 100000;
  for (int k : {1, 2, 3}) {
    for (int n : {100, 256}) {
      const OracleComparison c = single_block_oracle_check(k, n, sweeps, opts.seed, !opts.freeze_scales);
      const bool ok = c.max_rel_mean_error < 0.01 && c.tv < 0.02;
      item.passed = item.passed && ok;
      item.details.push_back("block k=" + std::to_string(k) + " n=" + std::to_string(n) + ": mean rel err " +
                             fmt(c.max_rel_mean_error, 3) + ", scale TV " + fmt(c.tv, 3) + (ok ? "" : "  <- fail"));
    }
  }

  // Fixed sieve against its closed form.
  {
    const TruthSequence truth = make_truth(SignalSpec::for_smoothness(1.0, opts.seed), 64);
    const Dataset data = gen_data(truth, 64, opts.seed, 1);
    RandomStream rng(opts.seed, 2);
    SieveConfig cfg;
    const auto mean = fixed_sieve_posterior(data, cfg, Estimator::posterior_mean, rng);
    const int dim = cfg.dimension(64);
    bool exact = true;
    for (int j = 0; j < 64; ++j) exact = exact && mean[j] == (j < dim ? 64.0 * data.x[j] / 65.0 : 0.0);
    item.passed = item.passed && exact;
    item.details.push_back(std::string("fixed sieve mean equals n X / (n + 1): ") + (exact ? "yes" : "no"));
  }
  // Adaptive sieve marginal against quadrature.
  {
    double worst = 0.0;
    for (int n : {16, 256}) {
      for (int xi = -3; xi <= 3; ++xi) {
        const double x = xi;
        const double sn = std::sqrt(static_cast<double>(n));
        auto integrand = [&](double t) {
          return sn * std::exp(log_normal_pdf(sn * (x - t))) * 0.5 * sn * std::exp(-sn * std::abs(t));
        };
        const double lo = x - 40.0 / sn, hi = x + 40.0 / sn;
        double q = 0.0;
        if (lo < 0.0 && hi > 0.0) {
          q = integrate(integrand, lo, 0.0, 0.0, 1e-13).value + integrate(integrand, 0.0, hi, 0.0, 1e-13).value;
        } else {
          q = integrate(integrand, lo, hi, 0.0, 1e-13).value;
        }
        const double m = std::exp(log_sieve_marginal(x, n));
        worst = std::max(worst, std::abs(m - q) / std::max(q, 1e-300));
      }
    }
    const bool ok = worst < 1e-9;
    item.passed = item.passed && ok;
    item.details.push_back("adaptive sieve marginal vs quadrature, worst rel err " + fmt(worst, 3));
  }
  // RGPF with identity covariance.
  {
    const TruthSequence truth = make_truth(SignalSpec::for_smoothness(1.0, opts.seed), 32);
    const Dataset data = gen_data(truth, 32, opts.seed, 3);
    RGPConfig cfg;
    cfg.identity_covariance = true;
    RandomStream rng(opts.seed, 4);
    const auto mean = rgpf_posterior(data, cfg, Estimator::posterior_mean, rng);
    double worst = 0.0;
    for (int j = 0; j < 32; ++j) worst = std::max(worst, std::abs(mean[j] - 32.0 / 33.0 * data.x[j]));
    const bool ok = worst < 1e-12;
    item.passed = item.passed && ok;
    item.details.push_back("identity-covariance GP mean vs n X / (n + 1), max abs err " + fmt(worst, 3));
  }
  return item;
}

VerifyItem item_trend(const VerifyOptions& opts) {
  VerifyItem item{"e", "BLOCK risk decreases from n = 256 to n = 512", true, {}};
  ExperimentSpec spec;
  spec.alphas = {1.0, 1.5};
  spec.ns = {256, 512};
  spec.methods = {Method::BLOCK};
  spec.master_seed = opts.seed;
  spec.threads = opts.threads;
  if (opts.level == VerifyLevel::quick) {
    spec.trials = 40;
    spec.sweeps = 600;
    spec.burn_in = 200;
  }
  const RiskTable table = run_experiment(spec);
  for (double alpha : spec.alphas) {
    const CellResult* a = table.find(Method::BLOCK, alpha, 256);
    const CellResult* b = table.find(Method::BLOCK, alpha, 512);
    const bool ok = a && b && !a->error && !b->error && b->median < a->median;
    item.passed = item.passed && ok;
    item.details.push_back("alpha=" + fmt(alpha) + ": median " + fmt(a ? a->median : NAN) + " -> " +
                           fmt(b ? b->median : NAN) + " over " + std::to_string(spec.trials) + " trials");
  }
  return item;
}

}  // namespace

VerifyReport verify_suite(const VerifyOptions& opts) {
  VerifyReport report;
  report.items.push_back(item_conditions());
  report.items.push_back(item_prior_mass(opts));
  report.items.push_back(item_sieve_mass(opts));
  report.items.push_back(item_oracles(opts));
  report.items.push_back(item_trend(opts));
  return report;
}

}  // namespace blockprior

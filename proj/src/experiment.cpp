#include "blockprior/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "blockprior/blocks.hpp"
#include "blockprior/format.hpp"
#include "blockprior/rgp.hpp"
#include "blockprior/sieve.hpp"

namespace blockprior {

namespace {

constexpr std::uint64_t kTruthTag = 0x7472757468ULL;  // "truth"
constexpr std::uint64_t kNoiseTag = 0x6E6F697365ULL;  // "noise"
constexpr std::uint64_t kMethodTag = 0x6D6574686FULL;
constexpr std::uint64_t kBootTag = 0x626F6F74ULL;

const std::vector<std::pair<Method, std::string>>& method_names() {
  static const std::vector<std::pair<Method, std::string>> names{
      {Method::RGPF, "RGPF"},         {Method::RGPG, "RGPG"},         {Method::BLOCK, "BLOCK"},
      {Method::mBLOCK, "mBLOCK"},     {Method::cBLOCK16, "cBLOCK16"}, {Method::cBLOCK32, "cBLOCK32"},
      {Method::SIEVE_F, "SIEVE_F"},   {Method::SIEVE_A, "SIEVE_A"}};
  return names;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::string to_string(Method m) {
  for (const auto& [method, name] : method_names()) {
    if (method == m) return name;
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (const auto& [method, name] : method_names()) {
    if (name == s) return method;
  }
  throw std::invalid_argument("unknown method '" + s +
                              "' (expected RGPF, RGPG, BLOCK, mBLOCK, cBLOCK16, cBLOCK32, SIEVE_F or SIEVE_A)");
}

std::vector<Method> parse_methods(const std::string& s) {
  if (s == "all") return all_methods();
  if (s == "table") return table_methods();
  std::vector<Method> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw std::invalid_argument("empty method list");
  return out;
}

std::vector<Method> table_methods() {
  return {Method::RGPF, Method::RGPG, Method::BLOCK, Method::mBLOCK, Method::cBLOCK16, Method::cBLOCK32};
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& entry : method_names()) out.push_back(entry.first);
  return out;
}

void ExperimentSpec::validate() const {
  if (alphas.empty() || ns.empty()) throw std::invalid_argument("ExperimentSpec: alphas and ns must be nonempty");
  if (methods.empty()) throw std::invalid_argument("ExperimentSpec: methods must be nonempty");
  if (trials < 1) throw std::invalid_argument("ExperimentSpec: trials must be >= 1");
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("ExperimentSpec: alpha must be > 0");
  }
  for (int n : ns) {
    if (n < 3) throw std::invalid_argument("ExperimentSpec: n must be >= 3");
  }
  if (adaptive_stop) {
    const StopRule& r = *adaptive_stop;
    if (r.min_trials < 2 || r.max_trials < r.min_trials || r.batch < 1 || !(r.rel_se > 0.0) ||
        r.bootstrap_reps < 10) {
      throw std::invalid_argument("ExperimentSpec: invalid adaptive stop rule");
    }
  }
  ChainConfig{sweeps, burn_in}.validate();
  ChainConfig{rgpg_sweeps, rgpg_burn_in}.validate();
  if (!(constraint_b > 0.0)) throw std::invalid_argument("ExperimentSpec: constraint_b must be > 0");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("ExperimentSpec: amplitude must be >= 0");
  if (threads < 0) throw std::invalid_argument("ExperimentSpec: threads must be >= 0");
}

std::string ExperimentSpec::canonical() const {
  std::ostringstream os;
  os << "alphas=";
  for (double a : alphas) os << format_double(a) << ';';
  os << " ns=";
  for (int n : ns) os << n << ';';
  os << " methods=";
  for (Method m : methods) os << to_string(m) << ';';
  os << " trials=" << trials;
  if (adaptive_stop) {
    os << " stop=" << adaptive_stop->min_trials << ',' << adaptive_stop->max_trials << ',' << adaptive_stop->batch
       << ',' << format_double(adaptive_stop->rel_se) << ',' << adaptive_stop->bootstrap_reps;
  }
  os << " seed=" << master_seed << " estimator=" << to_string(estimator) << " sweeps=" << sweeps
     << " burn_in=" << burn_in << " rgpg_sweeps=" << rgpg_sweeps << " rgpg_burn_in=" << rgpg_burn_in
     << " B=" << format_double(constraint_b) << " amplitude=" << format_double(amplitude);
  return os.str();
}

std::uint64_t ExperimentSpec::config_hash() const { return fnv1a(canonical()); }

const CellResult* RiskTable::find(Method m, double alpha, int n) const {
  for (const CellResult& r : rows) {
    if (r.method == m && r.alpha == alpha && r.n == n) return &r;
  }
  return nullptr;
}

double median_of(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  const std::size_t m = s.size() / 2;
  return s.size() % 2 == 1 ? s[m] : 0.5 * (s[m - 1] + s[m]);
}

double mad_of(std::span<const double> v) {
  const double med = median_of(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::abs(x - med));
  return median_of(dev);
}

double bootstrap_median_se(std::span<const double> v, RandomStream& rng, int reps) {
  if (v.size() < 2) return std::numeric_limits<double>::infinity();
  std::vector<double> meds(reps);
  std::vector<double> resample(v.size());
  for (int r = 0; r < reps; ++r) {
    for (double& x : resample) x = v[static_cast<std::size_t>(rng.uniform() * v.size())];
    meds[r] = median_of(resample);
  }
  double mean = 0.0;
  for (double m : meds) mean += m;
  mean /= reps;
  double ss = 0.0;
  for (double m : meds) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / (reps - 1));
}

std::uint64_t truth_sign_seed(std::uint64_t master_seed, double alpha) {
  return hash_words({master_seed, kTruthTag, double_bits(alpha)});
}

std::uint64_t noise_stream_id(double alpha, int n, int trial) {
  return hash_words({kNoiseTag, double_bits(alpha), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial)});
}

std::uint64_t method_stream_id(double alpha, int n, int trial, Method m) {
  return hash_words({kMethodTag, double_bits(alpha), static_cast<std::uint64_t>(n),
                     static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(m)});
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

struct MethodRunner::Caches {
  std::mutex mutex;
  std::map<std::pair<double, int>, std::shared_ptr<const RGPFModel>> rgpf;
  std::map<int, std::shared_ptr<const RGPGModel>> rgpg;
};

MethodRunner::MethodRunner(const ExperimentSpec& spec) : spec_(spec), caches_(std::make_unique<Caches>()) {}
MethodRunner::~MethodRunner() = default;

void MethodRunner::prepare(Method m, double alpha, int n) {
  if (m == Method::RGPF) {
    {
      std::lock_guard lock(caches_->mutex);
      if (caches_->rgpf.count({alpha, n})) return;
    }
    RGPConfig cfg;
    cfg.alpha = alpha;
    auto model = std::make_shared<const RGPFModel>(cfg, n);
    std::lock_guard lock(caches_->mutex);
    caches_->rgpf.emplace(std::make_pair(alpha, n), std::move(model));
  } else if (m == Method::RGPG) {
    {
      std::lock_guard lock(caches_->mutex);
      if (caches_->rgpg.count(n)) return;
    }
    RGPConfig cfg;
    cfg.mode = RGPMode::gamma_c;
    cfg.alpha = alpha;
    auto model = std::make_shared<const RGPGModel>(cfg, n);
    std::lock_guard lock(caches_->mutex);
    caches_->rgpg.emplace(n, std::move(model));
  }
}

MethodRunner::Outcome MethodRunner::run(Method m, double alpha, const Dataset& data, std::uint64_t stream) const {
  Outcome out;
  const int n = data.n;
  const int len = static_cast<int>(data.size());
  RandomStream rng(spec_.master_seed, stream);
  switch (m) {
    case Method::RGPF: {
      const auto it = caches_->rgpf.find({alpha, n});
      if (it == caches_->rgpf.end()) throw std::logic_error("MethodRunner: RGPF cell not prepared");
      out.estimate = it->second->estimate(data, spec_.estimator, rng);
      break;
    }
    case Method::RGPG: {
      const auto it = caches_->rgpg.find(n);
      if (it == caches_->rgpg.end()) throw std::logic_error("MethodRunner: RGPG cell not prepared");
      ChainConfig chain{spec_.rgpg_sweeps, spec_.rgpg_burn_in, spec_.estimator, spec_.master_seed, stream};
      out.estimate = it->second->run(data, chain);
      break;
    }
    case Method::BLOCK:
    case Method::mBLOCK:
    case Method::cBLOCK16:
    case Method::cBLOCK32: {
      BlockPriorConfig prior;
      prior.scheme = m == Method::cBLOCK16   ? BlockScheme::constant(16, len)
                     : m == Method::cBLOCK32 ? BlockScheme::constant(32, len)
                                             : BlockScheme::exponential(len);
      if (m == Method::mBLOCK) prior.constraint_b = spec_.constraint_b;
      ChainConfig chain{spec_.sweeps, spec_.burn_in, spec_.estimator, spec_.master_seed, stream};
      ChainResult res = run_chain(data, prior, chain);
      out.estimate = std::move(res.estimate);
      out.fallbacks = res.diagnostics.constraint_fallbacks + res.diagnostics.trunc_invgamma_fallbacks;
      break;
    }
    case Method::SIEVE_F: {
      SieveConfig cfg;
      cfg.alpha = alpha;
      out.estimate = fixed_sieve_posterior(data, cfg, spec_.estimator, rng);
      break;
    }
    case Method::SIEVE_A: {
      SieveConfig cfg;
      cfg.mode = SieveMode::adaptive;
      cfg.alpha = alpha;
      out.estimate = adaptive_sieve_posterior(data, cfg, spec_.estimator, rng);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RiskTable run_experiment(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  RiskTable table;
  table.master_seed = spec.master_seed;
  table.config_hash = spec.config_hash();

  std::map<std::pair<double, int>, TruthSequence> truths;
  for (double alpha : spec.alphas) {
    const SignalSpec sig = SignalSpec::for_smoothness(alpha, truth_sign_seed(spec.master_seed, alpha), spec.amplitude);
    for (int n : spec.ns) {
      truths.emplace(std::make_pair(alpha, n), make_truth(sig, n));
      table.tail_energy[{alpha, n}] = tail_energy(sig, n);
    }
  }

  struct Cell {
    Method method;
    double alpha;
    int n;
    std::vector<double> risks;
    std::vector<long> fallbacks;
    std::vector<double> seconds;
    std::optional<std::string> error;
    bool done = false;
  };
  std::vector<Cell> cells;
  for (double alpha : spec.alphas) {
    for (int n : spec.ns) {
      for (Method m : spec.methods) cells.push_back(Cell{m, alpha, n, {}, {}, {}, std::nullopt, false});
    }
  }

  MethodRunner runner(spec);
  parallel_for(cells.size(), spec.threads, [&](std::size_t i) {
    try {
      runner.prepare(cells[i].method, cells[i].alpha, cells[i].n);
    } catch (const std::exception& e) {
      cells[i].error = e.what();
    }
  });

  auto run_trials = [&](const std::vector<std::pair<std::size_t, int>>& items) {
    std::vector<double> risk(items.size());
    std::vector<long> fb(items.size());
    std::vector<double> secs(items.size());
    std::vector<std::optional<std::string>> errs(items.size());
    parallel_for(items.size(), spec.threads, [&](std::size_t w) {
      const auto [ci, trial] = items[w];
      const Cell& cell = cells[ci];
      const auto start = std::chrono::steady_clock::now();
      try {
        const TruthSequence& truth = truths.at({cell.alpha, cell.n});
        const Dataset data = gen_data(truth, cell.n, spec.master_seed, noise_stream_id(cell.alpha, cell.n, trial));
        const auto outcome =
            runner.run(cell.method, cell.alpha, data, method_stream_id(cell.alpha, cell.n, trial, cell.method));
        risk[w] = l2_risk(outcome.estimate, truth);
        fb[w] = outcome.fallbacks;
      } catch (const std::exception& e) {
        errs[w] = e.what();
        risk[w] = std::numeric_limits<double>::quiet_NaN();
      }
      secs[w] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    for (std::size_t w = 0; w < items.size(); ++w) {
      Cell& cell = cells[items[w].first];
      if (errs[w] && !cell.error) cell.error = "trial " + std::to_string(items[w].second) + ": " + *errs[w];
      cell.risks.push_back(risk[w]);
      cell.fallbacks.push_back(fb[w]);
      cell.seconds.push_back(secs[w]);
    }
  };

  auto finish = [&](Cell& cell) {
    cell.done = true;
    CellResult r;
    r.method = cell.method;
    r.alpha = cell.alpha;
    r.n = cell.n;
    r.seed = spec.master_seed;
    r.error = cell.error;
    r.trials = static_cast<int>(cell.risks.size());
    if (cell.error) {
      r.median = r.mad = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.median = median_of(cell.risks);
      r.mad = mad_of(cell.risks);
    }
    r.risks = cell.risks;
    for (long f : cell.fallbacks) r.fallbacks += f;
    if (spec.timing) {
      for (double s : cell.seconds) r.seconds += s;
    }
    if (progress) progress(r);
    return r;
  };

  std::vector<CellResult> results(cells.size());
  if (!spec.adaptive_stop) {
    std::vector<std::pair<std::size_t, int>> items;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      if (cells[ci].error) continue;
      for (int t = 0; t < spec.trials; ++t) items.emplace_back(ci, t);
    }
    run_trials(items);
    for (std::size_t ci = 0; ci < cells.size(); ++ci) results[ci] = finish(cells[ci]);
  } else {
    const StopRule& rule = *spec.adaptive_stop;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      if (cells[ci].error) results[ci] = finish(cells[ci]);
    }
    while (true) {
      std::vector<std::pair<std::size_t, int>> items;
      for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const Cell& cell = cells[ci];
        if (cell.done) continue;
        const int have = static_cast<int>(cell.risks.size());
        const int want = have == 0 ? rule.min_trials : std::min(rule.max_trials, have + rule.batch);
        for (int t = have; t < want; ++t) items.emplace_back(ci, t);
      }
      if (items.empty()) break;
      run_trials(items);
      for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        Cell& cell = cells[ci];
        if (cell.done) continue;
        const int have = static_cast<int>(cell.risks.size());
        bool stop = cell.error.has_value() || have >= rule.max_trials;
        if (!stop) {
          RandomStream boot(spec.master_seed, hash_words({kBootTag, double_bits(cell.alpha),
                                                          static_cast<std::uint64_t>(cell.n),
                                                          static_cast<std::uint64_t>(cell.method),
                                                          static_cast<std::uint64_t>(have)}));
          const double se = bootstrap_median_se(cell.risks, boot, rule.bootstrap_reps);
          stop = se < rule.rel_se * std::abs(median_of(cell.risks));
        }
        if (stop) results[ci] = finish(cell);
      }
    }
  }
  table.rows = std::move(results);
  return table;
}

}  // namespace blockprior

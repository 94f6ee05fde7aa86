#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockprior/block_gibbs.hpp"
#include "blockprior/model.hpp"
#include "blockprior/random.hpp"

namespace blockprior {

inline constexpr const char* kVersion = "1.0.0";

enum class Method { RGPF, RGPG, BLOCK, mBLOCK, cBLOCK16, cBLOCK32, SIEVE_F, SIEVE_A };

std::string to_string(Method m);
Method parse_method(const std::string& s);
/// Comma-separated list; "all" and "table" are accepted as shorthands.
std::vector<Method> parse_methods(const std::string& s);
/// The six methods of the simulation tables, in table order.
std::vector<Method> table_methods();
std::vector<Method> all_methods();

/// Optional adaptive trial count: stop a cell once the bootstrap standard
/// error of its median falls below rel_se times the median.
struct StopRule {
  int min_trials = 100;
  int max_trials = 1000;
  int batch = 50;
  double rel_se = 0.05;
  int bootstrap_reps = 200;
};

struct ExperimentSpec {
  std::vector<double> alphas{0.5, 1.0, 1.5};
  std::vector<int> ns{256, 512};
  std::vector<Method> methods = table_methods();
  int trials = 200;
  std::optional<StopRule> adaptive_stop;
  std::uint64_t master_seed = 20240601;
  Estimator estimator = Estimator::single_draw;
  int sweeps = 2000;
  int burn_in = 500;
  /// Chain length for RGPG, whose sweeps are costlier.
  int rgpg_sweeps = 200;
  int rgpg_burn_in = 50;
  double constraint_b = 30.0;
  double amplitude = 5.0;
  /// 0 uses the hardware concurrency.
  int threads = 0;
  /// Record wall time per cell; off keeps output byte-identical across runs.
  bool timing = false;

  void validate() const;
  /// Canonical text of every field that affects results.
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t config_hash() const;
};

struct CellResult {
  Method method = Method::BLOCK;
  double alpha = 0.0;
  int n = 0;
  double median = 0.0;
  double mad = 0.0;
  int trials = 0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  /// Per-trial risks in trial order (not serialized).
  std::vector<double> risks;
  /// Summed sampler fallbacks over trials (block methods only).
  long fallbacks = 0;
};

struct RiskTable {
  std::vector<CellResult> rows;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;
  std::string version = kVersion;
  /// Σ_{j > n} theta_0j^2 per (alpha, n), excluded from the risks.
  std::map<std::pair<double, int>, double> tail_energy;

  const CellResult* find(Method m, double alpha, int n) const;
};

double median_of(std::span<const double> v);
/// Unscaled median absolute deviation about the median.
double mad_of(std::span<const double> v);
double bootstrap_median_se(std::span<const double> v, RandomStream& rng, int reps);

/// Seeds and stream ids used by the harness.
std::uint64_t truth_sign_seed(std::uint64_t master_seed, double alpha);
std::uint64_t noise_stream_id(double alpha, int n, int trial);
std::uint64_t method_stream_id(double alpha, int n, int trial, Method m);

/// Precomputed per-(method, alpha, n) state such as GP factorizations.
class MethodRunner {
 public:
  explicit MethodRunner(const ExperimentSpec& spec);
  ~MethodRunner();
  MethodRunner(const MethodRunner&) = delete;
  MethodRunner& operator=(const MethodRunner&) = delete;

  /// Builds the caches a cell needs; thread-safe to call run() afterwards.
  void prepare(Method m, double alpha, int n);
  struct Outcome {
    std::vector<double> estimate;
    long fallbacks = 0;
  };
  Outcome run(Method m, double alpha, const Dataset& data, std::uint64_t stream) const;

 private:
  struct Caches;
  const ExperimentSpec& spec_;
  std::unique_ptr<Caches> caches_;
};

using ProgressFn = std::function<void(const CellResult&)>;

RiskTable run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});

/// Runs fn(i) for i in [0, count) on `threads` workers (0 = hardware).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace blockprior

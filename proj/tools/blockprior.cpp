#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "blockprior/block_gibbs.hpp"
#include "blockprior/blocks.hpp"
#include "blockprior/config.hpp"
#include "blockprior/experiment.hpp"
#include "blockprior/format.hpp"
#include "blockprior/report.hpp"
#include "blockprior/verify.hpp"

using namespace blockprior;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

struct SimulateArgs {
  std::string config;
  std::string alphas, ns, methods, estimator, out = "-", markdown;
  std::uint64_t seed = 0;
  int trials = 0, sweeps = 0, burn_in = 0, rgpg_sweeps = 0, rgpg_burn_in = 0, threads = 0;
  bool adaptive = false, timing = false, quiet = false;
};

int run_simulate(const SimulateArgs& a, const CLI::App& app) {
  ExperimentSpec spec;
  if (!a.config.empty()) apply_config(load_config_file(a.config), spec);
  if (const auto env = seed_from_env()) spec.master_seed = *env;
  auto given = [&](const char* name) { return app.count(name) > 0; };
  if (given("--alpha")) spec.alphas = parse_double_list(a.alphas);
  if (given("--n")) spec.ns = parse_int_list(a.ns);
  if (given("--methods")) spec.methods = parse_methods(a.methods);
  if (given("--trials")) spec.trials = a.trials;
  if (given("--seed")) spec.master_seed = a.seed;
  if (given("--estimator")) spec.estimator = parse_estimator(a.estimator);
  if (given("--sweeps")) spec.sweeps = a.sweeps;
  if (given("--burn-in")) spec.burn_in = a.burn_in;
  if (given("--rgpg-sweeps")) spec.rgpg_sweeps = a.rgpg_sweeps;
  if (given("--rgpg-burn-in")) spec.rgpg_burn_in = a.rgpg_burn_in;
  if (given("--threads")) spec.threads = a.threads;
  if (a.adaptive && !spec.adaptive_stop) spec.adaptive_stop = StopRule{};
  if (a.timing) spec.timing = true;
  spec.validate();

  ProgressFn progress;
  if (!a.quiet) {
    progress = [](const CellResult& r) {
      std::fprintf(stderr, "%-8s alpha=%-4s n=%-5d median=%.4f mad=%.4f trials=%d%s\n", to_string(r.method).c_str(),
                   format_double(r.alpha).c_str(), r.n, r.median, r.mad, r.trials,
                   r.error ? (" error: " + *r.error).c_str() : "");
    };
  }
  const RiskTable table = run_experiment(spec, progress);
  write_text(a.out, emit_csv(table));
  if (!a.markdown.empty()) write_text(a.markdown, emit_markdown(table));
  for (const CellResult& r : table.rows) {
    if (r.error) return 1;
  }
  return 0;
}

struct SampleArgs {
  double alpha = 1.0;
  int n = 256, trial = 0, sweeps = 2000, burn_in = 500;
  std::uint64_t seed = 20240601;
  std::string method = "BLOCK", estimator = "single_draw", draws, init = "collapsed_posterior";
  double constraint_b = 30.0;
};

int run_sample(const SampleArgs& a, const CLI::App& app) {
  std::uint64_t seed = a.seed;
  if (const auto env = seed_from_env()) seed = *env;
  if (app.count("--seed")) seed = a.seed;
  const Method method = parse_method(a.method);
  BlockPriorConfig prior;
  switch (method) {
    case Method::BLOCK:
    case Method::mBLOCK:
      prior.scheme = BlockScheme::exponential(a.n);
      break;
    case Method::cBLOCK16:
      prior.scheme = BlockScheme::constant(16, a.n);
      break;
    case Method::cBLOCK32:
      prior.scheme = BlockScheme::constant(32, a.n);
      break;
    default:
      throw std::invalid_argument("sample runs the block samplers only (BLOCK, mBLOCK, cBLOCK16, cBLOCK32)");
  }
  if (method == Method::mBLOCK) prior.constraint_b = a.constraint_b;
  if (a.init == "mid_support") {
    prior.init = InitRule::mid_support;
  } else if (a.init != "collapsed_posterior") {
    throw std::invalid_argument("unknown init rule '" + a.init + "' (expected collapsed_posterior or mid_support)");
  }

  const TruthSequence truth = make_truth(SignalSpec::for_smoothness(a.alpha, truth_sign_seed(seed, a.alpha)), a.n);
  const Dataset data = gen_data(truth, a.n, seed, noise_stream_id(a.alpha, a.n, a.trial));
  ChainConfig chain{a.sweeps, a.burn_in, parse_estimator(a.estimator), seed,
                    method_stream_id(a.alpha, a.n, a.trial, method)};

  std::ofstream dump_file;
  std::unique_ptr<DrawDump> dump;
  if (!a.draws.empty()) {
    if (a.draws == "-") {
      dump = std::make_unique<DrawDump>(std::cout);
    } else {
      dump_file.open(a.draws, std::ios::binary);
      if (!dump_file) throw std::runtime_error("cannot write '" + a.draws + "'");
      dump = std::make_unique<DrawDump>(dump_file);
    }
  }
  const ChainResult res = run_chain(data, prior, chain, dump.get());
  const GibbsDiagnostics& d = res.diagnostics;
  std::ostream& info = a.draws == "-" ? std::cerr : std::cout;
  info << "method " << a.method << "  alpha " << format_double(a.alpha) << "  n " << a.n << "  trial " << a.trial
       << "  seed " << seed << '\n';
  info << "l2 risk " << format_double(l2_risk(res.estimate, truth)) << "  (truth tail beyond n "
       << format_double(tail_energy(truth.spec, a.n)) << ")\n";
  info << "theta updates " << d.theta_updates << "  scale updates " << d.scale_updates << "  constraint rejections "
       << d.constraint_rejections << "  constraint fallbacks " << d.constraint_fallbacks
       << "  inverse-gamma fallbacks " << d.trunc_invgamma_fallbacks << '\n';
  info << "block  size  inner-share  mean-log-scale  min-scale  max-scale\n";
  for (int k = 0; k < prior.scheme.num_blocks(); ++k) {
    char line[160];
    if (prior.is_passthrough(k)) {
      std::snprintf(line, sizeof line, "%5d %5d  passthrough\n", k, prior.scheme.size(k));
    } else {
      std::snprintf(line, sizeof line, "%5d %5d  %11.4f  %14.4f  %9.3e  %9.3e\n", k, prior.scheme.size(k),
                    static_cast<double>(d.inner_component[k]) / a.sweeps, d.mean_log_scale[k], d.min_scale[k],
                    d.max_scale[k]);
    }
    info << line;
  }
  return 0;
}

struct VerifyArgs {
  std::string level = "quick";
  std::uint64_t seed = 20240601;
  bool freeze = false;
  int threads = 0;
};

int run_verify(const VerifyArgs& a, const CLI::App& app) {
  VerifyOptions opts;
  opts.level = parse_verify_level(a.level);
  opts.seed = a.seed;
  if (const auto env = seed_from_env()) opts.seed = *env;
  if (app.count("--seed")) opts.seed = a.seed;
  opts.freeze_scales = a.freeze;
  opts.threads = a.threads;
  const VerifyReport rep = verify_suite(opts);
  std::cout << rep.to_text();
  return rep.all_passed() ? 0 : 1;
}

struct OracleArgs {
  int k = 1, n = 100, panels = 2000;
  std::string x, family = "two_level";
  double alpha = 1.0;
  int trial = 0;
  std::uint64_t seed = 20240601;
};

int run_oracle(const OracleArgs& a, const CLI::App& app) {
  std::vector<double> x;
  if (!a.x.empty()) {
    x = parse_double_list(a.x);
  } else {
    // Block k of a simulated dataset.
    std::uint64_t seed = a.seed;
    if (const auto env = seed_from_env()) seed = *env;
    if (app.count("--seed")) seed = a.seed;
    const TruthSequence truth = make_truth(SignalSpec::for_smoothness(a.alpha, truth_sign_seed(seed, a.alpha)), a.n);
    const Dataset data = gen_data(truth, a.n, seed, noise_stream_id(a.alpha, a.n, a.trial));
    const BlockScheme scheme = BlockScheme::exponential(a.n);
    if (a.k >= scheme.num_blocks()) throw std::invalid_argument("block index beyond the scheme for this n");
    x.assign(data.x.begin() + (scheme.start(a.k) - 1), data.x.begin() + (scheme.end(a.k) - 1));
  }
  const BlockPosterior post = oracle_block_posterior(x, a.k, a.n, parse_mixing_family(a.family), a.panels);
  std::cout << "block " << a.k << "  n " << a.n << "  size " << x.size() << "  family " << a.family << '\n';
  std::cout << "log evidence " << format_double(post.log_evidence()) << '\n';
  std::cout << "E[shrinkage | X] " << format_double(post.mean_shrinkage()) << '\n';
  std::cout << "E[log A | X] " << format_double(post.mean_log_scale()) << '\n';
  std::cout << "A quantiles";
  for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) std::cout << "  " << p << ": " << format_double(post.quantile(p));
  std::cout << '\n';
  std::cout << "j,x,posterior_mean\n";
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::cout << j + 1 << ',' << format_double(x[j]) << ',' << format_double(post.posterior_mean()[j]) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block prior simulations for the Gaussian sequence model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a risk simulation and write CSV");
  simulate->add_option("--config", sim.config, "Key-value config file")->check(CLI::ExistingFile);
  simulate->add_option("--alpha", sim.alphas, "Comma-separated smoothness values");
  simulate->add_option("--n", sim.ns, "Comma-separated sample sizes");
  simulate->add_option("--methods", sim.methods, "Comma-separated methods, or 'table' / 'all'");
  simulate->add_option("--trials", sim.trials, "Trials per cell");
  simulate->add_option("--seed", sim.seed, "Master seed (overrides BLOCKPRIOR_SEED)");
  simulate->add_option("--estimator", sim.estimator, "single_draw or posterior_mean");
  simulate->add_option("--sweeps", sim.sweeps, "Gibbs sweeps for block methods");
  simulate->add_option("--burn-in", sim.burn_in, "Burn-in sweeps for block methods");
  simulate->add_option("--rgpg-sweeps", sim.rgpg_sweeps, "Sweeps for RGPG");
  simulate->add_option("--rgpg-burn-in", sim.rgpg_burn_in, "Burn-in for RGPG");
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  simulate->add_flag("--adaptive-stop", sim.adaptive, "Stop cells by the bootstrap SE rule");
  simulate->add_flag("--timing", sim.timing, "Record per-cell seconds (output no longer reproducible)");
  simulate->add_option("--out", sim.out, "CSV output path ('-' = stdout)");
  simulate->add_option("--markdown", sim.markdown, "Also write a markdown table");
  simulate->add_flag("--quiet", sim.quiet, "No progress lines on stderr");

  SampleArgs smp;
  auto* sample = app.add_subcommand("sample", "Run one block-prior chain and report diagnostics");
  sample->add_option("--method", smp.method, "BLOCK, mBLOCK, cBLOCK16 or cBLOCK32");
  sample->add_option("--alpha", smp.alpha, "Smoothness of the truth");
  sample->add_option("--n", smp.n, "Sample size");
  sample->add_option("--trial", smp.trial, "Trial index selecting the noise stream");
  sample->add_option("--seed", smp.seed, "Master seed");
  sample->add_option("--sweeps", smp.sweeps, "Total sweeps");
  sample->add_option("--burn-in", smp.burn_in, "Burn-in sweeps");
  sample->add_option("--estimator", smp.estimator, "single_draw or posterior_mean");
  sample->add_option("--init", smp.init, "collapsed_posterior or mid_support");
  sample->add_option("--constraint-b", smp.constraint_b, "l1 radius for mBLOCK");
  sample->add_option("--draws", smp.draws, "Write retained draws as CSV ('-' = stdout)");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("--level", ver.level, "quick or full");
  verify->add_option("--seed", ver.seed, "Seed");
  verify->add_option("--threads", ver.threads, "Worker threads (0 = all cores)");
  verify->add_flag("--freeze-scales", ver.freeze, "Skip scale updates in the oracle check (should fail)");

  OracleArgs orc;
  auto* oracle = app.add_subcommand("oracle", "Quadrature posterior of one block scale");
  oracle->add_option("--k", orc.k, "Block index");
  oracle->add_option("--n", orc.n, "Sample size");
  oracle->add_option("--x", orc.x, "Comma-separated block observations (default: simulated block k)");
  oracle->add_option("--alpha", orc.alpha, "Smoothness of the simulated truth");
  oracle->add_option("--trial", orc.trial, "Trial index of the simulated data");
  oracle->add_option("--seed", orc.seed, "Master seed of the simulated data");
  oracle->add_option("--family", orc.family, "two_level or piecewise_linear");
  oracle->add_option("--panels", orc.panels, "Quadrature panels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(sim, *simulate);
    if (*sample) return run_sample(smp, *sample);
    if (*verify) return run_verify(ver, *verify);
    if (*oracle) return run_oracle(orc, *oracle);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    for (CLI::App* sub : app.get_subcommands()) std::cerr << sub->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <vector>

#include "blockprior/config.hpp"
#include "blockprior/experiment.hpp"
#include "blockprior/format.hpp"
#include "blockprior/report.hpp"
#include "blockprior/verify.hpp"

using namespace blockprior;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.alphas = {1.0};
  spec.ns = {64};
  spec.methods = {Method::BLOCK, Method::SIEVE_F};
  spec.trials = 6;
  spec.sweeps = 200;
  spec.burn_in = 50;
  spec.threads = 1;
  spec.master_seed = 7;
  return spec;
}

RiskTable synthetic_table() {
  RiskTable t;
  t.master_seed = 20240601;
  t.config_hash = 0xfeedbeefcafe1234ULL;
  double v = 0.1234567890123;
  for (int n : {256, 512}) {
    for (double alpha : {0.5, 1.0, 1.5}) {
      t.tail_energy[{alpha, n}] = 1e-3 / alpha / n;
      for (Method m : table_methods()) {
        CellResult r;
        r.method = m;
        r.alpha = alpha;
        r.n = n;
        r.median = v;
        r.mad = v / 7.0;
        r.trials = 200;
        r.seed = t.master_seed;
        v *= 1.37;
        t.rows.push_back(r);
      }
    }
  }
  return t;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BLOCKPRIOR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("method names") {
  for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
  CHECK(all_methods().size() == 8);
  CHECK(table_methods() == std::vector<Method>{Method::RGPF, Method::RGPG, Method::BLOCK, Method::mBLOCK,
                                               Method::cBLOCK16, Method::cBLOCK32});
  CHECK(parse_methods("all") == all_methods());
  CHECK(parse_methods("table") == table_methods());
  CHECK(parse_methods("BLOCK,SIEVE_A") == std::vector<Method>{Method::BLOCK, Method::SIEVE_A});
  CHECK_THROWS_AS(parse_method("GP"), std::invalid_argument);
  CHECK_THROWS_AS(parse_methods(""), std::invalid_argument);
}

TEST_CASE("median and unscaled MAD") {
  const std::vector<double> odd{5.0, 1.0, 3.0, 100.0, 2.0};
  CHECK(median_of(odd) == 3.0);
  CHECK(mad_of(odd) == 2.0);  // deviations 2, 2, 0, 97, 1
  const std::vector<double> even{1.0, 2.0, 4.0, 10.0};
  CHECK(median_of(even) == 3.0);
  CHECK(mad_of(even) == 1.5);  // deviations 2, 1, 1, 7
}

TEST_CASE("bootstrap standard error of the median") {
  std::vector<double> v(400);
  RandomStream gen(1, 1);
  for (auto& x : v) x = gen.uniform();
  RandomStream rng(2, 2);
  const double se = bootstrap_median_se(v, rng, 400);
  // Asymptotic SE of a uniform median is 1 / (2 sqrt(n)) = 0.025.
  CHECK(se > 0.015);
  CHECK(se < 0.04);
}

TEST_CASE("stream identifiers separate cells, trials and methods") {
  std::set<std::uint64_t> ids;
  for (double a : {0.5, 1.0, 1.5}) {
    for (int n : {256, 512}) {
      for (int t = 0; t < 50; ++t) {
        ids.insert(noise_stream_id(a, n, t));
        for (Method m : all_methods()) ids.insert(method_stream_id(a, n, t, m));
      }
    }
  }
  CHECK(ids.size() == 3 * 2 * 50 * 9);
  CHECK(truth_sign_seed(1, 1.0) == truth_sign_seed(1, 1.0));
  CHECK(truth_sign_seed(1, 1.0) != truth_sign_seed(1, 1.5));
  CHECK(truth_sign_seed(1, 1.0) != truth_sign_seed(2, 1.0));
}

TEST_CASE("spec validation") {
  auto spec = small_spec();
  CHECK_NOTHROW(spec.validate());
  spec.trials = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.methods.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.burn_in = spec.sweeps;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("config hash tracks result-relevant fields only") {
  const auto base = small_spec();
  auto other = base;
  other.threads = 8;
  other.timing = true;
  CHECK(other.config_hash() == base.config_hash());
  other.trials = 7;
  CHECK(other.config_hash() != base.config_hash());
  other = base;
  other.master_seed = 8;
  CHECK(other.config_hash() != base.config_hash());
}

TEST_CASE("parallel_for visits every index exactly once") {
  for (int threads : {1, 3, 0}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i].fetch_add(1); });
    CHECK(std::all_of(hits.begin(), hits.end(), [](const std::atomic<int>& h) { return h.load() == 1; }));
  }
}

TEST_CASE("experiment reruns are identical and independent of thread count") {
  auto spec = small_spec();
  const auto a = run_experiment(spec);
  const auto b = run_experiment(spec);
  spec.threads = 4;
  const auto c = run_experiment(spec);
  REQUIRE(a.rows.size() == 2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].risks == b.rows[i].risks);
    CHECK(a.rows[i].risks == c.rows[i].risks);
    CHECK(a.rows[i].median == median_of(a.rows[i].risks));
    CHECK(a.rows[i].mad == mad_of(a.rows[i].risks));
    CHECK(a.rows[i].trials == 6);
    CHECK(a.rows[i].seconds == 0.0);
  }
  CHECK(emit_csv(a) == emit_csv(c));
  CHECK(a.tail_energy.at({1.0, 64}) > 0.0);
}

TEST_CASE("single trial reruns give the same table") {
  auto spec = small_spec();
  spec.methods = {Method::BLOCK};
  spec.trials = 1;
  CHECK(emit_csv(run_experiment(spec)) == emit_csv(run_experiment(spec)));
}

TEST_CASE("a failing method marks its cell and leaves the others") {
  auto spec = small_spec();
  spec.methods = {Method::mBLOCK, Method::BLOCK};
  spec.constraint_b = 0.5;  // below the passthrough l1 norm
  const auto t = run_experiment(spec);
  const auto* bad = t.find(Method::mBLOCK, 1.0, 64);
  const auto* good = t.find(Method::BLOCK, 1.0, 64);
  REQUIRE(bad);
  REQUIRE(good);
  CHECK(bad->error.has_value());
  CHECK(std::isnan(bad->median));
  CHECK_FALSE(good->error.has_value());
  CHECK(good->median > 0.0);
  const auto csv = emit_csv(t);
  CHECK(csv.find("# error method=mBLOCK") != std::string::npos);
  const auto back = parse_csv(csv);
  CHECK(back.find(Method::mBLOCK, 1.0, 64)->error.has_value());
}

TEST_CASE("adaptive stop rule stays within its trial bounds") {
  auto spec = small_spec();
  spec.methods = {Method::SIEVE_F};
  spec.adaptive_stop = StopRule{20, 60, 10, 0.05, 100};
  const auto t = run_experiment(spec);
  const int trials = t.rows.at(0).trials;
  CHECK(trials >= 20);
  CHECK(trials <= 60);
  CHECK((trials - 20) % 10 == 0);
  CHECK(emit_csv(t) == emit_csv(run_experiment(spec)));
}

TEST_CASE("timing fills the seconds column when enabled") {
  auto spec = small_spec();
  spec.methods = {Method::BLOCK};
  spec.timing = true;
  CHECK(run_experiment(spec).rows.at(0).seconds > 0.0);
}

TEST_CASE("empty table emits only comments and the header") {
  RiskTable t;
  t.master_seed = 3;
  const auto csv = emit_csv(t);
  std::istringstream in(csv);
  std::string line, last;
  int data_lines = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++data_lines;
    last = line;
  }
  CHECK(data_lines == 1);
  CHECK(last == "method,alpha,n,median,mad,trials,seconds,seed");
  CHECK(parse_csv(csv).rows.empty());
}

TEST_CASE("CSV embeds seed and hash and round-trips") {
  const auto t = synthetic_table();
  const auto csv = emit_csv(t);
  CHECK(csv.rfind("# blockprior 1.0.0 seed=20240601 config=feedbeefcafe1234", 0) == 0);
  const auto back = parse_csv(csv);
  CHECK(back.master_seed == t.master_seed);
  CHECK(back.config_hash == t.config_hash);
  CHECK(back.version == t.version);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].method == t.rows[i].method);
    CHECK(back.rows[i].alpha == t.rows[i].alpha);
    CHECK(back.rows[i].n == t.rows[i].n);
    CHECK(std::fabs(back.rows[i].median - t.rows[i].median) <= 1e-12 * t.rows[i].median);
    CHECK(std::fabs(back.rows[i].mad - t.rows[i].mad) <= 1e-12 * t.rows[i].mad);
    CHECK(back.rows[i].trials == t.rows[i].trials);
    CHECK(back.rows[i].seed == t.rows[i].seed);
  }
  for (const auto& [key, tail] : t.tail_energy) CHECK(back.tail_energy.at(key) == doctest::Approx(tail).epsilon(1e-12));
  CHECK_THROWS_AS(parse_csv("method,alpha\nBLOCK,1\n"), std::invalid_argument);
}

TEST_CASE("CSV uses a dot decimal separator whatever the locale") {
  const auto t = synthetic_table();
  const auto before = emit_csv(t);
  for (const char* name : {"de_DE.UTF-8", "fr_FR.UTF-8", "C.UTF-8"}) {
    try {
      const auto old = std::locale::global(std::locale(name));
      CHECK(emit_csv(t) == before);
      std::locale::global(old);
    } catch (const std::runtime_error&) {
      // Locale not installed.
    }
  }
  CHECK(before.find("0.1234567890123") != std::string::npos);
}

TEST_CASE("markdown uses the two-column table layout") {
  const auto md = emit_markdown(synthetic_table());
  CHECK(md.find("<!-- blockprior") != std::string::npos);
  CHECK(md.find("### Estimation errors for n = 256: median (MAD)") != std::string::npos);
  CHECK(md.find("### Estimation errors for n = 512: median (MAD)") != std::string::npos);
  for (Method m : table_methods()) {
    std::size_t count = 0, pos = 0;
    const std::string name = "| " + to_string(m) + " |";
    while ((pos = md.find(name, pos)) != std::string::npos) {
      ++count;
      pos += name.size();
    }
    CAPTURE(to_string(m));
    CHECK(count == 6);  // 3 alphas x 2 sample sizes
  }
  CHECK(md.find("| 0.5 | RGPF | 0.123 (0.018) |") != std::string::npos);
}

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, 2.523, 1e-300, 6.02214076e23, -0.0, 123456789.0}) {
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("1,5"), std::invalid_argument);
}

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\nalphas = 0.5, 1\n\nns=256\ntrials = 10  # trailing\ntrials = 12\n");
  CHECK(kv.at("alphas") == "0.5, 1");
  CHECK(kv.at("trials") == "12");
  try {
    parse_config_text("alphas = 1\nthis line is broken\n");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("config application") {
  ExperimentSpec spec;
  apply_config(parse_config_text("alphas = 1, 1.5\nns = 128\nmethods = BLOCK,RGPF\ntrials = 9\nseed = 11\n"
                                 "estimator = posterior_mean\nsweeps = 300\nburn_in = 100\nadaptive_stop = true\n"
                                 "stop_min_trials = 30\n"),
               spec);
  CHECK(spec.alphas == std::vector<double>{1.0, 1.5});
  CHECK(spec.ns == std::vector<int>{128});
  CHECK(spec.methods == std::vector<Method>{Method::BLOCK, Method::RGPF});
  CHECK(spec.trials == 9);
  CHECK(spec.master_seed == 11);
  CHECK(spec.estimator == Estimator::posterior_mean);
  CHECK(spec.sweeps == 300);
  REQUIRE(spec.adaptive_stop.has_value());
  CHECK(spec.adaptive_stop->min_trials == 30);
  CHECK_THROWS_AS(apply_config({{"colour", "blue"}}, spec), std::invalid_argument);
  CHECK_THROWS_AS(apply_config({{"trials", "many"}}, spec), std::invalid_argument);
  CHECK_THROWS_AS(parse_double_list("1, x"), std::invalid_argument);
  CHECK(parse_int_list("256, 512") == std::vector<int>{256, 512});
}

TEST_CASE("environment seed") {
  ::unsetenv("BLOCKPRIOR_SEED");
  CHECK_FALSE(seed_from_env().has_value());
  ::setenv("BLOCKPRIOR_SEED", "424242", 1);
  CHECK(seed_from_env() == std::optional<std::uint64_t>(424242));
  ::setenv("BLOCKPRIOR_SEED", "abc", 1);
  CHECK_THROWS_AS(seed_from_env(), std::invalid_argument);
  ::unsetenv("BLOCKPRIOR_SEED");
}

TEST_CASE("prior mass estimates are positive with bounded exponent") {
  std::vector<double> c;
  for (int n : {8, 16, 32}) {
    const auto m = prior_mass_estimate(n, 1.0, MixingFamily::two_level, 200000, 5);
    CAPTURE(n);
    REQUIRE(m.estimate > 0.0);
    const double eps = m.eps_sq;
    c.push_back(-std::log(m.estimate) / (n * eps));
  }
  MESSAGE("fitted constants " << c[0] << ", " << c[1] << ", " << c[2]);
  CHECK(c[2] <= 2 * c[0]);
}

TEST_CASE("sieve complement mass decays in n") {
  double prev = 1.0;
  for (int n : {32, 64, 128}) {
    const auto m = sieve_complement_mass(n, 1.0, 0.01, MixingFamily::two_level, 200000, 6);
    CAPTURE(n);
    CHECK(m.estimate < prev);
    prev = m.estimate;
  }
}

TEST_CASE("verify suite passes, and fails once the scales are frozen") {
  VerifyOptions opts;
  opts.threads = 1;
  const auto report = verify_suite(opts);
  CHECK(report.items.size() == 5);
  CHECK(report.all_passed());
  CHECK(report.to_text().find("PASS") != std::string::npos);

  opts.freeze_scales = true;
  const auto frozen = verify_suite(opts);
  CHECK_FALSE(frozen.all_passed());
  const auto it = std::find_if(frozen.items.begin(), frozen.items.end(), [](const VerifyItem& i) { return !i.passed; });
  REQUIRE(it != frozen.items.end());
  CHECK(it->id == "d");
}

TEST_CASE("command line contract") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("simulate --no-such-flag") != 0);
  CHECK(run_cli("simulate --alpha 1 --n 32 --methods NOPE --trials 1") != 0);
  const auto dir = std::filesystem::temp_directory_path() / "blockprior_harness_test";
  std::filesystem::create_directories(dir);
  const auto bad = dir / "bad.conf";
  std::ofstream(bad) << "trials = 3\nnot a key value line\n";
  CHECK(run_cli("simulate --config " + bad.string()) != 0);
  const auto unknown = dir / "unknown.conf";
  std::ofstream(unknown) << "colour = blue\n";
  CHECK(run_cli("simulate --config " + unknown.string()) != 0);

  const auto good = dir / "good.conf";
  std::ofstream(good) << "alphas = 1\nns = 32\nmethods = SIEVE_F\ntrials = 3\nseed = 5\n";
  const auto out1 = dir / "a.csv", out2 = dir / "b.csv";
  REQUIRE(run_cli("simulate --quiet --config " + good.string() + " --out " + out1.string()) == 0);
  REQUIRE(run_cli("simulate --quiet --config " + good.string() + " --seed 6 --out " + out2.string()) == 0);
  std::ifstream f1(out1), f2(out2);
  std::string first1, first2;
  std::getline(f1, first1);
  std::getline(f2, first2);
  CHECK(first1.find("seed=5 ") != std::string::npos);
  CHECK(first2.find("seed=6 ") != std::string::npos);
  ::setenv("BLOCKPRIOR_SEED", "9", 1);
  REQUIRE(run_cli("simulate --quiet --config " + good.string() + " --out " + out2.string()) == 0);
  ::unsetenv("BLOCKPRIOR_SEED");
  std::ifstream f3(out2);
  std::getline(f3, first2);
  CHECK(first2.find("seed=9 ") != std::string::npos);
  std::filesystem::remove_all(dir);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "blockprior/model.hpp"
#include "blockprior/random.hpp"
#include "blockprior/samplers.hpp"
#include "oracles.hpp"

using namespace blockprior;

TEST_CASE("first coefficient is plus or minus the amplitude") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = make_truth(SignalSpec::for_smoothness(1.0, seed), 10);
    CHECK(std::fabs(t.coeffs[0]) == 5.0);
  }
}

TEST_CASE("zero amplitude gives the zero sequence") {
  SignalSpec spec;
  spec.amplitude = 0.0;
  spec.beta = 2.3;
  const auto t = make_truth(spec, 64);
  CHECK(std::all_of(t.coeffs.begin(), t.coeffs.end(), [](double c) { return c == 0.0; }));
}

TEST_CASE("second coefficient against an independent power evaluation") {
  std::uint64_t seed = 0;
  TruthSequence t;
  do {
    t = make_truth(SignalSpec::for_smoothness(1.0, seed++), 2);
  } while (t.coeffs[1] < 0.0);
  const double ref = static_cast<double>(5.0L * std::exp(-1.6L * std::log(2.0L)));
  CHECK(t.coeffs[1] == doctest::Approx(ref).epsilon(1e-15));
}

TEST_CASE("coefficients follow amplitude * sign * j^-beta with nonincreasing magnitude") {
  const auto t = make_truth(SignalSpec::for_smoothness(0.5, 99), 1000);
  CHECK(t.spec.beta == doctest::Approx(1.1));
  int plus = 0;
  for (int j = 1; j <= 1000; ++j) {
    const double mag = std::fabs(t.coeffs[j - 1]);
    CHECK(mag == doctest::Approx(5.0 * std::pow(j, -1.1)).epsilon(1e-14));
    if (j > 1) CHECK(mag <= std::fabs(t.coeffs[j - 2]));
    plus += t.coeffs[j - 1] > 0;
  }
  CHECK(plus > 430);
  CHECK(plus < 570);
}

TEST_CASE("truth is a pure function and longer truncations extend shorter ones") {
  const auto spec = SignalSpec::for_smoothness(1.5, 31337);
  const auto a = make_truth(spec, 300), b = make_truth(spec, 300), c = make_truth(spec, 600);
  CHECK(a.coeffs == b.coeffs);
  CHECK(std::equal(a.coeffs.begin(), a.coeffs.end(), c.coeffs.begin()));
}

TEST_CASE("make_truth rejects invalid parameters") {
  SignalSpec spec;
  spec.beta = 0.5;
  CHECK_THROWS_AS(make_truth(spec, 10), std::invalid_argument);
  spec.beta = 1.6;
  CHECK_THROWS_AS(make_truth(spec, 0), std::invalid_argument);
  spec.amplitude = -1.0;
  CHECK_THROWS_AS(make_truth(spec, 10), std::invalid_argument);
}

TEST_CASE("pure noise at n = 1 has unit variance") {
  SignalSpec spec;
  spec.amplitude = 0.0;
  const auto t = make_truth(spec, 100000);
  const auto d = gen_data(t, 1, 4242);
  REQUIRE(d.size() == 100000);
  const double mean = std::accumulate(d.x.begin(), d.x.end(), 0.0) / d.x.size();
  double ss = 0;
  for (double x : d.x) ss += (x - mean) * (x - mean);
  CHECK(std::fabs(ss / (d.x.size() - 1) - 1.0) < 0.02);
}

TEST_CASE("large n recovers the truth") {
  const auto t = make_truth(SignalSpec::for_smoothness(1.0, 5), 50);
  const auto d = gen_data(t, 1 << 30, 1);
  for (std::size_t j = 0; j < t.size(); ++j) CHECK(std::fabs(d.x[j] - t.coeffs[j]) < 2e-4);
}

TEST_CASE("gen_data is deterministic and rejects n < 1") {
  const auto t = make_truth(SignalSpec::for_smoothness(1.0, 5), 256);
  const auto a = gen_data(t, 256, 17, 3), b = gen_data(t, 256, 17, 3), c = gen_data(t, 256, 17, 4);
  CHECK(a.x == b.x);
  CHECK(a.x != c.x);
  CHECK(a.truth == &t);
  CHECK_THROWS_AS(gen_data(t, 0, 1), std::invalid_argument);
}

TEST_CASE("expected squared noise norm is J / n") {
  const auto t = make_truth(SignalSpec::for_smoothness(1.0, 8), 256);
  double total = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const auto d = gen_data(t, 256, 1000, rep);
    total += l2_risk(d.x, t);
  }
  CHECK(std::fabs(total / 1000.0 - 1.0) < 0.05);
}

TEST_CASE("l2 risk basics") {
  const auto t = make_truth(SignalSpec::for_smoothness(1.0, 2), 32);
  CHECK(l2_risk(t.coeffs, t) == 0.0);

  TruthSequence single;
  single.coeffs = {5.0, 0.0, 0.0, 0.0};
  CHECK(l2_risk(std::vector<double>(4, 0.0), single) == 25.0);

  CHECK_THROWS_AS(l2_risk(std::vector<double>(31, 0.0), t), std::invalid_argument);
}

TEST_CASE("l2 risk against an extended-precision sum") {
  const auto t = make_truth(SignalSpec::for_smoothness(0.5, 3), 4096);
  RandomStream rng(10, 10);
  std::vector<double> est(t.size());
  for (auto& e : est) e = sample_std_normal(rng);
  std::vector<oracle::real> sq;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const oracle::real d = static_cast<oracle::real>(est[j]) - t.coeffs[j];
    sq.push_back(d * d);
  }
  const double ref = static_cast<double>(oracle::accurate_sum(sq));
  CHECK(std::fabs(l2_risk(est, t) - ref) <= 1e-12 * ref);
}

TEST_CASE("l2 risk is invariant under a shared permutation") {
  const auto t = make_truth(SignalSpec::for_smoothness(1.0, 4), 200);
  RandomStream rng(3, 3);
  std::vector<double> est(200);
  for (auto& e : est) e = sample_std_normal(rng);
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  TruthSequence tp = t;
  std::vector<double> ep(200);
  for (std::size_t i = 0; i < 200; ++i) {
    tp.coeffs[i] = t.coeffs[perm[i]];
    ep[i] = est[perm[i]];
  }
  CHECK(l2_risk(ep, tp) == doctest::Approx(l2_risk(est, t)).epsilon(1e-14));
}

TEST_CASE("Sobolev norm degenerate cases") {
  SignalSpec zero;
  zero.amplitude = 0.0;
  CHECK(sobolev_norm_sq(make_truth(zero, 100), 1.0) == 0.0);
  const auto t = make_truth(SignalSpec::for_smoothness(1.0, 6), 500);
  CHECK(sobolev_norm_sq(t, 0.0) == doctest::Approx(l2_risk(std::vector<double>(500, 0.0), t)).epsilon(1e-13));
}

TEST_CASE("Sobolev partial sums converge with an integral tail bound") {
  // Terms are 25 j^-1.2 at alpha = 1, so the tail past J is below
  // 25 J^-0.2 / 0.2 + 25 J^-1.2 and per-term increments fall under 1e-6
  // once j exceeds (2.5e7)^(1/1.2).
  const auto t = make_truth(SignalSpec::for_smoothness(1.0, 6), 2000000);
  const double s = sobolev_norm_sq(t, 1.0);
  std::vector<oracle::real> terms;
  for (int j = 1; j <= 2000000; ++j) terms.push_back(25.0L * std::pow(static_cast<oracle::real>(j), -1.2L));
  CHECK(s == doctest::Approx(static_cast<double>(oracle::accurate_sum(terms))).epsilon(1e-10));
  const double j_small = std::pow(2.5e7, 1.0 / 1.2);
  CHECK(25.0 * std::pow(std::ceil(j_small), -1.2) < 1e-6);
  TruthSequence head = t;
  head.coeffs.resize(1000000);
  const double tail = s - sobolev_norm_sq(head, 1.0);
  CHECK(tail > 0.0);
  CHECK(tail <= 25.0 * std::pow(1e6, -0.2) / 0.2);
}

TEST_CASE("tail energy against direct summation") {
  const auto spec = SignalSpec::for_smoothness(1.0, 0);
  std::vector<oracle::real> terms;
  for (long j = 257; j <= 20000000; ++j) terms.push_back(25.0L * std::pow(static_cast<oracle::real>(j), -3.2L));
  const oracle::real head = oracle::accurate_sum(terms);
  const oracle::real rest = 25.0L * std::pow(2e7L, -2.2L) / 2.2L;
  CHECK(tail_energy(spec, 256) == doctest::Approx(static_cast<double>(head + rest)).epsilon(1e-9));
}

TEST_CASE("minimax rate") {
  CHECK(minimax_rate(1.0, 27) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(minimax_rate(0.5, 256) == doctest::Approx(std::pow(256.0, -0.25)).epsilon(1e-14));
}

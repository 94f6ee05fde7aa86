#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blockprior/random.hpp"

namespace blockprior {

enum class MixingFamily { piecewise_linear, two_level };

std::string to_string(MixingFamily f);
MixingFamily parse_mixing_family(const std::string& s);

/// Mixing density g_k of the block scale A_k, supported on (0, e^-k].
///
/// piecewise_linear: linear from T_k at 0 down to e^(-e^k) at the knot
///   e^(-k^2), then flat at e^(-e^k) up to e^-k, with
///   T_k = 2 e^(k^2) - 2 e^(-e^k + k^2 - k) + e^(-e^k).
/// two_level: T_1k on (0, e^(-k^2)] plus T_2k on (0, e^-k], with
///   T_1k = e^(k^2) - e^(-e^k - k + k^2) and T_2k = e^(-e^k).
///
/// The constants overflow a double near k = 27, so everything is held and
/// combined as logarithms; the knot e^(-k^2) itself underflows for k >= 28,
/// which is why the log_* entry points take log t.
class MixingDensity {
 public:
  MixingDensity(MixingFamily family, int k);

  MixingFamily family() const { return family_; }
  int k() const { return k_; }

  double log_knot() const { return log_knot_; }  // -k^2
  double log_upper() const { return log_upper_; }  // -k
  double knot() const;
  double upper() const;

  /// Two-level constants (log T_1k, log T_2k); piecewise-linear (log T_k,
  /// log e^(-e^k)).
  double log_t1() const { return log_a_; }
  double log_t2() const { return log_b_; }

  double density(double t) const;
  double log_density(double log_t) const;
  double cdf(double t) const;
  /// Inverse CDF, u in [0, 1]; u = 1 maps to e^-k.
  double quantile(double u) const;
  double sample(RandomStream& rng) const;

  double mean() const;
  double log_mean() const;
  /// log ∫_{e^(-k^2)}^∞ g_k(t) dt; -inf when the flat piece is empty.
  double log_outer_mass() const;

 private:
  MixingFamily family_;
  int k_;
  double log_knot_;
  double log_upper_;
  double log_a_;
  double log_b_;
  double log_inner_level_;  // two-level density on (0, knot]
};

/// Constants c_1, c_2, c_3 of the three mixing-density conditions.
struct ConditionConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
};

/// Any density on (0, ∞) described through the three quantities the
/// conditions need; lets callers check corrupted or alternative densities.
struct DensityModel {
  std::function<double(double log_t)> log_density;
  std::function<double()> log_mean;
  std::function<double(double log_t)> log_mass_above;
};

DensityModel density_model(const MixingDensity& md);

/// Per-k outcome. Margins are log-scale slack: value to threshold distance,
/// nonnegative when the condition holds.
struct ConditionCheck {
  int k = 0;
  bool lower_bound_ok = false;  // g_k(t) >= exp(-c1 e^k) on [e^(-k^2), e^-k]
  bool mean_ok = false;         // ∫ t g_k(t) dt <= 4 exp(-c2 k^2)
  bool tail_ok = false;         // ∫_{e^(-k^2)}^∞ g_k <= exp(-c3 e^k)
  double lower_bound_margin = 0.0;
  double mean_margin = 0.0;
  double tail_margin = 0.0;

  bool all_ok() const { return lower_bound_ok && mean_ok && tail_ok; }
};

struct ConditionReport {
  MixingFamily family = MixingFamily::two_level;
  std::vector<ConditionCheck> checks;
  bool all_ok() const;
};

/// Checks the conditions for a single k. The lower bound is tested on 1024
/// log-spaced interior points plus both endpoints.
ConditionCheck check_conditions(int k, const DensityModel& model, ConditionConstants c = {});

ConditionReport verify_conditions(MixingFamily family, int k_first, int k_last, ConditionConstants c = {});

}  // namespace blockprior

#include "blockprior/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "blockprior/special.hpp"

namespace blockprior {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::string to_string(MixingFamily f) {
  return f == MixingFamily::two_level ? "two_level" : "piecewise_linear";
}

MixingFamily parse_mixing_family(const std::string& s) {
  if (s == "two_level") return MixingFamily::two_level;
  if (s == "piecewise_linear") return MixingFamily::piecewise_linear;
  throw std::invalid_argument("unknown mixing family '" + s + "'");
}

MixingDensity::MixingDensity(MixingFamily family, int k) : family_(family), k_(k) {
  if (k < 0) throw std::invalid_argument("MixingDensity: block index must be >= 0");
  const double kd = static_cast<double>(k);
  const double ek = std::exp(kd);
  log_knot_ = -kd * kd;
  log_upper_ = -kd;
  // log(1 - e^(-(e^k + k)))
  const double shrink = std::log1p(-std::exp(-(ek + kd)));
  if (family == MixingFamily::two_level) {
    log_a_ = kd * kd + shrink;
    log_b_ = -ek;
    log_inner_level_ = log_add_exp(log_a_, log_b_);
  } else {
    log_a_ = log_add_exp(kd * kd + std::numbers::ln2 + shrink, -ek);
    log_b_ = -ek;
    log_inner_level_ = log_a_;
  }
}

double MixingDensity::knot() const { return std::exp(log_knot_); }
double MixingDensity::upper() const { return std::exp(log_upper_); }

double MixingDensity::log_density(double log_t) const {
  if (log_t > log_upper_) return kNegInf;
  if (log_t > log_knot_) return log_b_;
  if (family_ == MixingFamily::two_level) return log_inner_level_;
  // T (1 - s) + E s with s = t / knot in (0, 1].
  const double s = std::exp(log_t - log_knot_);
  return log_add_exp(log_a_ + std::log1p(-std::min(s, 1.0)), log_b_ + std::log(s));
}

double MixingDensity::density(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("MixingDensity::density: t must be > 0");
  return std::exp(log_density(std::log(t)));
}

double MixingDensity::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  const double lt = std::log(t);
  if (lt >= log_upper_) return 1.0;
  if (lt > log_knot_) return 1.0 - std::exp(log_b_ + log_diff_exp(log_upper_, lt));
  if (family_ == MixingFamily::two_level) return std::exp(log_inner_level_ + lt);
  const double s = std::exp(lt - log_knot_);
  const double t_scaled = std::exp(log_a_ + log_knot_);
  const double e_scaled = std::exp(log_b_ + log_knot_);
  return t_scaled * (s - 0.5 * s * s) + 0.5 * e_scaled * s * s;
}

double MixingDensity::quantile(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return upper();
  const double one_minus_u = 1.0 - u;
  const double log_outer = log_outer_mass();
  if (std::log(one_minus_u) < log_outer) {
    const double t = upper() - std::exp(std::log(one_minus_u) - log_b_);
    return std::max(t, knot());
  }
  double log_t;
  if (family_ == MixingFamily::two_level) {
    log_t = std::log(u) - log_inner_level_;
  } else {
    // Solve T~ s - (T~ - E~) s^2 / 2 = u for s in (0, 1].
    const double t_scaled = std::exp(log_a_ + log_knot_);
    const double e_scaled = std::exp(log_b_ + log_knot_);
    const double disc = std::max(0.0, t_scaled * t_scaled - 2.0 * (t_scaled - e_scaled) * u);
    const double s = 2.0 * u / (t_scaled + std::sqrt(disc));
    log_t = std::log(s) + log_knot_;
  }
  return std::exp(std::min(log_t, log_knot_));
}

double MixingDensity::sample(RandomStream& rng) const { return quantile(rng.uniform_open()); }

double MixingDensity::log_mean() const {
  if (family_ == MixingFamily::two_level) {
    return log_add_exp(log_a_ + 2.0 * log_knot_, log_b_ + 2.0 * log_upper_) - std::numbers::ln2;
  }
  const double inner =
      2.0 * log_knot_ + log_add_exp(log_a_ - std::log(6.0), log_b_ - std::log(3.0));
  const double outer = log_upper_ == log_knot_
                           ? kNegInf
                           : log_b_ + log_diff_exp(2.0 * log_upper_, 2.0 * log_knot_) - std::numbers::ln2;
  return log_add_exp(inner, outer);
}

double MixingDensity::mean() const { return std::exp(log_mean()); }

double MixingDensity::log_outer_mass() const {
  if (log_upper_ == log_knot_) return kNegInf;
  return log_b_ + log_diff_exp(log_upper_, log_knot_);
}

DensityModel density_model(const MixingDensity& md) {
  DensityModel m;
  m.log_density = [md](double lt) { return md.log_density(lt); };
  m.log_mean = [md] { return md.log_mean(); };
  m.log_mass_above = [md](double lt) {
    if (lt >= md.log_upper()) return kNegInf;
    if (lt >= md.log_knot()) {
      return lt == md.log_upper() ? kNegInf : md.log_t2() + log_diff_exp(md.log_upper(), lt);
    }
    return std::log1p(-md.cdf(std::exp(lt)));
  };
  return m;
}

ConditionCheck check_conditions(int k, const DensityModel& model, ConditionConstants c) {
  const double kd = static_cast<double>(k);
  const double ek = std::exp(kd);
  ConditionCheck out;
  out.k = k;

  const double lo = -kd * kd;
  const double hi = -kd;
  constexpr int kInterior = 1024;
  double min_log_g = std::min(model.log_density(lo), model.log_density(hi));
  if (hi > lo) {
    for (int i = 1; i <= kInterior; ++i) {
      const double lt = lo + (hi - lo) * i / (kInterior + 1.0);
      min_log_g = std::min(min_log_g, model.log_density(lt));
    }
  }
  out.lower_bound_margin = min_log_g - (-c.c1 * ek);
  out.mean_margin = (std::log(4.0) - c.c2 * kd * kd) - model.log_mean();
  const double log_tail = model.log_mass_above(lo);
  out.tail_margin = log_tail == kNegInf ? std::numeric_limits<double>::infinity() : -c.c3 * ek - log_tail;

  out.lower_bound_ok = out.lower_bound_margin >= 0.0;
  out.mean_ok = out.mean_margin >= 0.0;
  out.tail_ok = out.tail_margin >= 0.0;
  return out;
}

ConditionReport verify_conditions(MixingFamily family, int k_first, int k_last, ConditionConstants c) {
  if (k_last < k_first) throw std::invalid_argument("verify_conditions: empty k range");
  ConditionReport report;
  report.family = family;
  for (int k = k_first; k <= k_last; ++k) {
    report.checks.push_back(check_conditions(k, density_model(MixingDensity(family, k)), c));
  }
  return report;
}

bool ConditionReport::all_ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.all_ok(); });
}

}  // namespace blockprior

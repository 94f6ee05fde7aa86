#pragma once

#include <map>
#include <optional>
#include <string>

#include "blockprior/experiment.hpp"

namespace blockprior {

/// Flat `key = value` text. '#' starts a comment; blank lines are ignored;
/// a repeated key keeps the last value. Throws std::invalid_argument with
/// the line number on malformed lines.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

/// Keys: alphas, ns, methods, trials, seed, estimator, sweeps, burn_in,
/// rgpg_sweeps, rgpg_burn_in, constraint_b, amplitude, threads, timing,
/// adaptive_stop, stop_min_trials, stop_max_trials, stop_batch, stop_rel_se.
/// Unknown keys and malformed values throw std::invalid_argument.
void apply_config(const std::map<std::string, std::string>& kv, ExperimentSpec& spec);

/// Parses BLOCKPRIOR_SEED when set.
std::optional<std::uint64_t> seed_from_env();

std::vector<double> parse_double_list(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);

}  // namespace blockprior

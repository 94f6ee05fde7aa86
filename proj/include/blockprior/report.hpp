#pragma once

#include <string>

#include "blockprior/experiment.hpp"

namespace blockprior {

/// CSV with '#' comment lines first (version, seed, config hash, failed
/// cells, truncation tails), then the header
/// `method,alpha,n,median,mad,trials,seconds,seed` and one row per cell.
std::string emit_csv(const RiskTable& table);

/// One table per n in the two-column simulation-table layout:
/// alpha, then two method columns each showing "median (mad)".
std::string emit_markdown(const RiskTable& table);

/// Reads emit_csv output back; comment lines restore seed, hash, version
/// and failure messages. Throws std::invalid_argument on malformed input.
RiskTable parse_csv(const std::string& text);

}  // namespace blockprior

#pragma once

#include <string>

namespace blockprior {

/// Shortest decimal text that reads back to the same double; '.' decimal
/// separator regardless of locale. Non-finite values print as nan/inf/-inf.
std::string format_double(double x);

/// Inverse of format_double; throws std::invalid_argument on malformed text.
double parse_double(const std::string& s);

}  // namespace blockprior

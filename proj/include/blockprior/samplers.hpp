#pragma once

#include "blockprior/random.hpp"

namespace blockprior {

/// Standard normal draw, Marsaglia polar method.
double sample_std_normal(RandomStream& rng);

/// Gamma(shape, 1) draw, Marsaglia-Tsang squeeze; shapes below 1 use
/// G(shape + 1) * U^(1/shape).
double sample_gamma(double shape, RandomStream& rng);

/// Standard normal conditioned on z > lower.
///
/// Plain rejection when lower < 0.5, otherwise Robert's translated
/// exponential proposal with the optimal rate.
double sample_std_normal_above(double lower, RandomStream& rng);

}  // namespace blockprior

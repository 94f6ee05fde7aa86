#pragma once

#include <functional>
#include <vector>

namespace blockprior {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over [lo, hi].
///
/// Splits the worst interval until the summed error estimate drops below
/// max(abs_tol, rel_tol * |value|) or max_intervals is reached.
QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           double abs_tol = 1e-13, double rel_tol = 1e-12, int max_intervals = 4000);

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(int m);

}  // namespace blockprior

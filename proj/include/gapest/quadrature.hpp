#pragma once

#include <functional>

namespace gapest::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over the finite
/// interval [a, b].
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-9);

}  // namespace gapest::quad

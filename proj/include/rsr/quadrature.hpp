#pragma once

#include "rsr/types.hpp"

#include <functional>
#include <queue>
#include <vector>

namespace rsr {

struct QuadratureResult {
  Vector value;
  double error = 0.0;
  long evaluations = 0;
};

// Adaptive Gauss-Kronrod 15(7) on a finite interval for vector-valued
// integrands; segments are bisected worst-error-first until the summed error
// estimate meets max(abs_tol, rel_tol * |value|) in the max norm.
QuadratureResult adaptive_gauss_kronrod(const std::function<Vector(double)>& f, double a,
                                        double b, double rel_tol = 1e-10,
                                        double abs_tol = 0.0, int max_segments = 2000);

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, double abs_tol = 0.0, int max_segments = 2000);

}  // namespace rsr

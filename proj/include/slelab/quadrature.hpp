#pragma once

#include <functional>

namespace slelab {

/// Adaptive Gauss-Kronrod (G7/K15) integration with bisection until the
/// local error estimate meets abs_tol + rel_tol * |whole|.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double abs_tol = 1e-12, double rel_tol = 1e-10, int max_depth = 48);

/**
 * The absorption-splitting function for conditioning experiments: h(z) with
 * h'(z) proportional to (z(1-z))^{-4/kappa}, h(0) = 1, h(1) = 0. Endpoint
 * singularities are lifted with the substitution u = sin^2(theta); target
 * relative accuracy 1e-8.
 */
double h_function(double z, double kappa);

/// Normalization integral of h': int_0^1 (u(1-u))^{-4/kappa} du.
double h_normalization(double kappa);

}  // namespace slelab

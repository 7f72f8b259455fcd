#pragma once

#include <functional>
#include <vector>

namespace emv {

using UnitIntegrand = std::function<double(double)>;

/// Composite Gauss-Legendre rule on [a, b]. `nodes` is rounded up to a
/// multiple of the 32-point panel size.
double gauss_legendre(const UnitIntegrand& f, double a, double b, int nodes = 256);

/// Double-exponential (tanh-sinh) rule on the open interval (a, b). Never
/// evaluates the endpoints, so integrable endpoint singularities are fine.
/// Throws std::domain_error if the result is not finite.
double tanh_sinh(const UnitIntegrand& f, double a = 0.0, double b = 1.0,
                 double tolerance = 1e-13);

/// Integral over (0,1) as a sum of tanh-sinh panels split at `breakpoints`
/// (kinks or jumps of f). Throws std::domain_error when a panel's error
/// estimate exceeds `max_relative_error` times max(1, its L1 norm), which is
/// how divergent integrals show up.
double integrate_unit(const UnitIntegrand& f, const std::vector<double>& breakpoints = {},
                      double tolerance = 1e-13, double max_relative_error = 1e-7);

}  // namespace emv

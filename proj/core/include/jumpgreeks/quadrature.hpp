#pragma once

#include <functional>
#include <span>

namespace jumpgreeks {

/// Quadrature node together with its exact offsets from the interval ends.
/// Near an endpoint y itself cannot resolve distances below one ulp, which
/// matters for integrands with power singularities there.
struct LocalPoint {
    double y = 0.0;
    double from_lower = 0.0; ///< y - lower, infinite when lower = -inf
    double to_upper = 0.0;   ///< upper - y, infinite when upper = +inf
};

/// Integral of f over (lower, upper); either bound may be infinite.
/// Double-exponential rules are used on every kind of interval so that
/// integrable endpoint singularities (y^{-3/4}, ...) are handled.
/// Non-finite integrand values are treated as zero; a non-finite result
/// throws NumericError.
double integrate_local(const std::function<double(const LocalPoint&)>& f, double lower,
                       double upper, double tolerance = 1e-13);

double integrate(const std::function<double(double)>& f, double lower, double upper,
                 double tolerance = 1e-13);

/// Sum of integrals over consecutive pieces (b[0], b[1]), (b[1], b[2]), ...
double integrate_pieces(const std::function<double(double)>& f,
                        std::span<const double> breakpoints, double tolerance = 1e-13);

} // namespace jumpgreeks

#include "jumpgreeks/quadrature.hpp"

#include "jumpgreeks/errors.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace jumpgreeks {

namespace {

using boost::math::quadrature::exp_sinh;
using boost::math::quadrature::sinh_sinh;
using boost::math::quadrature::tanh_sinh;

constexpr double inf = std::numeric_limits<double>::infinity();

double guarded(const std::function<double(const LocalPoint&)>& f, const LocalPoint& p)
{
    const double v = f(p);
    return std::isfinite(v) ? v : 0.0;
}

} // namespace

double integrate_local(const std::function<double(const LocalPoint&)>& f, double lower,
                       double upper, double tolerance)
{
    if (!(lower < upper)) {
        if (lower == upper) {
            return 0.0;
        }
        throw ParameterError("integrate: lower bound exceeds upper bound");
    }
    double result = 0.0;
    double error = 0.0;
    const bool lower_inf = std::isinf(lower);
    const bool upper_inf = std::isinf(upper);
    try {
        if (lower_inf && upper_inf) {
            thread_local sinh_sinh<double> rule;
            result = rule.integrate(
                [&](double y) { return guarded(f, {y, inf, inf}); }, tolerance, &error);
        } else if (upper_inf) {
            thread_local exp_sinh<double> rule;
            result = rule.integrate(
                [&](double t) { return guarded(f, {lower + t, t, inf}); }, 0.0, inf, tolerance,
                &error);
        } else if (lower_inf) {
            thread_local exp_sinh<double> rule;
            result = rule.integrate(
                [&](double t) { return guarded(f, {upper - t, inf, t}); }, 0.0, inf, tolerance,
                &error);
        } else {
            thread_local tanh_sinh<double> rule;
            const double width = upper - lower;
            // xc = lower - y near the left end, upper - y near the right end.
            result = rule.integrate(
                [&](double y, double xc) {
                    LocalPoint p{y, 0.0, 0.0};
                    if (xc < 0.0) {
                        p.from_lower = -xc;
                        p.to_upper = width + xc;
                    } else {
                        p.to_upper = xc;
                        p.from_lower = width - xc;
                    }
                    return guarded(f, p);
                },
                lower, upper, tolerance, &error);
        }
    } catch (const std::exception& e) {
        throw NumericError(std::string("quadrature failed: ") + e.what());
    }
    if (!std::isfinite(result)) {
        throw NumericError("quadrature produced a non-finite value");
    }
    return result;
}

double integrate(const std::function<double(double)>& f, double lower, double upper,
                 double tolerance)
{
    return integrate_local([&f](const LocalPoint& p) { return f(p.y); }, lower, upper, tolerance);
}

double integrate_pieces(const std::function<double(double)>& f,
                        std::span<const double> breakpoints, double tolerance)
{
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        total += integrate(f, breakpoints[i], breakpoints[i + 1], tolerance);
    }
    return total;
}

} // namespace jumpgreeks

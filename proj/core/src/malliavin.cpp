#include "jumpgreeks/malliavin.hpp"

#include "jumpgreeks/errors.hpp"
#include "jumpgreeks/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace jumpgreeks {

FunctionalBundle FunctionalBundle::constant(double value, std::size_t n)
{
    const auto m = static_cast<Eigen::Index>(n);
    return {value, Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(m, m)};
}

NoiseSystem::NoiseSystem(std::vector<NoiseSpec> specs, std::vector<WeightScheme> weights,
                         std::vector<double> values)
    : specs_(std::move(specs)), weights_(std::move(weights)), values_(std::move(values))
{
    const std::size_t n = specs_.size();
    if (weights_.size() != n || values_.size() != n) {
        throw ParameterError("NoiseSystem: specs, weights and values must have equal length");
    }
    pi_.resize(n);
    log_slope_.resize(n);
    ends_.resize(n);
    lower_link_.assign(n, std::nullopt);
    upper_link_.assign(n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
        specs_[i].locate(values_[i]);
        pi_[i] = weights_[i].eval(specs_[i], values_[i]);
        log_slope_[i] = specs_[i].log_density_slope(values_[i]);
        ends_[i] = weights_[i].endpoint_slopes(specs_[i], values_[i]);
    }
}

NoiseSystem NoiseSystem::jump_times(std::span<const double> times, double horizon, double alpha)
{
    const std::size_t n = times.size();
    std::vector<NoiseSpec> specs;
    specs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double prev = i == 0 ? 0.0 : times[i - 1];
        const double next = i + 1 == n ? horizon : times[i + 1];
        specs.push_back(NoiseSpec::jump_time(prev, next));
    }
    NoiseSystem sys(std::move(specs), std::vector<WeightScheme>(n, WeightScheme::singular(alpha)),
                    std::vector<double>(times.begin(), times.end()));
    for (std::size_t i = 0; i < n; ++i) {
        sys.link(i, i == 0 ? std::nullopt : std::optional<std::size_t>(i - 1),
                 i + 1 == n ? std::nullopt : std::optional<std::size_t>(i + 1));
    }
    return sys;
}

void NoiseSystem::link(std::size_t i, std::optional<std::size_t> lower, std::optional<std::size_t> upper)
{
    const std::size_t n = size();
    if (i >= n || (lower && *lower >= n) || (upper && *upper >= n) || lower == i || upper == i) {
        throw ParameterError("NoiseSystem::link: index out of range");
    }
    if (lower && values_[*lower] != specs_[i].lower()) {
        throw ParameterError("NoiseSystem::link: lower end does not match the linked noise");
    }
    if (upper && values_[*upper] != specs_[i].upper()) {
        throw ParameterError("NoiseSystem::link: upper end does not match the linked noise");
    }
    lower_link_[i] = lower;
    upper_link_[i] = upper;
}

void NoiseSystem::append(const NoiseSystem& other)
{
    const std::size_t offset = size();
    const auto shift = [offset](std::optional<std::size_t> k) {
        return k ? std::optional<std::size_t>(*k + offset) : std::nullopt;
    };
    specs_.insert(specs_.end(), other.specs_.begin(), other.specs_.end());
    weights_.insert(weights_.end(), other.weights_.begin(), other.weights_.end());
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
    pi_.insert(pi_.end(), other.pi_.begin(), other.pi_.end());
    log_slope_.insert(log_slope_.end(), other.log_slope_.begin(), other.log_slope_.end());
    ends_.insert(ends_.end(), other.ends_.begin(), other.ends_.end());
    for (std::size_t k = 0; k < other.size(); ++k) {
        lower_link_.push_back(shift(other.lower_link_[k]));
        upper_link_.push_back(shift(other.upper_link_[k]));
    }
}

double NoiseSystem::weight_partial(std::size_t i, std::size_t j) const
{
    if (i == j) {
        return pi_.at(i).slope;
    }
    if (lower_link_.at(i) == j) {
        return ends_[i].lower;
    }
    if (upper_link_.at(i) == j) {
        return ends_[i].upper;
    }
    return 0.0;
}

namespace {

void require_size(Eigen::Index got, const NoiseSystem& sys, const char* what)
{
    if (static_cast<std::size_t>(got) != sys.size()) {
        throw ParameterError(std::string(what) + ": length does not match the noise system");
    }
}

} // namespace

double inner_product_pi(const Eigen::VectorXd& u, const Eigen::VectorXd& w, const NoiseSystem& sys)
{
    require_size(u.size(), sys, "inner_product_pi");
    require_size(w.size(), sys, "inner_product_pi");
    double s = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        s += sys.weight(i).value * u(k) * w(k);
    }
    return s;
}

double skorohod(const ProcessBundle& u, const NoiseSystem& sys)
{
    require_size(u.values.size(), sys, "skorohod");
    require_size(u.diagonal_partials.size(), sys, "skorohod");
    double s = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const WeightValue pi = sys.weight(i);
        s += pi.slope * u.values(k) + pi.value * u.diagonal_partials(k)
             + pi.value * u.values(k) * sys.log_density_slope(i);
    }
    return -s;
}

double ou_operator(const FunctionalBundle& f, const NoiseSystem& sys)
{
    require_size(f.gradient.size(), sys, "ou_operator");
    require_size(f.hessian.rows(), sys, "ou_operator");
    ProcessBundle d{f.gradient, f.hessian.diagonal()};
    return skorohod(d, sys);
}

Covariance covariance(const FunctionalBundle& f, const NoiseSystem& sys)
{
    const double sigma = inner_product_pi(f.gradient, f.gradient, sys);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DegeneracyError("covariance of the functional vanishes");
    }
    return {sigma, 1.0 / sigma};
}

Eigen::VectorXd covariance_gradient(const FunctionalBundle& f, const NoiseSystem& sys)
{
    require_size(f.gradient.size(), sys, "covariance_gradient");
    require_size(f.hessian.rows(), sys, "covariance_gradient");
    const std::size_t n = sys.size();
    Eigen::VectorXd weighted(f.gradient.size());
    for (std::size_t i = 0; i < n; ++i) {
        weighted(static_cast<Eigen::Index>(i)) = sys.weight(i).value * f.gradient(static_cast<Eigen::Index>(i));
    }
    Eigen::VectorXd out = 2.0 * (f.hessian * weighted);
    for (std::size_t i = 0; i < n; ++i) {
        const double g2 = f.gradient(static_cast<Eigen::Index>(i)) * f.gradient(static_cast<Eigen::Index>(i));
        out(static_cast<Eigen::Index>(i)) += sys.weight_partial(i, i) * g2;
        // Linked endpoints: pi_i also moves with its neighbours.
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                const double w = sys.weight_partial(i, j);
                if (w != 0.0) {
                    out(static_cast<Eigen::Index>(j)) += w * g2;
                }
            }
        }
    }
    return out;
}

double ibp_weight(const FunctionalBundle& f, const FunctionalBundle& g, const Eigen::VectorXd& dsigma,
                  const NoiseSystem& sys)
{
    require_size(g.gradient.size(), sys, "ibp_weight");
    require_size(dsigma.size(), sys, "ibp_weight");
    const Covariance c = covariance(f, sys);
    const double lf = ou_operator(f, sys);
    return g.value * c.gamma * lf - c.gamma * inner_product_pi(g.gradient, f.gradient, sys)
           + g.value * c.gamma * c.gamma * inner_product_pi(dsigma, f.gradient, sys);
}

double ibp_weight(const FunctionalBundle& f, const FunctionalBundle& g, const NoiseSystem& sys)
{
    return ibp_weight(f, g, covariance_gradient(f, sys), sys);
}

namespace {

double aitken(double s0, double s1, double s2)
{
    const double denom = (s2 - s1) - (s1 - s0);
    if (denom == 0.0 || !std::isfinite(denom)) {
        return s2;
    }
    return s2 - (s2 - s1) * (s2 - s1) / denom;
}

// One-sided limit of h at a finite end of the piece (lower, upper).
double end_limit(const std::function<double(double, double)>& h, double lower, double upper, bool at_lower)
{
    const double width = upper - lower;
    double d = std::isfinite(width) ? 0.25 * width : 0.25 * std::max(1.0, std::abs(at_lower ? lower : upper));
    constexpr int steps = 36;
    std::vector<double> seq;
    seq.reserve(steps);
    for (int m = 0; m < steps; ++m, d *= 0.5) {
        seq.push_back(h(at_lower ? lower + d : upper - d, d));
    }
    const double a1 = aitken(seq[steps - 4], seq[steps - 3], seq[steps - 2]);
    const double a2 = aitken(seq[steps - 3], seq[steps - 2], seq[steps - 1]);
    const double last_step = seq[steps - 1] - seq[steps - 2];
    const double prev_step = seq[steps - 2] - seq[steps - 3];
    const double scale = std::max(1.0, std::abs(a2));
    if (!std::isfinite(a2) || (std::abs(last_step) > 1e-12 * scale && std::abs(last_step) >= std::abs(prev_step))
        || std::abs(a2 - a1) > 1e-6 * scale) {
        throw LimitError("border_term: one-sided limit does not exist");
    }
    return a2;
}

// Limit of h at an infinite end, approached along doubling radii.
double tail_limit(const std::function<double(double)>& h, double start, double direction)
{
    double r = std::max(1.0, std::abs(start));
    double value = h(direction * r);
    for (int m = 0; m < 1100 && value != 0.0; ++m) {
        r *= 2.0;
        if (!std::isfinite(r)) {
            break;
        }
        value = h(direction * r);
    }
    if (!std::isfinite(value) || std::abs(value) > 1e-12) {
        throw LimitError("border_term: no decay at an infinite end of the support");
    }
    return value;
}

} // namespace

double border_term(const std::function<double(double)>& f, const NoiseSpec& spec, const WeightScheme& scheme)
{
    const std::vector<double> b = spec.breakpoints();
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        const double lo = b[k];
        const double hi = b[k + 1];
        const bool lo_finite = std::isfinite(lo);
        const bool hi_finite = std::isfinite(hi);
        const auto h_near = [&](bool at_lower) {
            return [&, at_lower](double y, double d) {
                const double from_lower = at_lower ? d : y - lo;
                const double to_upper = at_lower ? hi - y : d;
                const WeightValue w = scheme.eval_on_piece(lo, hi, y, from_lower, to_upper);
                return f(y) * w.value * spec.density(y);
            };
        };
        const auto h_far = [&](double y) {
            const WeightValue w = scheme.eval_on_piece(lo, hi, y, y - lo, hi - y);
            return f(y) * w.value * spec.density(y);
        };
        const double upper_limit = hi_finite ? end_limit(h_near(false), lo, hi, false)
                                             : tail_limit(h_far, lo_finite ? lo : 0.0, 1.0);
        const double lower_limit = lo_finite ? end_limit(h_near(true), lo, hi, true)
                                             : tail_limit(h_far, hi_finite ? hi : 0.0, -1.0);
        total += upper_limit - lower_limit;
    }
    return total;
}

DualityReport duality_check(const ScalarFunction& f, const ScalarFunction& u, const NoiseSpec& spec,
                            const WeightScheme& scheme, double tolerance)
{
    if (!f.value || !f.derivative || !u.value || !u.derivative) {
        throw ParameterError("duality_check: functions and derivatives are required");
    }
    const std::vector<double> b = spec.breakpoints();
    DualityReport r;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        const double lo = b[k];
        const double hi = b[k + 1];
        // Nodes within an ulp of an end round onto the breakpoint, where the
        // density is not defined; the weight still sees the exact offsets.
        const double first = std::nextafter(lo, hi);
        const double last = std::nextafter(hi, lo);
        r.lhs += integrate_local(
            [&](const LocalPoint& p) {
                const double y = std::clamp(p.y, first, last);
                const WeightValue w = scheme.eval_on_piece(lo, hi, y, p.from_lower, p.to_upper);
                return w.value * f.derivative(y) * u.value(y) * spec.density(y);
            },
            lo, hi, tolerance);
        r.skorohod_term += integrate_local(
            [&](const LocalPoint& p) {
                const double y = std::clamp(p.y, first, last);
                const WeightValue w = scheme.eval_on_piece(lo, hi, y, p.from_lower, p.to_upper);
                const double uy = u.value(y);
                const double delta =
                    -(w.slope * uy + w.value * u.derivative(y) + w.value * uy * spec.log_density_slope(y));
                return f.value(y) * delta * spec.density(y);
            },
            lo, hi, tolerance);
    }
    r.border = border_term([&](double y) { return f.value(y) * u.value(y); }, spec, scheme);
    r.residual = std::abs(r.lhs - r.skorohod_term - r.border);
    return r;
}

ClosabilityPoint closability_demo(std::size_t n)
{
    if (n == 0) {
        throw ParameterError("closability_demo: n must be at least 1");
    }
    const double nn = static_cast<double>(n);
    const double cut = 1.0 / nn;
    ClosabilityPoint p;
    p.inner_product = integrate([&](double y) { return -nn * (1.0 - y); }, 0.0, cut);
    p.second_moment = integrate(
        [&](double y) {
            const double v = 1.0 - nn * y;
            return v * v;
        },
        0.0, cut);
    return p;
}

} // namespace jumpgreeks

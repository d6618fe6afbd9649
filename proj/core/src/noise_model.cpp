#include "jumpgreeks/noise_model.hpp"

#include "jumpgreeks/errors.hpp"
#include "jumpgreeks/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace jumpgreeks {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double kMinSeparation = 1e-12;

} // namespace

// ---------------------------------------------------------------------------
// JumpPath

JumpPath::JumpPath(double horizon, std::vector<double> times, std::vector<double> amplitudes)
    : horizon_(horizon), times_(std::move(times)), amplitudes_(std::move(amplitudes))
{
    if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) {
        throw ParameterError("JumpPath: horizon must be finite and nonnegative");
    }
    if (times_.size() != amplitudes_.size()) {
        throw ParameterError("JumpPath: one amplitude per jump time required");
    }
    double previous = 0.0;
    for (const double t : times_) {
        if (!(t > previous)) {
            throw ParameterError("JumpPath: jump times must be strictly increasing in (0, T]");
        }
        previous = t;
    }
    if (!times_.empty() && !(times_.back() < horizon_)) {
        throw ParameterError("JumpPath: last gap T - T_n must be positive");
    }
    for (const double a : amplitudes_) {
        if (!std::isfinite(a)) {
            throw ParameterError("JumpPath: amplitudes must be finite");
        }
    }
}

std::vector<double> JumpPath::gaps() const
{
    std::vector<double> out;
    out.reserve(times_.size() + 1);
    double previous = 0.0;
    for (const double t : times_) {
        out.push_back(t - previous);
        previous = t;
    }
    out.push_back(horizon_ - previous);
    return out;
}

JumpPath JumpPath::truncated(std::size_t count) const
{
    count = std::min(count, times_.size());
    return JumpPath(horizon_, {times_.begin(), times_.begin() + static_cast<std::ptrdiff_t>(count)},
                    {amplitudes_.begin(), amplitudes_.begin() + static_cast<std::ptrdiff_t>(count)});
}

// ---------------------------------------------------------------------------
// NoiseSpec

struct TabulatedLaw {
    std::vector<double> breakpoints;
    std::function<double(double)> rho;
    std::function<double(double)> rho_slope;
    double log_norm = 0.0;
    std::vector<double> edges;      // cell edges covering every piece
    std::vector<double> cumulative; // normalized CDF at each edge
};

NoiseSpec NoiseSpec::standard_normal(double truncation)
{
    if (!(truncation > 0.0)) {
        throw ParameterError("standard_normal: truncation level must be positive");
    }
    NoiseSpec s;
    s.kind_ = NoiseKind::amplitude;
    s.law_ = LawKind::normal;
    s.lower_ = -inf;
    s.upper_ = inf;
    s.param_ = truncation;
    return s;
}

NoiseSpec NoiseSpec::uniform(double lower, double upper, NoiseKind kind)
{
    if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
        throw ParameterError("uniform: need finite lower < upper");
    }
    NoiseSpec s;
    s.kind_ = kind;
    s.law_ = LawKind::uniform;
    s.lower_ = lower;
    s.upper_ = upper;
    return s;
}

NoiseSpec NoiseSpec::jump_time(double previous, double next)
{
    return uniform(previous, next, NoiseKind::time);
}

NoiseSpec NoiseSpec::exponential(double rate)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw ParameterError("exponential: rate must be positive");
    }
    NoiseSpec s;
    s.kind_ = NoiseKind::amplitude;
    s.law_ = LawKind::exponential;
    s.lower_ = 0.0;
    s.upper_ = inf;
    s.param_ = rate;
    return s;
}

NoiseSpec NoiseSpec::tabulated(std::vector<double> breakpoints, std::function<double(double)> rho,
                               std::function<double(double)> rho_slope, std::size_t table_size)
{
    if (breakpoints.size() < 2) {
        throw ParameterError("tabulated: need at least two breakpoints");
    }
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        if (!std::isfinite(breakpoints[i])) {
            throw ParameterError("tabulated: breakpoints must be finite");
        }
        if (i > 0 && !(breakpoints[i] > breakpoints[i - 1])) {
            throw ParameterError("tabulated: breakpoints must be strictly increasing");
        }
    }
    if (!rho || !rho_slope) {
        throw ParameterError("tabulated: rho and its slope are required");
    }
    if (table_size < breakpoints.size()) {
        table_size = breakpoints.size();
    }

    auto law = std::make_shared<TabulatedLaw>();
    law->breakpoints = breakpoints;
    law->rho = std::move(rho);
    law->rho_slope = std::move(rho_slope);

    double total = 0.0;
    const auto& r = law->rho;
    total = integrate_pieces([&r](double y) { return std::exp(r(y)); }, breakpoints);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw ParameterError("tabulated: exp(rho) is not integrable to a positive mass");
    }
    law->log_norm = std::log(total);

    // Cells: each piece split in proportion to its length.
    const double span = breakpoints.back() - breakpoints.front();
    law->edges.push_back(breakpoints.front());
    for (std::size_t p = 0; p + 1 < breakpoints.size(); ++p) {
        const double lo = breakpoints[p];
        const double hi = breakpoints[p + 1];
        const auto cells = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(table_size) * (hi - lo) / span)));
        for (std::size_t c = 1; c <= cells; ++c) {
            law->edges.push_back(c == cells ? hi : lo + (hi - lo) * static_cast<double>(c) / static_cast<double>(cells));
        }
    }
    law->cumulative.assign(law->edges.size(), 0.0);
    double running = 0.0;
    for (std::size_t c = 1; c < law->edges.size(); ++c) {
        running += integrate([&r](double y) { return std::exp(r(y)); }, law->edges[c - 1],
                             law->edges[c], 1e-10);
        law->cumulative[c] = running;
    }
    for (double& v : law->cumulative) {
        v /= running;
    }
    law->cumulative.back() = 1.0;

    NoiseSpec s;
    s.kind_ = NoiseKind::amplitude;
    s.law_ = LawKind::tabulated;
    s.lower_ = breakpoints.front();
    s.upper_ = breakpoints.back();
    s.singularities_.assign(breakpoints.begin() + 1, breakpoints.end() - 1);
    s.table_ = std::move(law);
    return s;
}

bool NoiseSpec::bounded() const noexcept
{
    return std::isfinite(lower_) && std::isfinite(upper_);
}

std::vector<double> NoiseSpec::breakpoints() const
{
    std::vector<double> out;
    out.reserve(singularities_.size() + 2);
    out.push_back(lower_);
    out.insert(out.end(), singularities_.begin(), singularities_.end());
    out.push_back(upper_);
    return out;
}

bool NoiseSpec::smooth_at(double y) const noexcept
{
    if (!(y > lower_ && y < upper_)) {
        return false;
    }
    return !std::binary_search(singularities_.begin(), singularities_.end(), y);
}

double NoiseSpec::distance_to_breakpoint(double y) const noexcept
{
    double d = inf;
    if (std::isfinite(lower_)) {
        d = std::min(d, std::abs(y - lower_));
    }
    if (std::isfinite(upper_)) {
        d = std::min(d, std::abs(upper_ - y));
    }
    for (const double q : singularities_) {
        d = std::min(d, std::abs(y - q));
    }
    return d;
}

NoiseSpec::Piece NoiseSpec::locate(double y) const
{
    if (!(y >= lower_ && y <= upper_)) {
        throw DomainError("NoiseSpec::locate: point outside the support");
    }
    if (y == lower_ || y == upper_) {
        throw SingularityError("NoiseSpec::locate: point is a support endpoint");
    }
    const auto it = std::lower_bound(singularities_.begin(), singularities_.end(), y);
    if (it != singularities_.end() && *it == y) {
        throw SingularityError("NoiseSpec::locate: point is an interior singularity");
    }
    const auto index = static_cast<std::size_t>(it - singularities_.begin());
    Piece piece;
    piece.index = index;
    piece.lower = index == 0 ? lower_ : singularities_[index - 1];
    piece.upper = index == singularities_.size() ? upper_ : singularities_[index];
    return piece;
}

double NoiseSpec::density(double y) const
{
    if (!smooth_at(y)) {
        return 0.0;
    }
    switch (law_) {
    case LawKind::normal:
        return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
    case LawKind::uniform:
        return 1.0 / (upper_ - lower_);
    case LawKind::exponential:
        return param_ * std::exp(-param_ * y);
    case LawKind::tabulated:
        return std::exp(table_->rho(y) - table_->log_norm);
    }
    return 0.0;
}

double NoiseSpec::log_density_slope(double y) const
{
    switch (law_) {
    case LawKind::normal:
        return -y;
    case LawKind::uniform:
        return 0.0;
    case LawKind::exponential:
        return -param_;
    case LawKind::tabulated:
        return table_->rho_slope(y);
    }
    return 0.0;
}

double NoiseSpec::sample(Stream& stream) const
{
    for (;;) {
        double y = 0.0;
        switch (law_) {
        case LawKind::normal: {
            std::normal_distribution<double> dist(0.0, 1.0);
            y = dist(stream);
            if (std::abs(y) > param_) {
                continue;
            }
            break;
        }
        case LawKind::uniform: {
            std::uniform_real_distribution<double> dist(lower_, upper_);
            y = dist(stream);
            break;
        }
        case LawKind::exponential: {
            std::exponential_distribution<double> dist(param_);
            y = dist(stream);
            break;
        }
        case LawKind::tabulated: {
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            const double u = dist(stream);
            const auto& cdf = table_->cumulative;
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            const auto c = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf.begin(), 1,
                                                                                static_cast<std::ptrdiff_t>(cdf.size()) - 1));
            const double lo = table_->edges[c - 1];
            const double hi = table_->edges[c];
            const double w = cdf[c] - cdf[c - 1];
            const double frac = w > 0.0 ? (u - cdf[c - 1]) / w : 0.5;
            y = lo + (hi - lo) * std::clamp(frac, 0.0, 1.0);
            break;
        }
        }
        if (distance_to_breakpoint(y) <= kMinSeparation || !smooth_at(y)) {
            continue;
        }
        return y;
    }
}

double NoiseSpec::mass() const
{
    const auto points = breakpoints();
    return integrate_pieces([this](double y) { return density(y); }, points, 1e-12);
}

// ---------------------------------------------------------------------------
// WeightScheme

WeightScheme WeightScheme::unit()
{
    return WeightScheme{};
}

WeightScheme WeightScheme::singular(double alpha, std::optional<double> beta)
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("WeightScheme: alpha must lie in (0, 1)");
    }
    if (beta && !(*beta > alpha)) {
        throw ParameterError("WeightScheme: beta must exceed alpha");
    }
    WeightScheme w;
    w.unit_ = false;
    w.alpha_ = alpha;
    w.beta_ = beta;
    return w;
}

WeightValue WeightScheme::eval_on_piece(double lower, double upper, double y, double from_lower,
                                        double to_upper) const
{
    if (unit_) {
        return {1.0, 0.0};
    }
    const double a = alpha_;
    const bool lower_finite = std::isfinite(lower);
    const bool upper_finite = std::isfinite(upper);
    if (lower_finite && upper_finite) {
        const double pl = std::pow(from_lower, a);
        const double pu = std::pow(to_upper, a);
        // alpha (q_{i+1} - y)^{a-1} (y - q_i)^{a-1} (q_i - 2y + q_{i+1})
        const double slope = a * (pu / to_upper) * (pl / from_lower) * (to_upper - from_lower);
        return {pu * pl, slope};
    }
    if (!lower_finite && !upper_finite) {
        throw ParameterError("singular weight needs at least one finite breakpoint");
    }
    if (!beta_) {
        throw ParameterError("singular weight on an unbounded piece needs a tail exponent beta");
    }
    const double b = *beta_;
    const double ay = std::abs(y);
    const double tail = std::pow(ay, -b);
    const double tail_slope = -b * tail / ay * (y < 0.0 ? -1.0 : 1.0);
    if (upper_finite) {
        // (q_1 - y)^a |y|^{-b} for y < q_1
        const double d = to_upper;
        const double core = std::pow(d, a);
        return {core * tail, -a * core / d * tail + core * tail_slope};
    }
    // (y - q_k)^a |y|^{-b} for y > q_k
    const double d = from_lower;
    const double core = std::pow(d, a);
    return {core * tail, a * core / d * tail + core * tail_slope};
}

WeightValue WeightScheme::eval(const NoiseSpec& spec, double y) const
{
    if (y < spec.lower() || y > spec.upper()) {
        return {0.0, 0.0};
    }
    const auto piece = spec.locate(y);
    return eval_on_piece(piece.lower, piece.upper, y, y - piece.lower, piece.upper - y);
}

EndpointSlopes WeightScheme::endpoint_slopes(const NoiseSpec& spec, double y) const
{
    if (unit_ || y < spec.lower() || y > spec.upper()) {
        return {};
    }
    const auto piece = spec.locate(y);
    const double a = alpha_;
    EndpointSlopes out;
    const double dl = y - piece.lower;
    const double du = piece.upper - y;
    if (std::isfinite(piece.lower) && std::isfinite(piece.upper)) {
        const double pl = std::pow(dl, a);
        const double pu = std::pow(du, a);
        out.upper = a * pu / du * pl;
        out.lower = -a * pu * pl / dl;
        return out;
    }
    const auto value = eval_on_piece(piece.lower, piece.upper, y, dl, du);
    if (std::isfinite(piece.lower)) {
        out.lower = -a * value.value / dl;
    }
    if (std::isfinite(piece.upper)) {
        out.upper = a * value.value / du;
    }
    return out;
}

WeightValue weight_eval(const WeightScheme& scheme, const NoiseSpec& spec, double y)
{
    return scheme.eval(spec, y);
}

IntegrabilityReport check_weight_integrability(const WeightScheme& scheme, const NoiseSpec& spec,
                                               std::optional<double> delta)
{
    IntegrabilityReport report;
    if (scheme.is_unit()) {
        report.delta = delta.value_or(1.0);
        report.delta_max = inf;
        report.alpha_admissible = true;
        report.passes = true;
        return report;
    }
    const double a = scheme.alpha();
    report.alpha = a;
    report.alpha_admissible = a > 0.0 && a < 0.5;
    report.delta_max = report.alpha_admissible
                           ? std::min(1.0 / (2.0 * a) - 1.0, 1.0 / (1.0 - a) - 1.0)
                           : 0.0;
    report.delta = delta.value_or(0.5 * report.delta_max);
    report.inverse_weight_exponent = 2.0 * a * (1.0 + report.delta);
    report.slope_exponent = (1.0 - a) * (1.0 + report.delta);
    report.passes = report.alpha_admissible && report.delta > 0.0 &&
                    report.inverse_weight_exponent < 1.0 && report.slope_exponent < 1.0;
    if (!report.passes || !spec.bounded()) {
        return report;
    }

    const double p = 1.0 + report.delta;
    const auto points = spec.breakpoints();
    double slope_moment = 0.0;
    double inverse_moment = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double lo = points[i];
        const double hi = points[i + 1];
        slope_moment += integrate_local(
            [&](const LocalPoint& x) {
                const auto w = scheme.eval_on_piece(lo, hi, x.y, x.from_lower, x.to_upper);
                return std::pow(std::abs(w.slope), p) * spec.density(x.y);
            },
            lo, hi, 1e-10);
        inverse_moment += integrate_local(
            [&](const LocalPoint& x) {
                const auto w = scheme.eval_on_piece(lo, hi, x.y, x.from_lower, x.to_upper);
                return std::pow(w.value, -2.0 * p) * spec.density(x.y);
            },
            lo, hi, 1e-10);
    }
    report.slope_moment = slope_moment;
    report.inverse_weight_moment = inverse_moment;
    return report;
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<double> sample_jump_times(double rate, double horizon, Stream& stream)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw ParameterError("sample_jump_times: intensity must be positive");
    }
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw ParameterError("sample_jump_times: horizon must be nonnegative");
    }
    std::vector<double> times;
    std::exponential_distribution<double> gap(rate);
    double t = 0.0;
    for (;;) {
        const double g = gap(stream);
        if (g <= kMinSeparation) {
            continue;
        }
        const double next = t + g;
        if (next > horizon) {
            break;
        }
        if (horizon - next <= kMinSeparation) {
            // A jump this close to the horizon would make the last gap vanish.
            continue;
        }
        times.push_back(next);
        t = next;
    }
    return times;
}

std::vector<double> sample_amplitudes(const NoiseSpec& law, std::size_t count, Stream& stream)
{
    if (law.kind() != NoiseKind::amplitude) {
        throw ParameterError("sample_amplitudes: law is not an amplitude law");
    }
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(law.sample(stream));
    }
    return out;
}

JumpPath sample_path(double rate, double horizon, const NoiseSpec& law, Stream& stream)
{
    auto times = sample_jump_times(rate, horizon, stream);
    auto amplitudes = sample_amplitudes(law, times.size(), stream);
    return JumpPath(horizon, std::move(times), std::move(amplitudes));
}

std::size_t count_jumps(const JumpPath& path, double t)
{
    if (!(t >= 0.0 && t <= path.horizon())) {
        throw DomainError("count_jumps: t outside [0, T]");
    }
    const auto times = path.times();
    return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
}

} // namespace jumpgreeks

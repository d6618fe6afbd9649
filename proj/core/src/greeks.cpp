#include "jumpgreeks/greeks.hpp"

#include "jumpgreeks/errors.hpp"
#include "jumpgreeks/parallel.hpp"
#include "jumpgreeks/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace jumpgreeks {

PayoffSpec PayoffSpec::call(double strike, double loc_width)
{
    PayoffSpec p;
    p.kind = PayoffKind::call;
    p.strike = strike;
    p.loc_width = loc_width;
    p.validate();
    return p;
}

PayoffSpec PayoffSpec::digital(double strike, double loc_width)
{
    PayoffSpec p = call(strike, loc_width);
    p.kind = PayoffKind::digital;
    return p;
}

PayoffSpec PayoffSpec::from_function(std::function<double(double)> phi, std::function<double(double)> derivative)
{
    PayoffSpec p;
    p.kind = PayoffKind::custom;
    p.custom = std::move(phi);
    p.custom_derivative = std::move(derivative);
    p.validate();
    return p;
}

void PayoffSpec::validate() const
{
    if (!std::isfinite(strike) || !std::isfinite(scale)) {
        throw ParameterError("payoff: strike and scale must be finite");
    }
    if (!(loc_width >= 0.0) || !std::isfinite(loc_width)) {
        throw ParameterError("payoff: localization width must be finite and nonnegative");
    }
    if (kind == PayoffKind::custom && !custom) {
        throw ParameterError("payoff: custom payoff needs a function");
    }
}

double PayoffSpec::operator()(double x) const
{
    switch (kind) {
    case PayoffKind::call:
        return scale * std::max(x - strike, 0.0);
    case PayoffKind::digital:
        return x >= strike ? scale : 0.0;
    case PayoffKind::custom:
        break;
    }
    return scale * custom(x);
}

LocalizedPayoff::LocalizedPayoff(PayoffSpec payoff) : payoff_(std::move(payoff))
{
    payoff_.validate();
}

double LocalizedPayoff::regular(double x) const
{
    const double k = payoff_.strike;
    const double w = payoff_.loc_width;
    switch (payoff_.kind) {
    case PayoffKind::call:
        if (w == 0.0) {
            return payoff_(x);
        }
        if (x <= k - w) {
            return 0.0;
        }
        if (x >= k + w) {
            return payoff_.scale * (x - k);
        }
        return payoff_.scale * (x - k + w) * (x - k + w) / (4.0 * w);
    case PayoffKind::digital:
        if (w == 0.0) {
            return 0.0;
        }
        return payoff_.scale * std::clamp((x - k + w) / (2.0 * w), 0.0, 1.0);
    case PayoffKind::custom:
        break;
    }
    return 0.0;
}

double LocalizedPayoff::regular_derivative(double x) const
{
    const double k = payoff_.strike;
    const double w = payoff_.loc_width;
    switch (payoff_.kind) {
    case PayoffKind::call:
        if (w == 0.0) {
            return x > k ? payoff_.scale : 0.0;
        }
        if (x <= k - w) {
            return 0.0;
        }
        if (x >= k + w) {
            return payoff_.scale;
        }
        return payoff_.scale * (x - k + w) / (2.0 * w);
    case PayoffKind::digital:
        if (w == 0.0 || x <= k - w || x >= k + w) {
            return 0.0;
        }
        return payoff_.scale / (2.0 * w);
    case PayoffKind::custom:
        break;
    }
    return 0.0;
}

double LocalizedPayoff::local(double x) const
{
    if (payoff_.kind == PayoffKind::custom) {
        return payoff_(x);
    }
    const double k = payoff_.strike;
    const double w = payoff_.loc_width;
    if (payoff_.kind == PayoffKind::call && w == 0.0) {
        return 0.0;
    }
    if (w > 0.0 && (x < k - w || x > k + w)) {
        return 0.0;
    }
    return payoff_(x) - regular(x);
}

LocalizedPayoff localize(const PayoffSpec& payoff)
{
    return LocalizedPayoff(payoff);
}

std::string_view method_name(Method m)
{
    switch (m) {
    case Method::aj:
        return "aj";
    case Method::jt:
        return "jt";
    case Method::mixed:
        return "mixed";
    case Method::fd:
        return "fd";
    }
    return "?";
}

Method parse_method(std::string_view name)
{
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    for (Method m : {Method::aj, Method::jt, Method::mixed, Method::fd}) {
        if (s == method_name(m)) {
            return m;
        }
    }
    throw ParameterError("unknown method '" + std::string(name) + "' (expected aj, jt, mixed or fd)");
}

void DeltaProblem::validate() const
{
    if (!std::isfinite(x0)) {
        throw ParameterError("initial value must be finite");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ParameterError("horizon must be positive");
    }
    if (!(intensity > 0.0) || !std::isfinite(intensity)) {
        throw ParameterError("jump intensity must be positive");
    }
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw ParameterError("weight exponent alpha must lie in (0, 1/2)");
    }
}

double weight_vasicek_aj(const JumpPath& path, double sigma, double rate)
{
    if (path.size() == 0) {
        throw NotApplicableError("amplitude weight needs at least one jump");
    }
    if (!(sigma > 0.0)) {
        throw ParameterError("sigma must be positive");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j = 0; j < path.size(); ++j) {
        const double e = std::exp(rate * path.times()[j]);
        num += e * path.amplitudes()[j];
        den += e * e;
    }
    return num / (sigma * den);
}

double weight_vasicek_jt(const JumpPath& path, double sigma, double rate, double alpha)
{
    const std::size_t n = path.size();
    if (n == 0) {
        throw NotApplicableError("jump-time weight needs at least one jump");
    }
    if (!(sigma > 0.0)) {
        throw ParameterError("sigma must be positive");
    }
    const auto t = path.times();
    const auto d = path.amplitudes();
    if (n <= 3) {
        return d[0] * std::exp(-rate * t[0]) / sigma;
    }
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw ParameterError("alpha must lie in (0, 1/2)");
    }
    // gap[i] = T_i - T_{i-1}, i = 0..n, with T_{-1} = 0 and T_n = horizon.
    const std::vector<double> gap = path.gaps();
    for (double g : gap) {
        if (!(g > 0.0)) {
            throw SingularityError("coincident jump times");
        }
    }
    std::vector<double> w(n);
    std::vector<double> pi(n);
    std::vector<double> dpi(n);
    std::vector<double> a(n); // A_j
    double shat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = d[i] * std::exp(rate * t[i]);
        const double prod = gap[i] * gap[i + 1];
        pi[i] = std::pow(prod, alpha);
        const double core = alpha * pi[i] / prod;
        dpi[i] = core * (gap[i + 1] - gap[i]);
        a[i] = core * w[i] * w[i];
        shat += pi[i] * w[i] * w[i];
    }
    if (!(shat > 0.0)) {
        throw DegeneracyError("jump-time covariance vanishes");
    }
    double first = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        first += w[i] * (rate * pi[i] + dpi[i]);
        double link = w[i] * w[i] * (2.0 * rate * pi[i] + dpi[i]);
        if (i > 0) {
            link += a[i - 1] * gap[i - 1];
        }
        if (i + 1 < n) {
            link -= a[i + 1] * gap[i + 2];
        }
        second += pi[i] * w[i] * link;
    }
    const double sr = sigma * rate;
    return -first / (sr * shat) + second / (sr * shat * shat);
}

double weight_geometric_aj(const JumpPath& path, double sigma, double x)
{
    if (path.size() == 0) {
        throw NotApplicableError("amplitude weight needs at least one jump");
    }
    if (!(sigma > 0.0) || x == 0.0) {
        throw ParameterError("need sigma > 0 and x != 0");
    }
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    for (double delta : path.amplitudes()) {
        const double f = 1.0 + sigma * delta;
        if (std::abs(f) < 1e-10) {
            throw DegeneracyError("jump factor 1 + sigma D vanishes");
        }
        const double inv2 = 1.0 / (f * f);
        a += inv2;
        b += delta / f;
        c += inv2 * inv2;
    }
    return b / (sigma * x * a) + 1.0 / x - 2.0 * c / (x * a * a);
}

namespace {

WeightScheme amplitude_scheme(const DeltaProblem& problem)
{
    if (problem.amplitude_law.law() == LawKind::normal) {
        return WeightScheme::unit();
    }
    return WeightScheme::singular(problem.alpha, problem.alpha + 1.0);
}

NoiseSystem amplitude_system(const DeltaProblem& problem, std::span<const double> values)
{
    const std::size_t n = values.size();
    return NoiseSystem(std::vector<NoiseSpec>(n, problem.amplitude_law),
                       std::vector<WeightScheme>(n, amplitude_scheme(problem)),
                       std::vector<double>(values.begin(), values.end()));
}

bool jump_factor_degenerate(const DeltaProblem& problem, const PathSolution& sol)
{
    for (std::size_t p = 0; p < sol.size(); ++p) {
        const JumpPartials c = problem.model.jump(sol.times[p], sol.amplitudes[p], sol.pre_jump[p]);
        if (std::abs(1.0 + c.dx) < 1e-10) {
            return true;
        }
    }
    return false;
}

} // namespace

PathWeight engine_weight(const DeltaProblem& problem, const JumpPath& path, Method method)
{
    if (method == Method::fd) {
        throw ParameterError("engine_weight: finite differences have no weight");
    }
    const PathSolution sol = solve_path(problem.model, problem.x0, path, problem.horizon);
    PathWeight out;
    out.jumps = sol.size();
    out.terminal = sol.terminal;
    out.terminal_dx = sol.terminal_dx;
    const std::size_t n = sol.size();
    if (n == 0) {
        return out;
    }
    if (jump_factor_degenerate(problem, sol)) {
        out.degenerate = true;
        return out;
    }
    const PathJet jet = differentiate_path(problem.model, sol);

    std::vector<Eigen::Index> idx;
    NoiseSystem sys;
    const std::span<const double> amps(sol.amplitudes);
    const bool times_usable = method == Method::mixed || (method == Method::jt && n >= 4);
    if (times_usable) {
        for (std::size_t j = 0; j < n; ++j) {
            idx.push_back(jet.time_index(j));
        }
        sys = NoiseSystem::jump_times(sol.times, problem.horizon, problem.alpha);
    }
    if (method == Method::aj || method == Method::mixed) {
        for (std::size_t j = 0; j < n; ++j) {
            idx.push_back(jet.amplitude_index(j));
        }
        NoiseSystem amp = amplitude_system(problem, amps);
        if (times_usable) {
            sys.append(amp);
        } else {
            sys = std::move(amp);
        }
    } else if (!times_usable) {
        idx.push_back(jet.amplitude_index(0));
        sys = amplitude_system(problem, amps.first(1));
    }

    const auto m = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index ix = jet.start_index();
    FunctionalBundle f{jet.value, Eigen::VectorXd(m), Eigen::MatrixXd(m, m)};
    FunctionalBundle g{jet.gradient(ix), Eigen::VectorXd(m), {}};
    for (Eigen::Index r = 0; r < m; ++r) {
        f.gradient(r) = jet.gradient(idx[static_cast<std::size_t>(r)]);
        g.gradient(r) = jet.hessian(ix, idx[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < m; ++c) {
            f.hessian(r, c) = jet.hessian(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
        }
    }
    try {
        out.weight = ibp_weight(f, g, sys);
    } catch (const DegeneracyError&) {
        out.degenerate = true;
    }
    if (!std::isfinite(out.weight)) {
        out.degenerate = true;
        out.weight = 0.0;
    }
    return out;
}

PathWeight path_weight(const DeltaProblem& problem, const JumpPath& path, Method method)
{
    const ModelSpec& model = problem.model;
    const bool gaussian = problem.amplitude_law.law() == LawKind::normal;
    const bool tagged = model.tag() != ModelTag::custom && path.horizon() == problem.horizon;
    if (!problem.closed_form || !gaussian || !tagged || method == Method::mixed || method == Method::fd
        || (model.tag() == ModelTag::geometric && method == Method::jt) || !(model.sigma() > 0.0)) {
        return engine_weight(problem, path, method);
    }
    const double r = model.rate();
    const double s = model.sigma();
    const double big_t = problem.horizon;
    PathWeight out;
    out.jumps = path.size();
    if (model.tag() == ModelTag::vasicek) {
        const double e = std::exp(-r * big_t);
        double sum = 0.0;
        for (std::size_t j = 0; j < path.size(); ++j) {
            sum += path.amplitudes()[j] * std::exp(-r * (big_t - path.times()[j]));
        }
        out.terminal = model.level() + (problem.x0 - model.level()) * e + s * sum;
        out.terminal_dx = e;
        if (out.jumps == 0) {
            return out;
        }
        try {
            out.weight = method == Method::aj ? weight_vasicek_aj(path, s, r)
                                              : weight_vasicek_jt(path, s, r, problem.alpha);
        } catch (const DegeneracyError&) {
            out.degenerate = true;
        }
        return out;
    }
    double prod = std::exp(r * big_t);
    for (double delta : path.amplitudes()) {
        prod *= 1.0 + s * delta;
    }
    out.terminal = problem.x0 * prod;
    out.terminal_dx = prod;
    if (out.jumps == 0) {
        return out;
    }
    try {
        out.weight = weight_geometric_aj(path, s, problem.x0);
    } catch (const DegeneracyError&) {
        out.degenerate = true;
    }
    return out;
}

double weight_mixed(const DeltaProblem& problem, const JumpPath& path)
{
    const PathWeight w = engine_weight(problem, path, Method::mixed);
    if (w.jumps == 0) {
        throw NotApplicableError("mixed weight needs at least one jump");
    }
    if (w.degenerate) {
        throw DegeneracyError("mixed covariance vanishes on this path");
    }
    return w.weight;
}

namespace {

double payoff_derivative(const PayoffSpec& payoff, double x, bool& at_kink)
{
    at_kink = false;
    switch (payoff.kind) {
    case PayoffKind::call:
        at_kink = x == payoff.strike;
        return x > payoff.strike ? payoff.scale : 0.0;
    case PayoffKind::digital:
        at_kink = x == payoff.strike;
        return 0.0;
    case PayoffKind::custom:
        break;
    }
    if (payoff.custom_derivative) {
        return payoff.scale * payoff.custom_derivative(x);
    }
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    return payoff.scale * (payoff.custom(x + h) - payoff.custom(x - h)) / (2.0 * h);
}

void check_method_applicable(const DeltaProblem& problem, Method method)
{
    ModelGrid grid;
    grid.t_min = 0.0;
    grid.t_max = problem.horizon;
    grid.a_min = std::isfinite(problem.amplitude_law.lower()) ? problem.amplitude_law.lower() : -3.0;
    grid.a_max = std::isfinite(problem.amplitude_law.upper()) ? problem.amplitude_law.upper() : 3.0;
    const double spread = std::abs(problem.x0) + 1.0;
    grid.x_min = problem.x0 - spread;
    grid.x_max = problem.x0 + spread;
    grid.points = 7;
    const NondegeneracyReport r = check_nondegeneracy(problem.model, grid);
    const bool amplitudes = r.sup_ca >= r.threshold;
    const bool times = r.sup_q >= r.threshold;
    const bool ok = method == Method::aj ? amplitudes : method == Method::jt ? amplitudes && times : amplitudes || times;
    if (!ok) {
        throw NotApplicableError("method " + std::string(method_name(method))
                                 + ": the model has no nondegenerate direction for these noises");
    }
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t count = 0;
};

Moments moments(const std::vector<double>& values, const std::vector<unsigned char>& skip)
{
    std::vector<double> kept;
    kept.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!skip[i]) {
            kept.push_back(values[i]);
        }
    }
    Moments m;
    m.count = kept.size();
    if (m.count == 0) {
        return m;
    }
    m.mean = compensated_sum(kept) / static_cast<double>(m.count);
    if (m.count > 1) {
        for (double& v : kept) {
            v = (v - m.mean) * (v - m.mean);
        }
        m.variance = compensated_sum(kept) / static_cast<double>(m.count - 1);
    }
    return m;
}

EstimateReport make_report(Method method, const Moments& m, std::size_t degenerate, std::size_t total)
{
    EstimateReport r;
    r.method = method;
    r.estimate = m.mean;
    r.variance = m.variance;
    r.paths = m.count;
    r.standard_error = m.count > 0 ? std::sqrt(m.variance / static_cast<double>(m.count)) : 0.0;
    r.degenerate_paths = degenerate;
    r.degenerate_warning = total > 0 && static_cast<double>(degenerate) > 0.01 * static_cast<double>(total);
    return r;
}

void check_run(std::size_t paths, std::span<const PayoffSpec> payoffs)
{
    if (paths < 2) {
        throw ParameterError("need at least two paths");
    }
    for (const PayoffSpec& p : payoffs) {
        p.validate();
    }
}

} // namespace

ZeroJumpTerm delta_zero_jump_term(const DeltaProblem& problem, const PayoffSpec& payoff)
{
    problem.validate();
    payoff.validate();
    const FlowResult s = problem.model.flow(0.0, problem.horizon, problem.x0);
    ZeroJumpTerm z;
    const double d = payoff_derivative(payoff, s.value, z.at_kink);
    z.value = z.at_kink ? 0.0 : std::exp(-problem.intensity * problem.horizon) * d * s.sensitivity;
    return z;
}

std::vector<EstimateReport> delta_malliavin(const DeltaProblem& problem, std::span<const PayoffSpec> payoffs,
                                            Method method, std::size_t paths, std::uint64_t seed, unsigned workers)
{
    problem.validate();
    check_run(paths, payoffs);
    if (method == Method::fd) {
        throw ParameterError("delta_malliavin: use delta_fd for finite differences");
    }
    check_method_applicable(problem, method);

    std::vector<LocalizedPayoff> split;
    for (const PayoffSpec& p : payoffs) {
        split.push_back(localize(p));
    }
    const std::size_t k = payoffs.size();
    std::vector<std::vector<double>> summand(k, std::vector<double>(paths, 0.0));
    std::vector<unsigned char> skip(paths, 0);
    parallel_for(paths, workers, [&](std::size_t i) {
        Stream stream = make_stream(seed, i);
        const JumpPath path = sample_path(problem.intensity, problem.horizon, problem.amplitude_law, stream);
        if (path.size() == 0) {
            return;
        }
        const PathWeight w = path_weight(problem, path, method);
        if (w.degenerate) {
            skip[i] = 1;
            return;
        }
        for (std::size_t p = 0; p < k; ++p) {
            summand[p][i] = split[p].local(w.terminal) * w.weight
                            + split[p].regular_derivative(w.terminal) * w.terminal_dx;
        }
    });

    std::size_t degenerate = 0;
    for (unsigned char s : skip) {
        degenerate += s;
    }
    std::vector<EstimateReport> out;
    for (std::size_t p = 0; p < k; ++p) {
        EstimateReport r = make_report(method, moments(summand[p], skip), degenerate, paths);
        const ZeroJumpTerm z = delta_zero_jump_term(problem, payoffs[p]);
        r.zero_jump_term = z.value;
        r.zero_jump_at_kink = z.at_kink;
        r.estimate += z.value;
        out.push_back(r);
    }
    return out;
}

EstimateReport delta_malliavin(const DeltaProblem& problem, const PayoffSpec& payoff, Method method,
                               std::size_t paths, std::uint64_t seed, unsigned workers)
{
    return delta_malliavin(problem, std::span<const PayoffSpec>(&payoff, 1), method, paths, seed, workers).front();
}

std::vector<EstimateReport> delta_fd(const DeltaProblem& problem, std::span<const PayoffSpec> payoffs, double bump,
                                     std::size_t paths, std::uint64_t seed, unsigned workers)
{
    problem.validate();
    check_run(paths, payoffs);
    if (!(bump > 0.0) || !std::isfinite(bump)) {
        throw ParameterError("finite-difference bump must be positive");
    }
    const std::size_t k = payoffs.size();
    std::vector<std::vector<double>> quotient(k, std::vector<double>(paths, 0.0));
    parallel_for(paths, workers, [&](std::size_t i) {
        Stream stream = make_stream(seed, i);
        const JumpPath path = sample_path(problem.intensity, problem.horizon, problem.amplitude_law, stream);
        const double up = solve_path(problem.model, problem.x0 + bump, path, problem.horizon).terminal;
        const double down = solve_path(problem.model, problem.x0 - bump, path, problem.horizon).terminal;
        for (std::size_t p = 0; p < k; ++p) {
            quotient[p][i] = (payoffs[p](up) - payoffs[p](down)) / (2.0 * bump);
        }
    });
    const std::vector<unsigned char> keep(paths, 0);
    std::vector<EstimateReport> out;
    for (std::size_t p = 0; p < k; ++p) {
        out.push_back(make_report(Method::fd, moments(quotient[p], keep), 0, paths));
    }
    return out;
}

EstimateReport delta_fd(const DeltaProblem& problem, const PayoffSpec& payoff, double bump, std::size_t paths,
                        std::uint64_t seed, unsigned workers)
{
    return delta_fd(problem, std::span<const PayoffSpec>(&payoff, 1), bump, paths, seed, workers).front();
}

} // namespace jumpgreeks

#include "jumpgreeks/jump_sde.hpp"

#include "jumpgreeks/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace jumpgreeks {

namespace {

std::string describe_flow(double u, double t, double x)
{
    std::ostringstream os;
    os.precision(17);
    os << "flow integration failed on [" << u << ", " << t << "] from x = " << x;
    return os.str();
}

FlowResult integrate_flow(const ModelSpec::DriftFn& drift, double rtol, double u, double t, double x)
{
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 3>; // Phi, log e, curvature
    auto system = [&](const State& s, State& ds, double r) {
        const DriftPartials d = drift(r, s[0]);
        ds[0] = d.value;
        ds[1] = d.dx;
        ds[2] = d.dxx * std::exp(s[1]);
    };
    State state{x, 0.0, 0.0};
    try {
        auto stepper = odeint::make_controlled(rtol * 1e-3, rtol, odeint::runge_kutta_dopri5<State>());
        const double dt0 = std::max((t - u) * 1e-3, 1e-12);
        odeint::integrate_adaptive(stepper, system, state, u, t, dt0);
    } catch (const std::exception& e) {
        throw NumericError(describe_flow(u, t, x) + ": " + e.what());
    }
    if (!std::isfinite(state[0]) || !std::isfinite(state[1]) || !std::isfinite(state[2]))
        throw NumericError(describe_flow(u, t, x) + ": non-finite state");
    return {state[0], std::exp(state[1]), state[2]};
}

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v)) throw ParameterError(std::string(what) + " must be finite");
}

} // namespace

ModelSpec ModelSpec::vasicek(double rate, double level, double sigma)
{
    require_finite(rate, "rate");
    require_finite(level, "level");
    require_finite(sigma, "sigma");
    ModelSpec m;
    m.tag_ = ModelTag::vasicek;
    m.rate_ = rate;
    m.level_ = level;
    m.sigma_ = sigma;
    return m;
}

ModelSpec ModelSpec::geometric(double rate, double sigma)
{
    require_finite(rate, "rate");
    require_finite(sigma, "sigma");
    ModelSpec m;
    m.tag_ = ModelTag::geometric;
    m.rate_ = rate;
    m.sigma_ = sigma;
    return m;
}

ModelSpec ModelSpec::custom(JumpFn jump, DriftFn drift, FlowFn closed_form_flow, double relative_tolerance)
{
    if (!jump || !drift) throw ParameterError("custom model needs jump and drift coefficients");
    if (!(relative_tolerance > 0.0) || relative_tolerance >= 1.0)
        throw ParameterError("relative tolerance must lie in (0, 1)");
    ModelSpec m;
    m.tag_ = ModelTag::custom;
    m.jump_ = std::move(jump);
    m.drift_ = std::move(drift);
    m.flow_ = std::move(closed_form_flow);
    m.rtol_ = relative_tolerance;
    return m;
}

JumpPartials ModelSpec::jump(double t, double a, double x) const
{
    JumpPartials p;
    switch (tag_) {
    case ModelTag::vasicek:
        p.value = sigma_ * a;
        p.da = sigma_;
        return p;
    case ModelTag::geometric:
        p.value = sigma_ * a * x;
        p.da = sigma_ * x;
        p.dx = sigma_ * a;
        p.dax = sigma_;
        return p;
    case ModelTag::custom:
        break;
    }
    return jump_(t, a, x);
}

DriftPartials ModelSpec::drift(double t, double x) const
{
    DriftPartials d;
    switch (tag_) {
    case ModelTag::vasicek:
        d.value = -rate_ * (x - level_);
        d.dx = -rate_;
        return d;
    case ModelTag::geometric:
        d.value = rate_ * x;
        d.dx = rate_;
        return d;
    case ModelTag::custom:
        break;
    }
    return drift_(t, x);
}

FlowResult ModelSpec::flow(double u, double t, double x) const
{
    if (!(u <= t)) throw DomainError("flow requires u <= t");
    switch (tag_) {
    case ModelTag::vasicek: {
        const double e = std::exp(-rate_ * (t - u));
        return {level_ + (x - level_) * e, e, 0.0};
    }
    case ModelTag::geometric: {
        const double e = std::exp(rate_ * (t - u));
        return {x * e, e, 0.0};
    }
    case ModelTag::custom:
        break;
    }
    if (u == t) return {x, 1.0, 0.0};
    if (flow_) return flow_(u, t, x);
    return integrate_flow(drift_, rtol_, u, t, x);
}

double flow(const ModelSpec& model, double u, double t, double x) { return model.flow(u, t, x).value; }

double flow_sensitivity(const ModelSpec& model, double u, double t, double x)
{
    return model.flow(u, t, x).sensitivity;
}

double q_factor(const ModelSpec& model, double t, double a, double x)
{
    const JumpPartials c = model.jump(t, a, x);
    const DriftPartials g = model.drift(t, x);
    const DriftPartials g1 = model.drift(t, x + c.value);
    return c.dt + g.value * c.dx + g.value - g1.value;
}

namespace {

template <class F>
void for_each_grid_point(const ModelGrid& grid, F&& f)
{
    if (grid.points < 2) throw ParameterError("model grid needs at least two points per axis");
    if (!(grid.t_min <= grid.t_max) || !(grid.a_min <= grid.a_max) || !(grid.x_min <= grid.x_max))
        throw ParameterError("model grid bounds are inverted");
    const auto at = [&](double lo, double hi, std::size_t k) {
        return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid.points - 1);
    };
    for (std::size_t i = 0; i < grid.points; ++i)
        for (std::size_t j = 0; j < grid.points; ++j)
            for (std::size_t k = 0; k < grid.points; ++k)
                f(at(grid.t_min, grid.t_max, i), at(grid.a_min, grid.a_max, j), at(grid.x_min, grid.x_max, k));
}

} // namespace

GrowthReport check_growth(const ModelSpec& model, const ModelGrid& grid)
{
    GrowthReport r;
    for_each_grid_point(grid, [&](double t, double a, double x) {
        const JumpPartials c = model.jump(t, a, x);
        const DriftPartials g = model.drift(t, x);
        r.growth_constant = std::max(r.growth_constant, (std::abs(c.value) + std::abs(g.value)) / (1.0 + std::abs(x)));
        for (double v : {c.dt, c.da, c.dx, g.dt, g.dx})
            r.max_first_partial = std::max(r.max_first_partial, std::abs(v));
        for (double v : {c.dtt, c.dta, c.dtx, c.daa, c.dax, c.dxx, g.dxx})
            r.max_second_partial = std::max(r.max_second_partial, std::abs(v));
    });
    return r;
}

NondegeneracyReport check_nondegeneracy(const ModelSpec& model, const ModelGrid& grid, double threshold)
{
    if (!(threshold > 0.0)) throw ParameterError("threshold must be positive");
    NondegeneracyReport r;
    r.threshold = threshold;
    r.inf_q = r.inf_one_plus_cx = r.inf_ca = std::numeric_limits<double>::infinity();
    for_each_grid_point(grid, [&](double t, double a, double x) {
        const JumpPartials c = model.jump(t, a, x);
        const double q = std::abs(q_factor(model, t, a, x));
        r.inf_q = std::min(r.inf_q, q);
        r.sup_q = std::max(r.sup_q, q);
        r.inf_one_plus_cx = std::min(r.inf_one_plus_cx, std::abs(1.0 + c.dx));
        r.inf_ca = std::min(r.inf_ca, std::abs(c.da));
        r.sup_ca = std::max(r.sup_ca, std::abs(c.da));
    });
    const bool invertible = r.inf_one_plus_cx >= threshold;
    r.amplitudes_ok = invertible && r.inf_ca >= threshold;
    r.times_ok = invertible && r.inf_q >= threshold;
    r.mixed_ok = r.amplitudes_ok && r.times_ok;
    return r;
}

PathSolution solve_path(const ModelSpec& model, double x0, const JumpPath& path, double end)
{
    require_finite(x0, "initial value");
    if (!(end >= 0.0) || end > path.horizon()) throw DomainError("solution time outside [0, horizon]");
    PathSolution s;
    s.x0 = x0;
    s.end = end;
    const auto times = path.times();
    const auto amps = path.amplitudes();
    const auto n = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), end) - times.begin());
    s.times.assign(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(n));
    s.amplitudes.assign(amps.begin(), amps.begin() + static_cast<std::ptrdiff_t>(n));
    s.pre_jump.resize(n);
    s.post_jump.resize(n);
    s.segments.reserve(n + 1);

    double state = x0;
    double last = 0.0;
    double dx = 1.0;
    for (std::size_t p = 0; p < n; ++p) {
        const FlowResult seg = model.flow(last, s.times[p], state);
        s.segments.push_back(seg);
        dx *= seg.sensitivity;
        s.pre_jump[p] = seg.value;
        const JumpPartials c = model.jump(s.times[p], s.amplitudes[p], seg.value);
        state = seg.value + c.value;
        dx *= 1.0 + c.dx;
        s.post_jump[p] = state;
        last = s.times[p];
    }
    const FlowResult tail = model.flow(last, end, state);
    s.segments.push_back(tail);
    s.terminal = tail.value;
    s.terminal_dx = dx * tail.sensitivity;
    if (!std::isfinite(s.terminal) || !std::isfinite(s.terminal_dx))
        throw NumericError("path solution is not finite");
    return s;
}

std::vector<double> sample_states(const ModelSpec& model, double x0, const JumpPath& path,
                                  std::span<const double> grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back(solve_path(model, x0, path, t).terminal);
    return out;
}

namespace {

// Propagate a first/second derivative pair through segment p (flow from u_p)
// and, if there is a jump at its far end, through that jump.
struct Carry {
    double d1;
    double d2;
};

Carry through_segment(const FlowResult& seg, Carry c)
{
    return {seg.sensitivity * c.d1, seg.sensitivity * (c.d2 + seg.curvature * c.d1 * c.d1)};
}

Carry through_jump(const JumpPartials& c, Carry in)
{
    return {(1.0 + c.dx) * in.d1, c.dxx * in.d1 * in.d1 + (1.0 + c.dx) * in.d2};
}

} // namespace

TimeDerivatives time_derivatives(const ModelSpec& model, const PathSolution& sol, std::size_t j)
{
    TimeDerivatives out;
    const std::size_t n = sol.size();
    if (j >= n) return out;

    const double u = sol.times[j];
    const double a = sol.amplitudes[j];
    const double xm = sol.pre_jump[j];
    const JumpPartials c = model.jump(u, a, xm);
    const DriftPartials g = model.drift(u, xm);
    const DriftPartials g1 = model.drift(u, xm + c.value);

    out.before = g.value;
    out.before_second = g.dt + g.value * g.dx;
    out.after = c.dt + g.value * (1.0 + c.dx);
    {
        const double ht = c.dtt + g.dt * (1.0 + c.dx) + g.value * c.dtx;
        const double hx = c.dtx + g.dx * (1.0 + c.dx) + g.value * c.dxx;
        out.after_second = ht + g.value * hx;
    }

    const double q = c.dt + g.value * c.dx + g.value - g1.value;
    const double qt = c.dtt + g.dt * c.dx + g.value * c.dtx + g.dt - g1.dt - g1.dx * c.dt;
    const double qx = c.dtx + g.dx * c.dx + g.value * c.dxx + g.dx - g1.dx * (1.0 + c.dx);
    const double tq = qt + g.value * qx;

    // First segment after u_j: the flow start moves with u_j.
    const FlowResult& seg = sol.segments[j + 1];
    const double e = seg.sensitivity;
    const double rho = e * (-g1.dx + q * seg.curvature);
    Carry carry{q * e, tq * e + q * rho};

    out.at_later_jumps.reserve(n - j - 1);
    out.at_later_jumps_second.reserve(n - j - 1);
    for (std::size_t p = j + 1; p < n; ++p) {
        carry = through_jump(model.jump(sol.times[p], sol.amplitudes[p], sol.pre_jump[p]), carry);
        out.at_later_jumps.push_back(carry.d1);
        out.at_later_jumps_second.push_back(carry.d2);
        carry = through_segment(sol.segments[p + 1], carry);
    }
    out.terminal = carry.d1;
    out.terminal_second = carry.d2;
    return out;
}

AmplitudeDerivatives amplitude_derivatives(const ModelSpec& model, const PathSolution& sol, std::size_t j)
{
    AmplitudeDerivatives out;
    const std::size_t n = sol.size();
    if (j >= n) return out;
    const JumpPartials c = model.jump(sol.times[j], sol.amplitudes[j], sol.pre_jump[j]);
    Carry carry = through_segment(sol.segments[j + 1], {c.da, c.daa});
    for (std::size_t p = j + 1; p < n; ++p) {
        carry = through_jump(model.jump(sol.times[p], sol.amplitudes[p], sol.pre_jump[p]), carry);
        carry = through_segment(sol.segments[p + 1], carry);
    }
    out.terminal = carry.d1;
    out.terminal_second = carry.d2;
    return out;
}

InitialSensitivity initial_sensitivity(const ModelSpec& model, const PathSolution& sol)
{
    const PathJet jet = differentiate_path(model, sol);
    InitialSensitivity out;
    out.value = jet.gradient(jet.start_index());
    const std::size_t n = sol.size();
    out.d_time.resize(n);
    out.d_amplitude.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.d_time[j] = jet.hessian(jet.start_index(), jet.time_index(j));
        out.d_amplitude[j] = jet.hessian(jet.start_index(), jet.amplitude_index(j));
    }
    return out;
}

PathJet differentiate_path(const ModelSpec& model, const PathSolution& sol)
{
    const std::size_t n = sol.size();
    const auto dim = static_cast<Eigen::Index>(2 * n + 1);
    PathJet jet;
    jet.gradient = Eigen::VectorXd::Zero(dim);
    jet.hessian = Eigen::MatrixXd::Zero(dim, dim);
    jet.gradient(dim - 1) = 1.0;
    double y = sol.x0;

    Eigen::VectorXd& grad = jet.gradient;
    Eigen::MatrixXd& hess = jet.hessian;
    const auto sym_add = [&](Eigen::Index i, Eigen::Index k, double v) {
        hess(i, k) += v;
        if (i != k) hess(k, i) += v;
    };
    // hess += w (e_i grad^T + grad e_i^T), grad taken before the update.
    const auto rank_two = [&](Eigen::Index i, const Eigen::VectorXd& g, double w) {
        hess.row(i) += w * g.transpose();
        hess.col(i) += w * g;
    };

    for (std::size_t p = 0; p <= n; ++p) {
        // Flow from the previous jump (or 0) to the next jump (or the end).
        const double lo = p == 0 ? 0.0 : sol.times[p - 1];
        const double hi = p == n ? sol.end : sol.times[p];
        const FlowResult& seg = sol.segments[p];
        const double E = seg.sensitivity;
        const double I = seg.curvature;
        const double F = seg.value;
        const bool moving_lo = p > 0;
        const bool moving_hi = p < n;
        const Eigen::Index iu = moving_lo ? static_cast<Eigen::Index>(p - 1) : -1;
        const Eigen::Index iv = moving_hi ? static_cast<Eigen::Index>(p) : -1;

        const Eigen::VectorXd g0 = grad;
        hess *= E;
        hess.noalias() += (E * I) * g0 * g0.transpose();
        grad *= E;

        const DriftPartials gv = model.drift(hi, F);
        if (moving_lo) {
            const DriftPartials gu = model.drift(lo, y);
            const double Fu = -gu.value * E;
            const double Fuu = -gu.dt * E + gu.value * E * (gu.dx + gu.value * I);
            const double Fuy = -E * (gu.dx + gu.value * I);
            grad(iu) += Fu;
            rank_two(iu, g0, Fuy);
            sym_add(iu, iu, Fuu);
            if (moving_hi) sym_add(iu, iv, -gu.value * E * gv.dx);
        }
        if (moving_hi) {
            grad(iv) += gv.value;
            rank_two(iv, g0, E * gv.dx);
            sym_add(iv, iv, gv.dt + gv.dx * gv.value);
        }
        y = F;
        if (!moving_hi) break;

        // Jump at u_p with amplitude a_p.
        const Eigen::Index it = static_cast<Eigen::Index>(p);
        const Eigen::Index ia = static_cast<Eigen::Index>(n + p);
        const JumpPartials c = model.jump(sol.times[p], sol.amplitudes[p], y);
        const Eigen::VectorXd g1 = grad;
        hess *= 1.0 + c.dx;
        hess.noalias() += c.dxx * g1 * g1.transpose();
        rank_two(it, g1, c.dtx);
        rank_two(ia, g1, c.dax);
        sym_add(it, it, c.dtt);
        sym_add(ia, ia, c.daa);
        sym_add(it, ia, c.dta);
        grad *= 1.0 + c.dx;
        grad(it) += c.dt;
        grad(ia) += c.da;
        y += c.value;
    }
    jet.value = y;
    return jet;
}

} // namespace jumpgreeks

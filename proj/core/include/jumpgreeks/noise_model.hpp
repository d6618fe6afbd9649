#pragma once

#include "jumpgreeks/rng.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace jumpgreeks {

/// One realization of the Poisson point measure on (0, horizon].
class JumpPath {
public:
    JumpPath() = default;
    /// Throws ParameterError unless times are strictly increasing in (0, horizon]
    /// and there is one amplitude per time.
    JumpPath(double horizon, std::vector<double> times, std::vector<double> amplitudes);

    double horizon() const noexcept { return horizon_; }
    std::size_t size() const noexcept { return times_.size(); }
    std::span<const double> times() const noexcept { return times_; }
    std::span<const double> amplitudes() const noexcept { return amplitudes_; }

    /// Gap sequence of length size() + 1: T_1 - 0, T_2 - T_1, ..., horizon - T_n.
    std::vector<double> gaps() const;

    /// Same horizon with the first `count` jumps only.
    JumpPath truncated(std::size_t count) const;

private:
    double horizon_ = 0.0;
    std::vector<double> times_;
    std::vector<double> amplitudes_;
};

enum class NoiseKind { amplitude, time };

enum class LawKind { normal, uniform, exponential, tabulated };

struct TabulatedLaw;

/// Law of one noise V_i: support (a, b), interior singularities, density
/// and slope of the log-density on the smooth pieces.
class NoiseSpec {
public:
    /// Standard normal; draws with |y| > truncation are redrawn.
    static NoiseSpec standard_normal(double truncation = 10.0);
    static NoiseSpec uniform(double lower, double upper, NoiseKind kind = NoiseKind::amplitude);
    /// Conditional law of a jump time given its neighbours: uniform on (previous, next).
    static NoiseSpec jump_time(double previous, double next);
    static NoiseSpec exponential(double rate);
    /// Density proportional to exp(rho) on the union of the open pieces
    /// (q_0, q_1), ..., (q_k, q_{k+1}) of a bounded interval; sampled through
    /// an inverse-CDF table. rho must be bounded on each piece.
    static NoiseSpec tabulated(std::vector<double> breakpoints, std::function<double(double)> rho,
                               std::function<double(double)> rho_slope,
                               std::size_t table_size = 1 << 14);

    NoiseKind kind() const noexcept { return kind_; }
    LawKind law() const noexcept { return law_; }
    double lower() const noexcept { return lower_; }
    double upper() const noexcept { return upper_; }
    bool bounded() const noexcept;
    std::span<const double> singularities() const noexcept { return singularities_; }
    /// lower(), singularities..., upper().
    std::vector<double> breakpoints() const;

    double density(double y) const;
    double log_density_slope(double y) const;
    /// True when y lies in one of the open smooth pieces.
    bool smooth_at(double y) const noexcept;
    /// Distance from y to the nearest breakpoint (infinite bounds ignored).
    double distance_to_breakpoint(double y) const noexcept;

    struct Piece {
        std::size_t index = 0;
        double lower = 0.0;
        double upper = 0.0;
    };
    /// Smooth piece containing y. Throws SingularityError when y is a
    /// breakpoint and DomainError when y is outside the support.
    Piece locate(double y) const;

    double sample(Stream& stream) const;

    /// Total mass of the density by quadrature.
    double mass() const;

private:
    NoiseSpec() = default;

    NoiseKind kind_ = NoiseKind::amplitude;
    LawKind law_ = LawKind::normal;
    double lower_ = 0.0;
    double upper_ = 0.0;
    double param_ = 0.0; // truncation (normal) or rate (exponential)
    std::vector<double> singularities_;
    std::shared_ptr<const TabulatedLaw> table_;
};

struct WeightValue {
    double value = 0.0;
    double slope = 0.0;
};

/// Partials of a weight with respect to the endpoints of the smooth piece
/// that contains y. Needed when those endpoints are themselves noises
/// (jump-time weights depend on the neighbouring jump times).
struct EndpointSlopes {
    double lower = 0.0;
    double upper = 0.0;
};

/// The weight pi used in the calculus: either identically one on the support,
/// or the singular weight vanishing like distance^alpha at every breakpoint.
class WeightScheme {
public:
    static WeightScheme unit();
    /// alpha in (0, 1); beta > alpha is only used on unbounded pieces.
    static WeightScheme singular(double alpha, std::optional<double> beta = std::nullopt);

    bool is_unit() const noexcept { return unit_; }
    double alpha() const noexcept { return alpha_; }
    std::optional<double> beta() const noexcept { return beta_; }

    /// Throws SingularityError at a breakpoint; (0, 0) outside the support.
    WeightValue eval(const NoiseSpec& spec, double y) const;
    EndpointSlopes endpoint_slopes(const NoiseSpec& spec, double y) const;

    /// Evaluation on the piece (lower, upper) from exact offsets of y to its
    /// ends; used by quadrature near singular endpoints.
    WeightValue eval_on_piece(double lower, double upper, double y, double from_lower,
                              double to_upper) const;

private:
    bool unit_ = true;
    double alpha_ = 0.0;
    std::optional<double> beta_;
};

WeightValue weight_eval(const WeightScheme& scheme, const NoiseSpec& spec, double y);

struct IntegrabilityReport {
    double alpha = 0.0;
    double delta = 0.0;
    /// Largest admissible delta: min(1/(2 alpha) - 1, 1/(1 - alpha) - 1).
    double delta_max = 0.0;
    double inverse_weight_exponent = 0.0; ///< 2 alpha (1 + delta), must be < 1
    double slope_exponent = 0.0;          ///< (1 - alpha)(1 + delta), must be < 1
    bool alpha_admissible = false;        ///< alpha in (0, 1/2)
    bool passes = false;
    /// E|pi'(V)|^{1+delta} and E pi(V)^{-2(1+delta)}; only computed when the
    /// exponents pass and the support is bounded.
    std::optional<double> slope_moment;
    std::optional<double> inverse_weight_moment;
};

/// Exponent bookkeeping plus quadrature of the two moments controlling
/// nondegeneracy. When delta is omitted, half of delta_max is used.
IntegrabilityReport check_weight_integrability(const WeightScheme& scheme, const NoiseSpec& spec,
                                               std::optional<double> delta = std::nullopt);

/// Jump times on (0, horizon] with Exponential(rate) gaps. Gaps shorter than
/// 1e-12 are redrawn so that no two times coincide.
std::vector<double> sample_jump_times(double rate, double horizon, Stream& stream);

std::vector<double> sample_amplitudes(const NoiseSpec& law, std::size_t count, Stream& stream);

JumpPath sample_path(double rate, double horizon, const NoiseSpec& law, Stream& stream);

/// J_t: number of jump times <= t.
std::size_t count_jumps(const JumpPath& path, double t);

} // namespace jumpgreeks

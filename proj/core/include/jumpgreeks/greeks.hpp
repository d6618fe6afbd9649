#pragma once

#include "jumpgreeks/jump_sde.hpp"
#include "jumpgreeks/malliavin.hpp"
#include "jumpgreeks/noise_model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace jumpgreeks {

enum class PayoffKind { call, digital, custom };

/// Payoff scale * phi(x) with phi(x) = (x - K)_+, 1_{x >= K} or a user function.
struct PayoffSpec {
    PayoffKind kind = PayoffKind::call;
    double strike = 100.0;
    /// Half-width of the window [K - w, K + w] handled by integration by parts.
    double loc_width = 0.0;
    double scale = 1.0;
    std::function<double(double)> custom;
    /// Optional derivative of a custom payoff, used for the zero-jump term.
    std::function<double(double)> custom_derivative;

    static PayoffSpec call(double strike, double loc_width = 0.0);
    static PayoffSpec digital(double strike, double loc_width = 0.0);
    static PayoffSpec from_function(std::function<double(double)> phi,
                                    std::function<double(double)> derivative = {});

    double operator()(double x) const;
    void validate() const;
};

/// phi = regular + local. The regular part is C^1 (call) or Lipschitz
/// (digital) and is differentiated pathwise; the local part vanishes outside
/// [K - w, K + w] and goes through the weight.
class LocalizedPayoff {
public:
    explicit LocalizedPayoff(PayoffSpec payoff);

    double regular(double x) const;
    double regular_derivative(double x) const;
    double local(double x) const;
    const PayoffSpec& payoff() const noexcept { return payoff_; }

private:
    PayoffSpec payoff_;
};

LocalizedPayoff localize(const PayoffSpec& payoff);

enum class Method { aj, jt, mixed, fd };

std::string_view method_name(Method m);
/// Accepts aj, jt, mixed, fd (any case). Throws ParameterError otherwise.
Method parse_method(std::string_view name);

/// Model, start value, horizon and Poisson data shared by every estimator.
struct DeltaProblem {
    ModelSpec model = ModelSpec::vasicek(0.1, 10.0, 25.0);
    double x0 = 100.0;
    double horizon = 5.0;
    double intensity = 1.0;
    NoiseSpec amplitude_law = NoiseSpec::standard_normal();
    double alpha = 0.25; ///< exponent of the singular weights
    /// Use the closed-form kernels for the tagged models where one exists.
    bool closed_form = true;

    void validate() const;
};

struct EstimateReport {
    Method method = Method::aj;
    double estimate = 0.0;
    double variance = 0.0;       ///< empirical variance of the per-path summand
    double standard_error = 0.0; ///< sqrt(variance / paths)
    std::size_t paths = 0;       ///< paths entering the mean
    double zero_jump_term = 0.0;
    bool zero_jump_at_kink = false;
    std::size_t degenerate_paths = 0; ///< skipped, not counted in `paths`
    bool degenerate_warning = false;  ///< more than 1% of the paths skipped
};

// Closed-form weights on one path, for the tagged models.

/// sum e^{rT_j} D_j / (sigma sum e^{2rT_j}). Throws NotApplicableError for n = 0.
double weight_vasicek_aj(const JumpPath& path, double sigma, double rate);
/// Jump-time weight for n >= 4; for n <= 3 the single-amplitude weight
/// D_1 e^{-rT_1} / sigma.
double weight_vasicek_jt(const JumpPath& path, double sigma, double rate, double alpha);
/// B/(sigma x A) + 1/x - 2C/(x A^2) with A = sum (1+sigma D_j)^-2,
/// B = sum D_j/(1+sigma D_j), C = sum (1+sigma D_j)^-4.
double weight_geometric_aj(const JumpPath& path, double sigma, double x);

struct PathWeight {
    std::size_t jumps = 0;
    double terminal = 0.0;    ///< S_T
    double terminal_dx = 0.0; ///< d S_T / dx
    double weight = 0.0;      ///< H, zero when jumps == 0
    bool degenerate = false;
};

/// Weight from the generic calculus on the noise system of the method:
/// amplitudes, jump times (amplitude of the first jump when n <= 3), or both.
PathWeight engine_weight(const DeltaProblem& problem, const JumpPath& path, Method method);

/// Closed form when available and enabled, otherwise the engine.
PathWeight path_weight(const DeltaProblem& problem, const JumpPath& path, Method method);

/// Mixed weight over the 2n noises (times with singular weights, amplitudes
/// with the unit weight for a Gaussian law).
double weight_mixed(const DeltaProblem& problem, const JumpPath& path);

struct ZeroJumpTerm {
    double value = 0.0;
    bool at_kink = false;
};

/// e^{-lambda T} phi'(s_T(x)) d_x s_T(x) on the no-jump event.
ZeroJumpTerm delta_zero_jump_term(const DeltaProblem& problem, const PayoffSpec& payoff);

/// Path k of a run uses the substream (seed, k), so reports for different
/// methods or payoffs with one seed share their paths. workers = 0 uses every
/// hardware thread; the result does not depend on it.
std::vector<EstimateReport> delta_malliavin(const DeltaProblem& problem, std::span<const PayoffSpec> payoffs,
                                            Method method, std::size_t paths, std::uint64_t seed,
                                            unsigned workers = 0);

EstimateReport delta_malliavin(const DeltaProblem& problem, const PayoffSpec& payoff, Method method,
                               std::size_t paths, std::uint64_t seed, unsigned workers = 0);

/// Central difference with common random numbers; bump defaults to 0.01 x.
std::vector<EstimateReport> delta_fd(const DeltaProblem& problem, std::span<const PayoffSpec> payoffs,
                                     double bump, std::size_t paths, std::uint64_t seed, unsigned workers = 0);

EstimateReport delta_fd(const DeltaProblem& problem, const PayoffSpec& payoff, double bump, std::size_t paths,
                        std::uint64_t seed, unsigned workers = 0);

} // namespace jumpgreeks

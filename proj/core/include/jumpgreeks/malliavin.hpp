#pragma once

#include "jumpgreeks/noise_model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace jumpgreeks {

/// Simple functional f(V_1, ..., V_n) at the realized noises.
struct FunctionalBundle {
    double value = 0.0;
    Eigen::VectorXd gradient;
    /// May be left empty when only first derivatives are consumed.
    Eigen::MatrixXd hessian;

    std::size_t size() const noexcept { return static_cast<std::size_t>(gradient.size()); }
    static FunctionalBundle constant(double value, std::size_t n);
};

/// Process U = (u_1, ..., u_n) with the diagonal partials d u_i / d V_i.
struct ProcessBundle {
    Eigen::VectorXd values;
    Eigen::VectorXd diagonal_partials;
};

/// Noises, their laws and weights, at one realization. A noise may be linked
/// to the noises that form the ends of its support (jump times between their
/// neighbours); its weight then depends on those noises as well.
class NoiseSystem {
public:
    NoiseSystem() = default;
    /// Throws ParameterError on size mismatch, DomainError for a value outside
    /// its support and SingularityError for a value at a breakpoint.
    NoiseSystem(std::vector<NoiseSpec> specs, std::vector<WeightScheme> weights, std::vector<double> values);

    /// Jump times 0 < t_1 < ... < t_n < horizon, each uniform between its
    /// neighbours, with weight (t_i - t_{i-1})^alpha (t_{i+1} - t_i)^alpha.
    static NoiseSystem jump_times(std::span<const double> times, double horizon, double alpha);

    /// Declares that the support of noise i is (V_lower, V_upper).
    void link(std::size_t i, std::optional<std::size_t> lower, std::optional<std::size_t> upper);

    /// Appends the noises of `other`, keeping its links.
    void append(const NoiseSystem& other);

    std::size_t size() const noexcept { return specs_.size(); }
    const NoiseSpec& spec(std::size_t i) const { return specs_.at(i); }
    const WeightScheme& scheme(std::size_t i) const { return weights_.at(i); }
    double value(std::size_t i) const { return values_.at(i); }

    /// pi_i(V_i) and its derivative in V_i.
    WeightValue weight(std::size_t i) const { return pi_.at(i); }
    double log_density_slope(std::size_t i) const { return log_slope_.at(i); }
    /// d pi_i / d V_j, including the dependence through linked endpoints.
    double weight_partial(std::size_t i, std::size_t j) const;

private:
    std::vector<NoiseSpec> specs_;
    std::vector<WeightScheme> weights_;
    std::vector<double> values_;
    std::vector<WeightValue> pi_;
    std::vector<double> log_slope_;
    std::vector<EndpointSlopes> ends_;
    std::vector<std::optional<std::size_t>> lower_link_;
    std::vector<std::optional<std::size_t>> upper_link_;
};

/// sum_i pi_i U_i W_i.
double inner_product_pi(const Eigen::VectorXd& u, const Eigen::VectorXd& w, const NoiseSystem& sys);

/// delta(U) = -sum_i [pi_i' u_i + pi_i d_i u_i + pi_i u_i d ln p_i].
double skorohod(const ProcessBundle& u, const NoiseSystem& sys);

/// LF = -sum_i [(pi_i' + pi_i d ln p_i) d_i f + pi_i d_i^2 f]. Uses the
/// Hessian diagonal.
double ou_operator(const FunctionalBundle& f, const NoiseSystem& sys);

struct Covariance {
    double sigma = 0.0;
    double gamma = 0.0;
};

/// sigma_F = sum_i pi_i (D_i F)^2, gamma_F = 1 / sigma_F.
/// Throws DegeneracyError when sigma_F is zero or not finite.
Covariance covariance(const FunctionalBundle& f, const NoiseSystem& sys);

/// D_j sigma_F = sum_i (d pi_i / d V_j)(D_i F)^2 + 2 sum_i pi_i D_i F d_ij f.
/// Needs the full Hessian.
Eigen::VectorXd covariance_gradient(const FunctionalBundle& f, const NoiseSystem& sys);

/// Weight H with E(phi'(F) G) = E(phi(F) H):
/// H = G gamma LF - gamma <DG, DF>_pi + G gamma^2 <D sigma_F, DF>_pi.
double ibp_weight(const FunctionalBundle& f, const FunctionalBundle& g, const Eigen::VectorXd& dsigma,
                  const NoiseSystem& sys);

/// Same, with D sigma_F computed from the bundle.
double ibp_weight(const FunctionalBundle& f, const FunctionalBundle& g, const NoiseSystem& sys);

/// Alternating sum of the one-sided limits of h = f pi p at the breakpoints
/// of the support: h(b-) - h(a+) + sum over interior points (h(t-) - h(t+)).
/// Limits are extrapolated from a geometric mesh; infinite ends contribute
/// zero when h decays there. Throws LimitError on a non-finite limit.
double border_term(const std::function<double(double)>& f, const NoiseSpec& spec, const WeightScheme& scheme);

/// Smooth function of one noise with its derivative.
struct ScalarFunction {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

struct DualityReport {
    double lhs = 0.0;          ///< E <DF, U>_pi
    double skorohod_term = 0.0; ///< E F delta(U)
    double border = 0.0;        ///< Gamma(F U pi p)
    double residual = 0.0;      ///< |lhs - skorohod_term - border|
};

/// Checks E<DF,U>_pi = E(F delta(U)) + Gamma for a single noise by quadrature
/// split at every breakpoint of the law.
DualityReport duality_check(const ScalarFunction& f, const ScalarFunction& u, const NoiseSpec& spec,
                            const WeightScheme& scheme, double tolerance = 1e-12);

struct ClosabilityPoint {
    double inner_product = 0.0; ///< E <DF_n, U>_pi
    double second_moment = 0.0; ///< E F_n^2
};

/// F_n = (1 - nV)_+ with V uniform on (0, 1), U = 1 - V, pi = 1.
ClosabilityPoint closability_demo(std::size_t n);

} // namespace jumpgreeks

#pragma once

#include "jumpgreeks/noise_model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace jumpgreeks {

/// Jump coefficient c(t, a, x) with its first and second partials.
struct JumpPartials {
    double value = 0.0;
    double dt = 0.0;
    double da = 0.0;
    double dx = 0.0;
    double dtt = 0.0;
    double dta = 0.0;
    double dtx = 0.0;
    double daa = 0.0;
    double dax = 0.0;
    double dxx = 0.0;
};

/// Drift g(t, x) with the partials the derivative recurrences consume.
struct DriftPartials {
    double value = 0.0;
    double dt = 0.0;
    double dx = 0.0;
    double dxx = 0.0;
};

/// Flow Phi_u(t, x) of the drift together with
///   sensitivity = e_{u,t}(x) = exp(int_u^t dg/dx(r, Phi_u(r, x)) dr) = dPhi/dx
///   curvature   = int_u^t d2g/dx2(r, Phi_u(r, x)) e_{u,r}(x) dr
/// so that d2Phi/dx2 = sensitivity * curvature.
struct FlowResult {
    double value = 0.0;
    double sensitivity = 1.0;
    double curvature = 0.0;
};

enum class ModelTag { vasicek, geometric, custom };

/// Coefficients of the pure jump equation
///   S_t = x + sum_{T_i <= t} c(T_i, Delta_i, S_{T_i-}) + int_0^t g(r, S_r) dr.
class ModelSpec {
public:
    using JumpFn = std::function<JumpPartials(double t, double a, double x)>;
    using DriftFn = std::function<DriftPartials(double t, double x)>;
    using FlowFn = std::function<FlowResult(double u, double t, double x)>;

    /// g(t, x) = -rate (x - level), c(t, a, x) = sigma a.
    static ModelSpec vasicek(double rate, double level, double sigma);
    /// g(t, x) = rate x, c(t, a, x) = sigma a x.
    static ModelSpec geometric(double rate, double sigma);
    /// Without a closed-form flow the drift is integrated with an adaptive
    /// Dormand-Prince 5(4) scheme at the given relative tolerance.
    static ModelSpec custom(JumpFn jump, DriftFn drift, FlowFn closed_form_flow = {},
                            double relative_tolerance = 1e-10);

    ModelTag tag() const noexcept { return tag_; }
    double rate() const noexcept { return rate_; }
    double level() const noexcept { return level_; }
    double sigma() const noexcept { return sigma_; }
    double relative_tolerance() const noexcept { return rtol_; }
    bool has_closed_form_flow() const noexcept { return tag_ != ModelTag::custom || static_cast<bool>(flow_); }

    JumpPartials jump(double t, double a, double x) const;
    DriftPartials drift(double t, double x) const;
    /// Requires u <= t. Throws NumericError when the integrator fails.
    FlowResult flow(double u, double t, double x) const;

private:
    ModelSpec() = default;

    ModelTag tag_ = ModelTag::custom;
    double rate_ = 0.0;
    double level_ = 0.0;
    double sigma_ = 0.0;
    double rtol_ = 1e-10;
    JumpFn jump_;
    DriftFn drift_;
    FlowFn flow_;
};

double flow(const ModelSpec& model, double u, double t, double x);
double flow_sensitivity(const ModelSpec& model, double u, double t, double x);

/// q(t, a, x) = (dc/dt + g dc/dx)(t, a, x) + g(t, x) - g(t, x + c(t, a, x)).
double q_factor(const ModelSpec& model, double t, double a, double x);

/// Rectangular grid over (t, a, x) used by the model diagnostics.
struct ModelGrid {
    double t_min = 0.0;
    double t_max = 1.0;
    double a_min = -1.0;
    double a_max = 1.0;
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t points = 11; ///< per axis, endpoints included
};

struct GrowthReport {
    /// max (|c| + |g|) / (1 + |x|) over the grid.
    double growth_constant = 0.0;
    double max_first_partial = 0.0;
    double max_second_partial = 0.0;
};

GrowthReport check_growth(const ModelSpec& model, const ModelGrid& grid);

struct NondegeneracyReport {
    double inf_q = 0.0;
    double inf_one_plus_cx = 0.0;
    double inf_ca = 0.0;
    double sup_q = 0.0;
    double sup_ca = 0.0;
    double threshold = 0.0;
    bool amplitudes_ok = false; ///< |dc/da| and |1 + dc/dx| bounded below
    bool times_ok = false;      ///< |q| and |1 + dc/dx| bounded below
    bool mixed_ok = false;      ///< all three
};

NondegeneracyReport check_nondegeneracy(const ModelSpec& model, const ModelGrid& grid,
                                        double threshold = 1e-8);

/// Deterministic solution along fixed jump times and amplitudes, up to `end`.
struct PathSolution {
    double x0 = 0.0;
    double end = 0.0;
    std::vector<double> times;      ///< jump times <= end
    std::vector<double> amplitudes;
    std::vector<double> pre_jump;   ///< s_{u_j-}
    std::vector<double> post_jump;  ///< s_{u_j}
    /// segments[0] runs 0 -> u_1, segments[p] runs u_p -> u_{p+1}, the last one u_n -> end.
    std::vector<FlowResult> segments;
    double terminal = 0.0;    ///< s_end
    double terminal_dx = 0.0; ///< d s_end / dx

    std::size_t size() const noexcept { return times.size(); }
};

/// Requires 0 <= end <= path.horizon().
PathSolution solve_path(const ModelSpec& model, double x0, const JumpPath& path, double end);

/// State s_t at each requested time of the grid.
std::vector<double> sample_states(const ModelSpec& model, double x0, const JumpPath& path,
                                  std::span<const double> grid);

/// Derivatives of s with respect to one jump time u_j.
struct TimeDerivatives {
    double terminal = 0.0;        ///< d s_end / du_j
    double terminal_second = 0.0; ///< d2 s_end / du_j2
    // One-sided values at the discontinuity u_j itself.
    double before = 0.0;        ///< d s_{u_j-} / du_j = g(u_j, s_{u_j-})
    double after = 0.0;         ///< d s_{u_j} / du_j
    double before_second = 0.0;
    double after_second = 0.0;
    /// First and second derivatives of the post-jump states s_{u_p}, p > j.
    std::vector<double> at_later_jumps;
    std::vector<double> at_later_jumps_second;
};

/// Zero-based jump index j. Indices past the jumps before `end` give zeros.
TimeDerivatives time_derivatives(const ModelSpec& model, const PathSolution& solution, std::size_t j);

struct AmplitudeDerivatives {
    double terminal = 0.0;
    double terminal_second = 0.0;
};

AmplitudeDerivatives amplitude_derivatives(const ModelSpec& model, const PathSolution& solution,
                                           std::size_t j);

/// d s_end / dx and its partials in every jump time and amplitude.
struct InitialSensitivity {
    double value = 0.0;
    std::vector<double> d_time;
    std::vector<double> d_amplitude;
};

InitialSensitivity initial_sensitivity(const ModelSpec& model, const PathSolution& solution);

/// Value, gradient and Hessian of s_end in the variables
/// (u_1, ..., u_n, a_1, ..., a_n, x), obtained by forward second-order
/// propagation through the flow/jump composition.
struct PathJet {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;

    std::size_t jumps() const noexcept { return static_cast<std::size_t>((gradient.size() - 1) / 2); }
    Eigen::Index time_index(std::size_t j) const noexcept { return static_cast<Eigen::Index>(j); }
    Eigen::Index amplitude_index(std::size_t j) const noexcept { return static_cast<Eigen::Index>(jumps() + j); }
    Eigen::Index start_index() const noexcept { return gradient.size() - 1; }
};

PathJet differentiate_path(const ModelSpec& model, const PathSolution& solution);

} // namespace jumpgreeks

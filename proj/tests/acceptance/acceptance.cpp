// Acceptance suite. `acceptance --criterion N` runs one criterion, no
// argument runs all seven. One PASS/FAIL line per criterion; exit status 1
// when any selected criterion fails.

#include "jumpgreeks/errors.hpp"
#include "jumpgreeks/experiment.hpp"
#include "jumpgreeks/greeks.hpp"
#include "jumpgreeks/jump_sde.hpp"
#include "jumpgreeks/malliavin.hpp"
#include "jumpgreeks/parallel.hpp"

#include "test_support.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace jumpgreeks;
using namespace testing_support;

namespace {

// Tolerances, pinned.
constexpr double c1_rel = 1e-10;
constexpr std::size_t c1_paths = 1000;
constexpr double c2_residual = 1e-8;
constexpr double c2_moment = 1e-12;
constexpr double c2_limit = 0.9;
constexpr double c3_first = 1e-5;
constexpr double c3_second = 1e-3;
constexpr double c3_first_floor = 1e-3;  // relative to max(|fd|, floor)
constexpr double c3_second_floor = 1e-2;
constexpr double c3_step_first = 1e-4;
constexpr double c3_step_second = 1e-3;
constexpr std::size_t c3_paths = 100;
constexpr std::size_t c4_paths = 1000000;
constexpr double c4_se = 3.0;
constexpr std::size_t c5_paths = 100000;
constexpr double c5_se = 3.0;
constexpr double c6_vasicek_rel = 0.03;
constexpr double c6_geometric_rel = 0.04;
constexpr std::size_t c6_paths = 100000;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1. generic weight versus closed forms
Outcome criterion_1()
{
    Outcome o;
    DeltaProblem v;
    v.model = ModelSpec::vasicek(0.1, 10.0, 25.0);
    DeltaProblem g;
    g.model = ModelSpec::geometric(0.1, 0.3);
    double worst_aj = 0.0;
    double worst_geo = 0.0;
    double worst_jt = 0.0;
    for (std::uint64_t k = 0; k < c1_paths; ++k) {
        Stream s = make_stream(1001, k);
        const std::size_t n = 1 + k % 10;
        const JumpPath p = random_path(s, n, 5.0, 1e-3);
        worst_aj = std::max(worst_aj, rel_err(engine_weight(v, p, Method::aj).weight, weight_vasicek_aj(p, 25.0, 0.1)));
        Stream sg = make_stream(1002, k);
        const JumpPath q = random_path(sg, n, 5.0, 1e-3);
        worst_geo =
            std::max(worst_geo, rel_err(engine_weight(g, q, Method::aj).weight, weight_geometric_aj(q, 0.3, 100.0)));
        if (n >= 4) {
            const double e = std::abs(engine_weight(v, p, Method::jt).weight);
            worst_jt = std::max(worst_jt, rel_err(e, std::abs(weight_vasicek_jt(p, 25.0, 0.1, 0.25))));
        }
    }
    o.pass = worst_aj <= c1_rel && worst_geo <= c1_rel && worst_jt <= c1_rel;
    o.detail = "max rel err vasicek-aj " + fmt("%.2e", worst_aj) + ", geometric-aj " + fmt("%.2e", worst_geo)
               + ", vasicek-jt " + fmt("%.2e", worst_jt) + " (tol " + fmt("%.0e", c1_rel) + ")";
    return o;
}

// 2. duality and the closability counterexample
Outcome criterion_2()
{
    Outcome o;
    double worst = 0.0;
    auto track = [&](const DualityReport& r) { worst = std::max(worst, r.residual); };

    const ScalarFunction id{[](double y) { return y; }, [](double) { return 1.0; }};
    const ScalarFunction one{[](double) { return 1.0; }, [](double) { return 0.0; }};
    const NoiseSpec uniform = NoiseSpec::uniform(0.0, 1.0);

    const DualityReport i = duality_check(id, one, uniform, WeightScheme::unit());
    track(i);
    const bool border_one = std::abs(i.border - 1.0) <= c2_residual;

    for (int deg = 0; deg <= 4; ++deg) {
        const ScalarFunction f{[deg](double y) { return std::pow(y, deg); },
                               [deg](double y) { return deg == 0 ? 0.0 : deg * std::pow(y, deg - 1); }};
        for (int udeg = 0; udeg + deg <= 4; ++udeg) {
            const ScalarFunction u{[udeg](double y) { return std::pow(y, udeg); },
                                   [udeg](double y) { return udeg == 0 ? 0.0 : udeg * std::pow(y, udeg - 1); }};
            track(duality_check(f, u, NoiseSpec::standard_normal(), WeightScheme::unit()));
        }
    }

    const DualityReport iii = duality_check(id, one, uniform, WeightScheme::singular(0.25));
    track(iii);
    const double beta = std::beta(1.25, 1.25);
    const bool border_zero = std::abs(iii.border) <= c2_residual;
    const bool beta_ok = std::abs(iii.lhs - beta) <= c2_residual && std::abs(iii.skorohod_term - beta) <= c2_residual;

    double moment_err = 0.0;
    double weakest = 1.0;
    for (std::size_t n : {1UL, 10UL, 100UL, 1000UL, 10000UL}) {
        const ClosabilityPoint c = closability_demo(n);
        moment_err = std::max(moment_err, std::abs(c.second_moment - 1.0 / (3.0 * static_cast<double>(n))));
        if (n >= 100) {
            weakest = std::min(weakest, std::abs(c.inner_product));
        }
    }
    o.pass = worst <= c2_residual && border_one && border_zero && beta_ok && moment_err <= c2_moment
             && weakest >= c2_limit;
    o.detail = "max residual " + fmt("%.2e", worst) + ", border(i) " + fmt("%.12g", i.border) + ", border(iii) "
               + fmt("%.2e", iii.border) + ", E pi = " + fmt("%.9f", iii.lhs) + " vs B(5/4,5/4) "
               + fmt("%.9f", beta) + ", |E F_n^2 - 1/(3n)| " + fmt("%.1e", moment_err) + ", min |E<DF_n,U>| (n>=100) "
               + fmt("%.4f", weakest);
    return o;
}

// 3. derivative recurrences versus finite differences
Outcome criterion_3()
{
    Outcome o;
    const ModelSpec m = SineModel{}.spec();
    const double x0 = 1.7;
    double worst1 = 0.0;
    double worst2 = 0.0;
    auto first = [&](double got, double fd) {
        worst1 = std::max(worst1, std::abs(got - fd) / std::max(std::abs(fd), c3_first_floor));
    };
    auto second = [&](double got, double fd) {
        worst2 = std::max(worst2, std::abs(got - fd) / std::max(std::abs(fd), c3_second_floor));
    };
    for (std::uint64_t k = 0; k < c3_paths; ++k) {
        Stream s = make_stream(1003, k);
        const std::size_t n = 1 + k % 8;
        const JumpPath p = random_path(s, n, 4.0, 0.05);
        const PathSolution sol = solve_path(m, x0, p, 4.0);
        const InitialSensitivity init = initial_sensitivity(m, sol);
        first(init.value, fd_first(m, x0, p, 2 * n, c3_step_first));
        for (std::size_t j = 0; j < n; ++j) {
            const TimeDerivatives t = time_derivatives(m, sol, j);
            const AmplitudeDerivatives a = amplitude_derivatives(m, sol, j);
            first(t.terminal, fd_first(m, x0, p, j, c3_step_first));
            first(a.terminal, fd_first(m, x0, p, n + j, c3_step_first));
            second(t.terminal_second, fd_second(m, x0, p, j, j, c3_step_second));
            second(a.terminal_second, fd_second(m, x0, p, n + j, n + j, c3_step_second));
            second(init.d_time[j], fd_second(m, x0, p, j, 2 * n, c3_step_second));
            second(init.d_amplitude[j], fd_second(m, x0, p, n + j, 2 * n, c3_step_second));
            for (std::size_t q = j + 1; q < n; ++q) {
                const double uq = p.times()[q];
                auto at = [&](double h) { return solve_path(m, x0, bump_path(p, j, h), uq).terminal; };
                first(t.at_later_jumps[q - j - 1], (at(c3_step_first) - at(-c3_step_first)) / (2 * c3_step_first));
                second(t.at_later_jumps_second[q - j - 1],
                       (at(c3_step_second) - 2 * at(0.0) + at(-c3_step_second)) / (c3_step_second * c3_step_second));
            }
        }
    }
    o.pass = worst1 <= c3_first && worst2 <= c3_second;
    o.detail = "max rel err first " + fmt("%.2e", worst1) + " (tol " + fmt("%.0e", c3_first) + "), second "
               + fmt("%.2e", worst2) + " (tol " + fmt("%.0e", c3_second) + ")";
    return o;
}

struct OracleValue {
    double call = 0.0;
    double call_se = 0.0;
    double digital = 0.0;
    double digital_se = 0.0;
};

/// Delta from the Gaussian law of S_T given the jump times, averaged over
/// simulated time paths.
OracleValue vasicek_oracle(double sigma, std::size_t paths, std::uint64_t seed)
{
    const double x = 100.0, r = 0.1, level = 10.0, big_t = 5.0, strike = 100.0, lambda = 1.0;
    std::vector<double> call(paths);
    std::vector<double> digital(paths);
    const double e = std::exp(-r * big_t);
    parallel_for(paths, 0, [&](std::size_t i) {
        Stream s = make_stream(seed, i);
        const std::vector<double> t = sample_jump_times(lambda, big_t, s);
        const ConditionalGaussian g = vasicek_conditional(x, r, level, sigma, big_t, t);
        if (g.variance == 0.0) {
            call[i] = g.mean > strike ? e : 0.0;
            digital[i] = 0.0;
            return;
        }
        const double sd = std::sqrt(g.variance);
        const double z = (g.mean - strike) / sd;
        call[i] = e * 0.5 * std::erfc(-z / std::numbers::sqrt2);
        digital[i] = e * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
    });
    auto stats = [&](const std::vector<double>& v, double& mean, double& se) {
        mean = compensated_sum(v) / static_cast<double>(v.size());
        std::vector<double> sq(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            sq[k] = (v[k] - mean) * (v[k] - mean);
        }
        se = std::sqrt(compensated_sum(sq) / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    };
    OracleValue o;
    stats(call, o.call, o.call_se);
    stats(digital, o.digital, o.digital_se);
    return o;
}

// 4. Delta estimators versus the conditional-Gaussian oracle
Outcome criterion_4()
{
    Outcome o;
    double worst = 0.0;
    std::string lines;
    for (double sigma : {50.0 / 3.0, 25.0, 50.0}) {
        const OracleValue oracle = vasicek_oracle(sigma, c4_paths, 2000 + static_cast<std::uint64_t>(sigma));
        ExperimentConfig cfg = table_preset(1);
        const DeltaProblem problem = make_problem(cfg, sigma);
        cfg.payoff = PayoffKind::call;
        const PayoffSpec call = make_payoff(cfg, sigma);
        cfg.payoff = PayoffKind::digital;
        const PayoffSpec digital = make_payoff(cfg, sigma);
        const std::vector<PayoffSpec> pays{call, digital};
        for (Method m : {Method::aj, Method::jt, Method::mixed}) {
            const auto r = delta_malliavin(problem, pays, m, c4_paths, 3000 + static_cast<std::uint64_t>(sigma));
            const double zc = std::abs(r[0].estimate - oracle.call) / std::hypot(r[0].standard_error, oracle.call_se);
            const double zd =
                std::abs(r[1].estimate - oracle.digital) / std::hypot(r[1].standard_error, oracle.digital_se);
            worst = std::max({worst, zc, zd});
            char buf[256];
            std::snprintf(buf, sizeof buf,
                          "\n    sigma=%-8.4g %-5s call %.6f vs %.6f (z %.2f)  digital %.7f vs %.7f (z %.2f)", sigma,
                          std::string(method_name(m)).c_str(), r[0].estimate, oracle.call, zc, r[1].estimate,
                          oracle.digital, zd);
            lines += buf;
        }
    }
    o.pass = worst <= c4_se;
    o.detail = "max |z| " + fmt("%.2f", worst) + " (tol " + fmt("%.0f", c4_se) + " SE)" + lines;
    return o;
}

// 5. E(phi'(S) dS/dx) = E(phi(S) H) stratum by stratum
Outcome criterion_5()
{
    Outcome o;
    DeltaProblem p;
    p.model = ModelSpec::vasicek(0.1, 10.0, 25.0);
    const double strike = 100.0;
    struct Stratum {
        std::string name;
        Method method;
        std::function<bool(std::size_t)> keep;
    };
    const std::vector<Stratum> strata{
        {"aj n>=1", Method::aj, [](std::size_t n) { return n >= 1; }},
        {"jt n>=4", Method::jt, [](std::size_t n) { return n >= 4; }},
        {"mixed n>=1", Method::mixed, [](std::size_t n) { return n >= 1; }},
        {"mixed n=2", Method::mixed, [](std::size_t n) { return n == 2; }},
        {"mixed n=3", Method::mixed, [](std::size_t n) { return n == 3; }},
    };
    double worst = 0.0;
    for (const Stratum& st : strata) {
        std::vector<double> d(c5_paths, 0.0);
        parallel_for(c5_paths, 0, [&](std::size_t i) {
            Stream s = make_stream(4000 + static_cast<std::uint64_t>(st.method), i);
            const JumpPath path = sample_path(p.intensity, p.horizon, p.amplitude_law, s);
            if (!st.keep(path.size())) {
                return;
            }
            const PathWeight w = path_weight(p, path, st.method);
            if (w.degenerate) {
                return;
            }
            const double th = std::tanh((w.terminal - strike) / 10.0);
            d[i] = (1.0 - th * th) / 10.0 * w.terminal_dx - th * w.weight;
        });
        const double mean = compensated_sum(d) / static_cast<double>(c5_paths);
        std::vector<double> sq(c5_paths);
        for (std::size_t k = 0; k < c5_paths; ++k) {
            sq[k] = (d[k] - mean) * (d[k] - mean);
        }
        const double se = std::sqrt(compensated_sum(sq) / static_cast<double>(c5_paths - 1) / c5_paths);
        const double z = std::abs(mean) / se;
        worst = std::max(worst, z);
        char buf[160];
        std::snprintf(buf, sizeof buf, "\n    %-11s gap %+.3e  se %.3e  z %.2f", st.name.c_str(), mean, se, z);
        o.detail += buf;
    }
    o.pass = worst <= c5_se;
    o.detail = "max |z| " + fmt("%.2f", worst) + " (tol " + fmt("%.0f", c5_se) + " SE)" + o.detail;
    return o;
}

// 6. theoretical variances and the variance ordering
Outcome criterion_6()
{
    Outcome o;
    bool a_ok = true;
    std::string lines;
    struct Ref {
        ModelTag model;
        double sigma;
        double table;
    };
    for (const Ref& r : {Ref{ModelTag::vasicek, 50.0 / std::sqrt(10.0), 796.241}, Ref{ModelTag::vasicek, 25.0, 1967.53},
                         Ref{ModelTag::vasicek, 50.0, 7890.4}, Ref{ModelTag::geometric, 0.1, 1405.06},
                         Ref{ModelTag::geometric, 0.3, 16005.5}, Ref{ModelTag::geometric, 0.6, 130425.0}}) {
        const TheoreticalVariance v = theoretical_variance(r.model, 100.0, 0.1, 10.0, r.sigma, 1.0, 5.0);
        const bool vas = r.model == ModelTag::vasicek;
        const double value = vas ? v.derived : v.printed;
        const double tol = vas ? c6_vasicek_rel : c6_geometric_rel;
        const double rel = std::abs(value - r.table) / r.table;
        const bool ok = rel <= tol;
        a_ok = a_ok && ok;
        char buf[200];
        std::snprintf(buf, sizeof buf, "\n    (a) %-9s sigma=%-8.4g %s %.6g vs table %.6g  rel %.2f%% (tol %.0f%%) %s",
                      std::string(model_name(r.model)).c_str(), r.sigma, vas ? "derived" : "printed", value, r.table,
                      100 * rel, 100 * tol, ok ? "ok" : "OUT");
        lines += buf;
    }

    ExperimentConfig cfg = table_preset(2);
    cfg.paths = c6_paths;
    cfg.seed = 6006;
    cfg.fd_bump = 1.0;
    const auto rows = run_table(cfg);
    bool b_ok = true;
    std::size_t soft = 0;
    for (const TableRow& row : rows) {
        const double aj = row.cells.at(Method::aj).variance;
        const double jt = row.cells.at(Method::jt).variance;
        const double fd = row.cells.at(Method::fd).variance;
        b_ok = b_ok && aj < jt;
        soft += aj < fd ? 1 : 0;
        char buf[200];
        std::snprintf(buf, sizeof buf, "\n    (b) sigma=%-8.4g var aj %.3e  jt %.3e  fd %.3e  %s", row.sigma, aj, jt, fd,
                      aj < jt ? "ok" : "OUT");
        lines += buf;
    }
    o.pass = a_ok && b_ok;
    o.detail = std::string("(a) ") + (a_ok ? "ok" : "FAIL") + ", (b) " + (b_ok ? "ok" : "FAIL")
               + ", soft Var AJ < Var FD (bump 1) in " + std::to_string(soft) + "/" + std::to_string(rows.size())
               + " rows" + lines;
    return o;
}

// 7. run_table determinism
Outcome criterion_7()
{
    Outcome o;
    ExperimentConfig cfg = table_preset(2);
    cfg.sigmas = {50.0 / 3.0, 25.0, 50.0};
    cfg.methods = {Method::aj, Method::jt, Method::mixed, Method::fd};
    cfg.paths = 20000;
    cfg.seed = 7007;
    std::vector<std::string> out;
    for (unsigned workers : {1U, 2U, 5U, 0U, 1U}) {
        cfg.workers = workers;
        out.push_back(table_csv(run_table(cfg)));
    }
    o.pass = std::all_of(out.begin(), out.end(), [&](const std::string& s) { return s == out.front(); });
    o.detail = "5 runs (workers 1, 2, 5, all, 1): " + std::string(o.pass ? "byte-identical" : "DIFFER") + ", "
               + std::to_string(out.front().size()) + " bytes";
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-7)")->check(CLI::Range(1, 7));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> all{criterion_1, criterion_2, criterion_3, criterion_4,
                                                    criterion_5, criterion_6, criterion_7};
    bool ok = true;
    for (int k = 1; k <= 7; ++k) {
        if (only != 0 && only != k) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = all[static_cast<std::size_t>(k - 1)]();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d: %s [%.1fs] %s\n", k, r.pass ? "PASS" : "FAIL", secs, r.detail.c_str());
        std::fflush(stdout);
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

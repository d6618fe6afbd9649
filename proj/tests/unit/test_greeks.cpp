#include "jumpgreeks/errors.hpp"
#include "jumpgreeks/greeks.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace jumpgreeks;
using namespace testing_support;

namespace {

DeltaProblem vasicek_problem(double sigma = 25.0)
{
    DeltaProblem p;
    p.model = ModelSpec::vasicek(0.1, 10.0, sigma);
    return p;
}

DeltaProblem geometric_problem(double sigma = 0.3)
{
    DeltaProblem p;
    p.model = ModelSpec::geometric(0.1, sigma);
    return p;
}

} // namespace

TEST_CASE("method names")
{
    CHECK(parse_method("AJ") == Method::aj);
    CHECK(parse_method("mixed") == Method::mixed);
    CHECK(method_name(Method::fd) == "fd");
    CHECK_THROWS_AS(parse_method("ibp"), ParameterError);
}

TEST_CASE("Vasicek amplitude weight")
{
    const JumpPath one(5.0, {2.0}, {0.5});
    CHECK(weight_vasicek_aj(one, 25.0, 0.1) == doctest::Approx(0.5 * std::exp(0.2) / (25.0 * std::exp(0.4))));
    CHECK(weight_vasicek_aj(one, 25.0, 0.1) == doctest::Approx(0.0163746).epsilon(1e-6));
    CHECK(weight_vasicek_aj(JumpPath(5.0, {1.0, 3.0}, {0.0, 0.0}), 25.0, 0.1) == 0.0);
    CHECK_THROWS_AS(weight_vasicek_aj(JumpPath(5.0, {}, {}), 25.0, 0.1), NotApplicableError);
}

TEST_CASE("Vasicek jump-time weight")
{
    CHECK(weight_vasicek_jt(JumpPath(5.0, {1.0, 4.0}, {0.5, 1.2}), 25.0, 0.1, 0.25)
          == doctest::Approx(0.5 * std::exp(-0.1) / 25.0));
    CHECK(weight_vasicek_jt(JumpPath(5.0, {1.0, 4.0}, {0.5, 1.2}), 25.0, 0.1, 0.25)
          == doctest::Approx(0.0180967).epsilon(1e-6));
    CHECK_THROWS_AS(weight_vasicek_jt(JumpPath(5.0, {}, {}), 25.0, 0.1, 0.25), NotApplicableError);

    // equally spaced times: every gap difference vanishes
    const double sigma = 25.0;
    const double r = 0.1;
    const double alpha = 0.25;
    const std::size_t n = 5;
    const double gap = 5.0 / static_cast<double>(n + 1);
    std::vector<double> t(n);
    std::vector<double> d{0.4, -1.3, 0.8, 0.05, 2.1};
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = gap * static_cast<double>(i + 1);
    }
    const double pi = std::pow(gap * gap, alpha);
    std::vector<double> w(n);
    std::vector<double> a(n + 2, 0.0); // A_0 and A_{n+1} are zero
    double shat = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = d[i] * std::exp(r * t[i]);
        a[i + 1] = alpha * std::pow(gap * gap, alpha - 1.0) * w[i] * w[i];
        shat += pi * w[i] * w[i];
        first += r * pi * w[i];
    }
    double second = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        second += pi * w[i] * (gap * (a[i] - a[i + 2]) + 2.0 * r * pi * w[i] * w[i]);
    }
    const double reduced = -first / (sigma * r * shat) + second / (sigma * r * shat * shat);
    const JumpPath equal(5.0, t, d);
    CHECK(weight_vasicek_jt(equal, sigma, r, alpha) == doctest::Approx(reduced).epsilon(1e-12));

    const DeltaProblem problem = vasicek_problem(sigma);
    CHECK(engine_weight(problem, equal, Method::jt).weight == doctest::Approx(reduced).epsilon(1e-10));
}

TEST_CASE("geometric amplitude weight")
{
    const JumpPath one(5.0, {2.0}, {0.5});
    CHECK(weight_geometric_aj(one, 0.3, 100.0) == doctest::Approx(0.0091667).epsilon(1e-5));
    const JumpPath flat(5.0, {2.0}, {0.0});
    CHECK(weight_geometric_aj(flat, 0.3, 100.0) == doctest::Approx(-0.01).epsilon(1e-14));
    CHECK_THROWS_AS(weight_geometric_aj(JumpPath(5.0, {1.0}, {-1.0 / 0.3}), 0.3, 100.0), DegeneracyError);
}

TEST_CASE("closed forms agree with the generic engine")
{
    const DeltaProblem v = vasicek_problem();
    const DeltaProblem g = geometric_problem();
    for (std::uint64_t k = 0; k < 200; ++k) {
        Stream s = make_stream(41, k);
        const JumpPath p = random_path(s, 1 + k % 10, 5.0, 1e-3);
        CHECK(close(engine_weight(v, p, Method::aj).weight, weight_vasicek_aj(p, 25.0, 0.1), 1e-10));
        CHECK(close(engine_weight(v, p, Method::jt).weight, weight_vasicek_jt(p, 25.0, 0.1, 0.25), 1e-10));
        CHECK(close(engine_weight(g, p, Method::aj).weight, weight_geometric_aj(p, 0.3, 100.0), 1e-10));

        const PathWeight closed = path_weight(v, p, Method::aj);
        const PathWeight engine = engine_weight(v, p, Method::aj);
        CHECK(close(closed.terminal, engine.terminal, 1e-13, 1.0));
        CHECK(close(closed.terminal_dx, engine.terminal_dx, 1e-13));
    }
}

TEST_CASE("mixed weight")
{
    // no time direction for the geometric model: mixed reduces to amplitudes
    const DeltaProblem g = geometric_problem();
    for (std::uint64_t k = 0; k < 20; ++k) {
        Stream s = make_stream(42, k);
        const JumpPath p = random_path(s, 1 + k % 6, 5.0, 1e-2);
        CHECK(close(weight_mixed(g, p), weight_geometric_aj(p, 0.3, 100.0), 1e-9));
    }
    const DeltaProblem v = vasicek_problem();
    CHECK(std::isfinite(weight_mixed(v, JumpPath(5.0, {2.0}, {0.5}))));
    CHECK_THROWS_AS(weight_mixed(v, JumpPath(5.0, {}, {})), NotApplicableError);
}

TEST_CASE("localization")
{
    const LocalizedPayoff call0 = localize(PayoffSpec::call(100.0));
    for (double x : {50.0, 99.0, 100.0, 101.0, 170.0}) {
        CHECK(call0.regular(x) == std::max(x - 100.0, 0.0));
        CHECK(call0.local(x) == 0.0);
    }

    const LocalizedPayoff dig = localize(PayoffSpec::digital(100.0, 5.0));
    CHECK(dig.regular_derivative(97.0) == doctest::Approx(0.1));
    CHECK(dig.regular_derivative(104.9) == doctest::Approx(0.1));
    CHECK(dig.regular_derivative(94.0) == 0.0);
    CHECK(dig.regular_derivative(106.0) == 0.0);
    CHECK(dig.local(94.999) == 0.0);
    CHECK(dig.local(105.001) == 0.0);

    const PayoffSpec cs = PayoffSpec::call(100.0, 4.0);
    const LocalizedPayoff call = localize(cs);
    for (double x = 90.0; x < 110.0; x += 0.37) {
        CHECK(call.regular(x) + call.local(x) == doctest::Approx(cs(x)).epsilon(1e-14).scale(1.0));
        CHECK(dig.regular(x) + dig.local(x) == doctest::Approx(PayoffSpec::digital(100.0, 5.0)(x)).scale(1.0));
        const double h = 1e-6;
        CHECK(call.regular_derivative(x) == doctest::Approx((call.regular(x + h) - call.regular(x - h)) / (2 * h))
                                                .epsilon(1e-6)
                                                .scale(1.0));
    }
    // C^1 across the window ends
    CHECK(call.regular_derivative(96.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(call.regular_derivative(104.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(PayoffSpec::call(100.0, -1.0).validate(), ParameterError);
}

TEST_CASE("zero-jump term")
{
    DeltaProblem p = vasicek_problem();
    const ZeroJumpTerm call = delta_zero_jump_term(p, PayoffSpec::call(50.0));
    CHECK(call.value == doctest::Approx(std::exp(-5.0) * std::exp(-0.5)).epsilon(1e-14));
    CHECK(call.value == doctest::Approx(0.0040868).epsilon(1e-5));
    CHECK_FALSE(call.at_kink);
    CHECK(delta_zero_jump_term(p, PayoffSpec::digital(50.0)).value == 0.0);
    CHECK(delta_zero_jump_term(p, PayoffSpec::call(80.0)).value == 0.0);

    const double s = flow(p.model, 0.0, 5.0, 100.0);
    const ZeroJumpTerm kink = delta_zero_jump_term(p, PayoffSpec::call(s));
    CHECK(kink.at_kink);
    CHECK(kink.value == 0.0);
}

TEST_CASE("linear payoffs")
{
    const DeltaProblem p = vasicek_problem();
    const double want = std::exp(-0.5);
    const PayoffSpec linear = PayoffSpec::from_function([](double x) { return x; }, [](double) { return 1.0; });

    const EstimateReport fd = delta_fd(p, linear, 1.0, 2000, 3);
    CHECK(fd.estimate == doctest::Approx(want).epsilon(1e-12));
    CHECK(fd.variance < 1e-20);

    const EstimateReport aj = delta_malliavin(p, linear, Method::aj, 100000, 4);
    CHECK(std::abs(aj.estimate - want) < 3.0 * aj.standard_error);

    // deep in the money call, localized window far from the mass; only the
    // share of paths with jumps is random
    const EstimateReport deep = delta_malliavin(p, PayoffSpec::call(-400.0, 20.0), Method::aj, 20000, 5);
    const double q = std::exp(-5.0);
    CHECK(std::abs(deep.estimate - want) < 4.0 * want * std::sqrt(q * (1 - q) / 20000.0));
}

TEST_CASE("digital far above the support")
{
    const DeltaProblem p = vasicek_problem();
    for (Method m : {Method::aj, Method::jt, Method::mixed}) {
        const EstimateReport r = delta_malliavin(p, PayoffSpec::digital(1e4), m, 5000, 6);
        CHECK(r.estimate == 0.0);
        CHECK(r.variance == 0.0);
    }
    CHECK(delta_fd(p, PayoffSpec::digital(1e4), 1.0, 5000, 6).estimate == 0.0);
}

TEST_CASE("estimators are deterministic and independent of the worker count")
{
    const DeltaProblem p = vasicek_problem();
    const PayoffSpec pay = PayoffSpec::digital(100.0, 10.0);
    const EstimateReport a = delta_malliavin(p, pay, Method::jt, 20000, 9, 1);
    const EstimateReport b = delta_malliavin(p, pay, Method::jt, 20000, 9, 3);
    const EstimateReport c = delta_malliavin(p, pay, Method::jt, 20000, 9, 1);
    CHECK(a.estimate == b.estimate);
    CHECK(a.variance == b.variance);
    CHECK(a.estimate == c.estimate);
    CHECK(delta_fd(p, pay, 1.0, 20000, 9, 1).estimate == delta_fd(p, pay, 1.0, 20000, 9, 4).estimate);
    CHECK(delta_malliavin(p, pay, Method::jt, 20000, 10, 1).estimate != a.estimate);
}

TEST_CASE("scaling the payoff scales the estimate")
{
    const DeltaProblem p = vasicek_problem();
    PayoffSpec base = PayoffSpec::call(100.0, 10.0);
    PayoffSpec scaled = base;
    scaled.scale = -2.5;
    for (Method m : {Method::aj, Method::jt}) {
        const EstimateReport a = delta_malliavin(p, base, m, 10000, 11);
        const EstimateReport b = delta_malliavin(p, scaled, m, 10000, 11);
        CHECK(b.estimate == doctest::Approx(-2.5 * a.estimate).epsilon(1e-13));
        CHECK(b.standard_error == doctest::Approx(2.5 * a.standard_error).epsilon(1e-12));
    }
    const EstimateReport f1 = delta_fd(p, base, 1.0, 10000, 11);
    const EstimateReport f2 = delta_fd(p, scaled, 1.0, 10000, 11);
    CHECK(f2.estimate == doctest::Approx(-2.5 * f1.estimate).epsilon(1e-13));
}

TEST_CASE("shared paths across payoffs")
{
    const DeltaProblem p = vasicek_problem();
    const std::vector<PayoffSpec> pays{PayoffSpec::call(100.0, 8.0), PayoffSpec::digital(100.0, 8.0)};
    const auto both = delta_malliavin(p, pays, Method::aj, 5000, 12);
    CHECK(both[0].estimate == delta_malliavin(p, pays[0], Method::aj, 5000, 12).estimate);
    CHECK(both[1].estimate == delta_malliavin(p, pays[1], Method::aj, 5000, 12).estimate);
}

TEST_CASE("localization and the digital variance")
{
    const DeltaProblem p = vasicek_problem();
    // The ramp costs about phi_S(K) e^{-2rT} / (2w) pathwise. That beats full
    // integration by parts for the jump-time weight but not for the much
    // smaller amplitude weight.
    const EstimateReport jt5 = delta_malliavin(p, PayoffSpec::digital(100.0, 5.0), Method::jt, 100000, 13);
    const EstimateReport jt0 = delta_malliavin(p, PayoffSpec::digital(100.0, 0.0), Method::jt, 100000, 13);
    CHECK(jt5.variance < jt0.variance);
    CHECK(std::abs(jt5.estimate - jt0.estimate) < 3.0 * std::hypot(jt5.standard_error, jt0.standard_error));

    const EstimateReport aj5 = delta_malliavin(p, PayoffSpec::digital(100.0, 5.0), Method::aj, 100000, 13);
    const EstimateReport aj0 = delta_malliavin(p, PayoffSpec::digital(100.0, 0.0), Method::aj, 100000, 13);
    CHECK(aj5.variance > aj0.variance);
    CHECK(std::abs(aj5.estimate - aj0.estimate) < 3.0 * std::hypot(aj5.standard_error, aj0.standard_error));
}

TEST_CASE("methods without a nondegenerate direction are refused")
{
    const DeltaProblem g = geometric_problem();
    CHECK_THROWS_AS(delta_malliavin(g, PayoffSpec::call(100.0), Method::jt, 100, 1), NotApplicableError);
    CHECK_NOTHROW(delta_malliavin(g, PayoffSpec::call(100.0), Method::mixed, 100, 1));
    CHECK_THROWS_AS(delta_malliavin(g, PayoffSpec::call(100.0), Method::fd, 100, 1), ParameterError);
    CHECK_THROWS_AS(delta_fd(g, PayoffSpec::call(100.0), 0.0, 100, 1), ParameterError);
}

TEST_CASE("degenerate geometric paths are counted and flagged")
{
    // sigma = 2 with uniform amplitudes on (-1, 1): 1 + sigma a crosses zero at a = -1/2
    DeltaProblem p = geometric_problem(2.0);
    p.amplitude_law = NoiseSpec::uniform(-1.0, 1.0);
    const EstimateReport r = delta_malliavin(p, PayoffSpec::call(100.0, 20.0), Method::aj, 2000, 14);
    CHECK(r.paths + r.degenerate_paths == 2000);
    CHECK(std::isfinite(r.estimate));
}

TEST_CASE("all methods agree on the Vasicek call")
{
    const DeltaProblem p = vasicek_problem();
    const PayoffSpec pay = PayoffSpec::call(100.0, 8.0);
    const std::size_t m = 100000;
    const EstimateReport aj = delta_malliavin(p, pay, Method::aj, m, 15);
    const EstimateReport jt = delta_malliavin(p, pay, Method::jt, m, 16);
    const EstimateReport mx = delta_malliavin(p, pay, Method::mixed, m, 17);
    const EstimateReport fd = delta_fd(p, pay, 1.0, m, 18);
    const std::vector<EstimateReport> all{aj, jt, mx, fd};
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            const double se = std::hypot(all[i].standard_error, all[j].standard_error);
            CHECK(std::abs(all[i].estimate - all[j].estimate) < 4.0 * se);
        }
    }
    CHECK(aj.estimate > 0.0);
}

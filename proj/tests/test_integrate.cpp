#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rkforge/integrate.hpp"

using namespace rkforge;

namespace {

IvpProblem<double> constant_rhs() {
    IvpProblem<double> p;
    p.dim = 1;
    p.t0 = 0;
    p.y0 = {0.0};
    p.rhs = [](const double&, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    p.exact = [](const double& t, std::span<double> out) { out[0] = t; };
    return p;
}

IvpProblem<double> exponential() {
    IvpProblem<double> p;
    p.dim = 1;
    p.t0 = 0;
    p.y0 = {1.0};
    p.rhs = [](const double&, std::span<const double> y, std::span<double> out) { out[0] = y[0]; };
    p.exact = [](const double& t, std::span<double> out) { out[0] = std::exp(t); };
    return p;
}

}  // namespace

TEST_CASE("Euler step on a constant slope", "[integrate]") {
    const auto tab = euler_method<double>();
    const auto prob = constant_rhs();
    RkScratch<double> scr;
    std::vector<double> out(1);
    rk_step(tab, prob, 0.0, std::span<const double>(prob.y0), 0.5, std::span<double>(out), scr);
    CHECK(out[0] == 0.5);
}

TEST_CASE("one RK4 step reproduces the degree-4 Taylor polynomial of exp", "[integrate]") {
    const auto tab = rk4_method<double>();
    const auto prob = exponential();
    RkScratch<double> scr;
    std::vector<double> out(1);
    const double h = 0.1;
    rk_step(tab, prob, 0.0, std::span<const double>(prob.y0), h, std::span<double>(out), scr);
    double expected = 0;
    double term = 1;
    for (int k = 0; k <= 4; ++k) {
        expected += term;
        term *= h / (k + 1);
    }
    CHECK(std::fabs(out[0] - expected) < 1e-16);
}

TEST_CASE("Heun integrates a linear-in-time slope exactly via c-shifts", "[integrate]") {
    IvpProblem<double> prob;
    prob.dim = 1;
    prob.t0 = 0;
    prob.y0 = {0.0};
    prob.rhs = [](const double& t, std::span<const double>, std::span<double> out) { out[0] = t; };
    const auto tab = heun_method<double>();
    RkScratch<double> scr;
    std::vector<double> out(1);
    const double h = 0.25;
    rk_step(tab, prob, 0.0, std::span<const double>(prob.y0), h, std::span<double>(out), scr);
    CHECK(out[0] == h * h / 2);
}

TEST_CASE("fixed-step integration counts stages exactly", "[integrate]") {
    const auto tab = rk4_method<double>();
    const auto prob = exponential();
    const auto res = integrate_fixed(tab, prob, 0.125, 2.0);
    CHECK(res.fevals == 4 * 16);
    const auto zero = integrate_fixed(tab, prob, 0.125, 0.0);
    CHECK(zero.fevals == 0);
    CHECK(zero.y == prob.y0);
    CHECK_THROWS_AS(integrate_fixed(tab, prob, 0.3, 1.0), std::invalid_argument);
}

TEST_CASE("non-finite right-hand sides raise an integration failure", "[integrate]") {
    IvpProblem<double> prob;
    prob.dim = 1;
    prob.t0 = 0;
    prob.y0 = {1.0};
    prob.rhs = [](const double&, std::span<const double> y, std::span<double> out) {
        out[0] = std::log(y[0] - 2.0);  // NaN for y < 2
    };
    const auto tab = euler_method<double>();
    try {
        integrate_fixed(tab, prob, 0.5, 1.0);
        FAIL("expected IntegrationFailure");
    } catch (const IntegrationFailure& e) {
        CHECK(e.state().size() == 1);
    }
}

TEST_CASE("the Fehlberg problem matches its closed form", "[integrate]") {
    const auto prob = fehlberg_problem<double>();
    std::vector<double> y(2);
    prob.exact(0.0, std::span<double>(y));
    CHECK(std::fabs(y[0] - std::exp(1.0)) < 1e-15);
    CHECK(y[1] == 1.0);

    prob.exact(std::sqrt(M_PI), std::span<double>(y));
    CHECK(std::fabs(y[0] - std::exp(-1.0)) < 1e-14);
    CHECK(std::fabs(y[1] - 1.0) < 1e-14);

    std::vector<double> f(2);
    prob.rhs(0.0, std::span<const double>(prob.y0), std::span<double>(f));
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
}

TEST_CASE("the exact Fehlberg solution satisfies the ODE along [0,5]", "[integrate]") {
    const auto prob = fehlberg_problem<double>();
    const double h = 1e-6;
    for (double t = 0.25; t <= 5.0; t += 0.25) {
        std::vector<double> yp(2), ym(2), yc(2), f(2);
        prob.exact(t + h, std::span<double>(yp));
        prob.exact(t - h, std::span<double>(ym));
        prob.exact(t, std::span<double>(yc));
        prob.rhs(t, std::span<const double>(yc), std::span<double>(f));
        for (int d = 0; d < 2; ++d) {
            const double fd = (yp[static_cast<std::size_t>(d)] - ym[static_cast<std::size_t>(d)]) / (2 * h);
            REQUIRE(std::fabs(fd - f[static_cast<std::size_t>(d)]) <
                    1e-5 * (1 + std::fabs(f[static_cast<std::size_t>(d)])));
        }
    }
}

TEST_CASE("empirical order recovers 4, 2, 1 on the Fehlberg problem", "[integrate]") {
    const auto prob = fehlberg_problem<double>();
    std::vector<double> hs;
    for (int k = 9; k <= 12; ++k) hs.push_back(5.0 / std::ldexp(1.0, k));

    CHECK(std::fabs(empirical_order(rk4_method<double>(), prob, 5.0,
                                    std::span<const double>(hs)) - 4.0) < 0.1);
    CHECK(std::fabs(empirical_order(heun_method<double>(), prob, 5.0,
                                    std::span<const double>(hs)) - 2.0) < 0.1);

    const auto expo = exponential();
    std::vector<double> hs2;
    for (int k = 6; k <= 10; ++k) hs2.push_back(2.0 / std::ldexp(1.0, k));
    CHECK(std::fabs(empirical_order(euler_method<double>(), expo, 2.0,
                                    std::span<const double>(hs2)) - 1.0) < 0.1);
}

TEST_CASE("empirical order refuses noise-floor samples", "[integrate]") {
    const auto prob = constant_rhs();  // Euler is exact here
    std::vector<double> hs = {0.5, 0.25, 0.125, 0.0625};
    CHECK_THROWS_AS(empirical_order(euler_method<double>(), prob, 1.0,
                                    std::span<const double>(hs)),
                    InsufficientDataError);
}

TEST_CASE("an order-p method integrates polynomial slopes of degree p-1 exactly",
          "[integrate]") {
    IvpProblem<double> prob;
    prob.dim = 1;
    prob.t0 = 0;
    prob.y0 = {3.0};
    prob.rhs = [](const double& t, std::span<const double>, std::span<double> out) {
        out[0] = ((4 * t - 6) * t + 2) * t + 1;  // degree 3
    };
    const auto res = integrate_fixed(rk4_method<double>(), prob, 0.25, 2.0);
    // integral of 4t^3 - 6t^2 + 2t + 1 over [0, 2] is 6.
    CHECK(std::fabs(res.y[0] - 9.0) < 1e-13);
}

TEST_CASE("check_order on the classical method", "[integrate]") {
    const auto rk4 = rk4_method<Rational>();
    const auto pass = check_order(rk4, 4, 0.0);
    CHECK(pass.pass);
    for (double d : pass.max_defect) CHECK(d == 0.0);
    CHECK(pass.cs_one);
    CHECK(pass.b2_defined);
    CHECK_FALSE(pass.b2_zero);

    const auto fail = check_order(rk4, 5, 0.0);
    CHECK_FALSE(fail.pass);
    // Count the violated conditions: 9 of the 17 at orders <= 5.
    const EvaluationProgram prog(5, 4, false);
    Workspace<Rational> ws(prog);
    const auto params = rk4.parameters();
    int violated = 0;
    for (const auto& d : condition_values(prog, std::span<const Rational>(params), ws))
        if (d != Rational(0)) ++violated;
    CHECK(violated == 9);
}

TEST_CASE("check_order notes the structural barrier when s < p", "[integrate]") {
    const auto rep = check_order(rk4_method<Rational>(), 5, 0.0);
    CHECK(rep.structurally_infeasible);
    CHECK_FALSE(check_order(rk4_method<Rational>(), 4, 0.0).structurally_infeasible);
}

TEST_CASE("midpoint simplifying-assumption flags", "[integrate]") {
    const auto rep = check_order(midpoint_method<Rational>(), 2, 0.0);
    CHECK(rep.pass);
    CHECK_FALSE(rep.b2_zero);  // b2 = 1
    CHECK_FALSE(rep.cs_one);   // c2 = 1/2
}

TEST_CASE("principal error coefficients on pinned methods", "[integrate]") {
    {
        const auto coeffs = principal_error_coefficients(midpoint_method<Rational>(), 2, 0.0);
        REQUIRE(coeffs.size() == 2);
        // {-1/24, -1/6} up to ordering; 2-norm sqrt(17/576).
        Rational norm2 = 0;
        bool saw_small = false, saw_big = false;
        for (const auto& c : coeffs) {
            norm2 += c * c;
            saw_small = saw_small || c == Rational(-1, 24);
            saw_big = saw_big || c == Rational(-1, 6);
        }
        CHECK(saw_small);
        CHECK(saw_big);
        CHECK(norm2 == Rational(17, 576));
    }
    {
        const auto coeffs = principal_error_coefficients(rk4_method<Rational>(), 4, 0.0);
        Rational norm2 = 0;
        for (const auto& c : coeffs) norm2 += c * c;
        CHECK(std::fabs(std::sqrt(nearest_double(norm2)) - 1.450e-2) < 5e-6);
    }
    {
        // An order-(p+1) method has all-zero order-p error coefficients.
        const auto coeffs = principal_error_coefficients(rk4_method<Rational>(), 3, 0.0);
        for (const auto& c : coeffs) CHECK(c == Rational(0));
    }
    CHECK_THROWS_AS(principal_error_coefficients(rk4_method<Rational>(), 5, 0.0), OrderCheckError);
}

TEST_CASE("error coefficient norm matches the error function", "[integrate]") {
    const auto heun = heun_method<double>();
    const auto coeffs = principal_error_coefficients(heun, 2, 1e-12);
    double norm2 = 0;
    for (double c : coeffs) norm2 += c * c;
    const double via_e = error_norm_sqrt(heun, 2);
    CHECK(std::fabs(std::sqrt(norm2) - via_e) < 1e-12 * via_e);
}

TEST_CASE("work-precision records cover the grid and clamp exact runs", "[integrate]") {
    const auto prob = constant_rhs();
    std::vector<Tableau<double>> tabs = {euler_method<double>()};
    std::vector<double> grid = {0.5, 0.25};
    const auto recs = work_precision(std::span<const Tableau<double>>(tabs), prob, 1.0,
                                     std::span<const double>(grid));
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].fevals == 2);
    CHECK(recs[1].fevals == 4);
    for (const auto& r : recs) {
        CHECK(r.error == 0.0);
        CHECK(r.digits == 15.0);  // binary64 digit cap
    }
    const auto csv = work_precision_csv(recs);
    CHECK(csv.rfind("method,h,fevals,error,digits\n", 0) == 0);
}

TEST_CASE("integration failures become infinite-error records", "[integrate]") {
    IvpProblem<double> prob;
    prob.dim = 1;
    prob.t0 = 0;
    prob.y0 = {0.5};
    prob.rhs = [](const double&, std::span<const double> y, std::span<double> out) {
        out[0] = std::log(y[0] - 1.0);
    };
    prob.exact = [](const double& t, std::span<double> out) { out[0] = t; };
    std::vector<Tableau<double>> tabs = {euler_method<double>()};
    std::vector<double> grid = {0.5};
    const auto recs = work_precision(std::span<const Tableau<double>>(tabs), prob, 1.0,
                                     std::span<const double>(grid));
    REQUIRE(recs.size() == 1);
    CHECK(std::isinf(recs[0].error));
}

TEST_CASE("extrapolated Euler carries 46 stages into the benchmark", "[integrate]") {
    const auto tab = extrapolated_euler<double>(10);
    const auto prob = fehlberg_problem<double>();
    const auto res = integrate_fixed(tab, prob, 5.0 / 256, 5.0);
    CHECK(res.fevals == 46 * 256);
}

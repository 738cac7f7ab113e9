#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rkforge/decimal.hpp"
#include "rkforge/elementary.hpp"

using namespace rkforge;

namespace {
std::mt19937_64 rng(404);
}

TEST_CASE("expansion exp/log/sin/cos agree with binary64", "[elementary]") {
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 300; ++i) {
        const double x = u(rng);
        const Expansion<2> xe(x);
        CHECK(std::fabs(exp(xe).to_double() - std::exp(x)) <= 2e-15 * std::exp(x));
        CHECK(std::fabs(sin(xe).to_double() - std::sin(x)) <= 4e-16 * (1 + std::fabs(std::sin(x))));
        CHECK(std::fabs(cos(xe).to_double() - std::cos(x)) <= 4e-16 * (1 + std::fabs(std::cos(x))));
        if (x > 0) CHECK(std::fabs(log(xe).to_double() - std::log(x)) <= 4e-16 * (1 + std::fabs(std::log(x))));
    }
}

TEST_CASE("identities hold to near working precision at K=4", "[elementary]") {
    using E = Expansion<4>;
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    const Rational tol = Rational(1) / (BigInt(1) << (53 * 4 - 14));
    for (int i = 0; i < 50; ++i) {
        const double x = u(rng);
        const E xe = E(x) + E(std::ldexp(u(rng), -55));

        const Rational pyth = expansion_to_rational(sin(xe) * sin(xe) + cos(xe) * cos(xe)) - 1;
        REQUIRE(boost::multiprecision::abs(pyth) <= tol);

        const E back = log(exp(xe));
        const Rational round_trip =
            expansion_to_rational(back) - expansion_to_rational(xe);
        REQUIRE(boost::multiprecision::abs(round_trip) <= tol * Rational(32));
    }
}

TEST_CASE("K=2 and K=4 elementaries agree to at least 100 bits", "[elementary]") {
    std::uniform_real_distribution<double> u(0.1, 8.0);
    for (int i = 0; i < 40; ++i) {
        const double x = u(rng);
        const auto e2 = expansion_to_rational(exp(Expansion<2>(x)));
        const auto e4 = expansion_to_rational(exp(Expansion<4>(x)));
        REQUIRE(boost::multiprecision::abs(e2 - e4) <= e4 / (BigInt(1) << 100));
        const auto c2 = expansion_to_rational(cos(Expansion<2>(x)));
        const auto c4 = expansion_to_rational(cos(Expansion<4>(x)));
        REQUIRE(boost::multiprecision::abs(c2 - c4) <= Rational(1) / (BigInt(1) << 100));
    }
}

TEST_CASE("the internal constants are consistent", "[elementary]") {
    // sin at the stored pi/2 is 1 to full precision; exp(ln 2) = 2.
    const auto s = sin(detail::pi_half_expansion<4>());
    const Rational ds = expansion_to_rational(s) - 1;
    REQUIRE(boost::multiprecision::abs(ds) <= Rational(1) / (BigInt(1) << 200));

    const auto two = exp(detail::ln2_expansion<4>());
    const Rational dt = expansion_to_rational(two) - 2;
    REQUIRE(boost::multiprecision::abs(dt) <= Rational(1) / (BigInt(1) << 200));
}

TEST_CASE("domain edges propagate error states", "[elementary]") {
    CHECK_FALSE(log(Expansion<2>(-1.0)).is_finite());
    CHECK(exp(Expansion<2>(0.0)).to_double() == 1.0);
    CHECK(cos(Expansion<2>(0.0)).to_double() == 1.0);
    CHECK(sin(Expansion<2>(0.0)).to_double() == 0.0);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rkforge/decimal.hpp"
#include "rkforge/expansion.hpp"
#include "rkforge/rational.hpp"

using namespace rkforge;

namespace {

std::mt19937_64 rng(12345);

double random_double(double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> e(-20, 20);
    return std::ldexp(u(rng) * scale, e(rng));
}

template <int K>
Expansion<K> random_expansion() {
    std::array<double, 2 * K> buf{};
    double mag = random_double();
    for (int i = 0; i < K; ++i) {
        buf[static_cast<std::size_t>(i)] = mag;
        std::uniform_real_distribution<double> u(0.25, 0.99);
        mag *= std::ldexp(u(rng), -53);
    }
    return Expansion<K>::renormalize(std::span<double>(buf.data(), static_cast<std::size_t>(K)));
}

template <int K>
bool valid_expansion(const Expansion<K>& x) {
    for (int i = 0; i + 1 < K; ++i) {
        const double a = x.limb(i), b = x.limb(i + 1);
        if (a == 0.0 && b != 0.0) return false;  // zeros only as a suffix
        if (a + b != a && b != 0.0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("two_sum pinned cases", "[expansion]") {
    auto r = two_sum(1.0, 0x1.0p-60);
    CHECK(r.s == 1.0);
    CHECK(r.e == 0x1.0p-60);
    r = two_sum(3.5, 0.0);
    CHECK(r.s == 3.5);
    CHECK(r.e == 0.0);
}

TEST_CASE("two_prod pinned cases", "[expansion]") {
    const double a = 1.0 + 0x1.0p-27;
    const double b = 1.0 - 0x1.0p-27;
    const auto r = two_prod(a, b);
    CHECK(r.p == 1.0);
    CHECK(r.e == -0x1.0p-54);
    const auto id = two_prod(-17.25, 1.0);
    CHECK(id.p == -17.25);
    CHECK(id.e == 0.0);
}

TEST_CASE("error-free transforms are exact on random inputs", "[expansion]") {
    for (int i = 0; i < 20000; ++i) {
        const double a = random_double(), b = random_double();
        const auto s = two_sum(a, b);
        REQUIRE(exact_rational(s.s) + exact_rational(s.e) ==
                exact_rational(a) + exact_rational(b));
        const auto p = two_prod(a, b);
        REQUIRE(exact_rational(p.p) + exact_rational(p.e) ==
                exact_rational(a) * exact_rational(b));
        const auto q = two_prod_split(a, b);
        REQUIRE(q.p == p.p);
        REQUIRE(exact_rational(q.p) + exact_rational(q.e) ==
                exact_rational(a) * exact_rational(b));
    }
}

TEST_CASE("double-double addition follows the error-free recipe", "[expansion]") {
    // (a + b eps) + (c + d eps) with a=1, b=2^-60, c=1, d=2^-61.
    const auto x = Expansion<2>::from_limbs({1.0, 0x1.0p-60});
    const auto y = Expansion<2>::from_limbs({1.0, 0x1.0p-61});
    const auto sum = x + y;
    CHECK(sum.limb(0) == 2.0);
    CHECK(sum.limb(1) == 3.0 * 0x1.0p-61);

    // The same value assembled literally: a+c, then b + d + round-off(a+c).
    const double head = 1.0 + 1.0;
    const double err = (0x1.0p-60 + 0x1.0p-61) + ((1.0 + 1.0) - head);
    CHECK(head == sum.limb(0));
    CHECK(err == sum.limb(1));
}

TEST_CASE("addition is exact when the true sum fits the limbs", "[expansion]") {
    const auto x = from_decimal<2>("1") + Expansion<2>(0x1.0p-80);
    const auto y = from_decimal<2>("1") - Expansion<2>(0x1.0p-80);
    const auto sum = x + y;
    CHECK(sum.limb(0) == 2.0);
    CHECK(sum.limb(1) == 0.0);
}

TEST_CASE("additive identity and renormalization idempotence", "[expansion]") {
    for (int i = 0; i < 2000; ++i) {
        const auto x = random_expansion<3>();
        REQUIRE(valid_expansion(x));
        const auto y = x + Expansion<3>{};
        REQUIRE(y.limbs() == x.limbs());
        auto limbs = x.limbs();
        const auto renorm = Expansion<3>::renormalize(std::span<double>(limbs));
        REQUIRE(renorm.limbs() == x.limbs());
    }
}

TEMPLATE_TEST_CASE_SIG("arithmetic stays non-overlapping and accurate", "[expansion]",
                       ((int K), K), 2, 3, 4, 8) {
    const Rational bound = Rational(1) / (BigInt(1) << (53 * K - 4));
    for (int i = 0; i < 500; ++i) {
        const auto x = random_expansion<K>();
        const auto y = random_expansion<K>();
        const Rational xr = expansion_to_rational(x);
        const Rational yr = expansion_to_rational(y);

        const auto sum = x + y;
        REQUIRE(valid_expansion(sum));
        const Rational exact_sum = xr + yr;
        if (exact_sum != 0)
            REQUIRE(boost::multiprecision::abs(expansion_to_rational(sum) - exact_sum) <=
                    bound * boost::multiprecision::abs(exact_sum));

        const auto prod = x * y;
        REQUIRE(valid_expansion(prod));
        const Rational exact_prod = xr * yr;
        if (exact_prod != 0)
            REQUIRE(boost::multiprecision::abs(expansion_to_rational(prod) - exact_prod) <=
                    bound * boost::multiprecision::abs(exact_prod));

        if (yr != 0) {
            const auto quot = x / y;
            REQUIRE(valid_expansion(quot));
            const Rational exact_quot = xr / yr;
            if (exact_quot != 0)
                REQUIRE(boost::multiprecision::abs(expansion_to_rational(quot) - exact_quot) <=
                        Rational(8) * bound * boost::multiprecision::abs(exact_quot));
        }
    }
}

TEST_CASE("commutativity is exact; associativity holds to the last limb", "[expansion]") {
    constexpr int K = 2;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const auto a = Expansion<K>(u(rng)) + Expansion<K>(std::ldexp(u(rng), -55));
        const auto b = Expansion<K>(u(rng)) + Expansion<K>(std::ldexp(u(rng), -55));
        const auto c = Expansion<K>(u(rng)) + Expansion<K>(std::ldexp(u(rng), -55));

        CHECK((a + b).limbs() == (b + a).limbs());
        CHECK((a * b).limbs() == (b * a).limbs());

        // ((a+b)+c) vs (a+(b+c)) and a(b+c) vs ab+ac within 4 units of the
        // last limb of the result scale.
        const Rational tol = Rational(4) / (BigInt(1) << (53 * K));
        const auto assoc =
            expansion_to_rational((a + b) + c) - expansion_to_rational(a + (b + c));
        REQUIRE(boost::multiprecision::abs(assoc) <= tol * Rational(4));
        const auto distrib =
            expansion_to_rational(a * (b + c)) - expansion_to_rational(a * b + a * c);
        REQUIRE(boost::multiprecision::abs(distrib) <= tol * Rational(4));
    }
}

TEST_CASE("higher limb counts refine lower ones", "[expansion]") {
    auto agree_to_100_bits = [](const Rational& a, const Rational& b) {
        if (b == 0) return a == 0;
        return boost::multiprecision::abs(a - b) <= boost::multiprecision::abs(b) / (BigInt(1) << 100);
    };
    for (int i = 0; i < 300; ++i) {
        const auto x2 = random_expansion<2>();
        const auto y2 = random_expansion<2>();
        const auto x4 = convert<4, 2>(x2);
        const auto y4 = convert<4, 2>(y2);

        REQUIRE(agree_to_100_bits(expansion_to_rational(x2 * y2), expansion_to_rational(x4 * y4)));
        REQUIRE(agree_to_100_bits(expansion_to_rational(x2 + y2), expansion_to_rational(x4 + y4)));
        if (!y2.is_zero())
            REQUIRE(agree_to_100_bits(expansion_to_rational(x2 / y2),
                                      expansion_to_rational(x4 / y4)));
        REQUIRE(agree_to_100_bits(expansion_to_rational(sqrt(abs(x2))),
                                  expansion_to_rational(sqrt(abs(x4)))));
    }
}

TEST_CASE("sqrt squares back to its argument", "[expansion]") {
    for (int i = 0; i < 500; ++i) {
        const auto x = random_expansion<4>();
        const auto mag = abs(x);
        if (mag.is_zero()) continue;
        const auto r = sqrt(mag);
        const Rational err = expansion_to_rational(r * r) - expansion_to_rational(mag);
        const Rational bound =
            Rational(1) / (BigInt(1) << (53 * 4 - 6)) * expansion_to_rational(mag);
        REQUIRE(boost::multiprecision::abs(err) <= boost::multiprecision::abs(bound));
    }
    CHECK(sqrt(Expansion<2>(4.0)).limb(0) == 2.0);
    CHECK(sqrt(Expansion<2>{}).is_zero());
}

TEST_CASE("division by zero, sqrt of negatives, and overflow are error states", "[expansion]") {
    const auto one = Expansion<2>(1.0);
    CHECK_FALSE((one / Expansion<2>{}).is_finite());
    CHECK_FALSE(sqrt(Expansion<2>(-1.0)).is_finite());
    const auto huge = Expansion<2>(1e308);
    CHECK_FALSE((huge * huge).is_finite());
    CHECK(one.is_finite());
}

TEST_CASE("comparisons order by exact value", "[expansion]") {
    const auto a = Expansion<2>::from_limbs({1.0, 0x1.0p-60});
    const auto b = Expansion<2>::from_limbs({1.0, 0x1.0p-61});
    CHECK(a > b);
    CHECK(b < a);
    CHECK(a >= a);
    CHECK(a == a);
    CHECK(compare(a - a, Expansion<2>{}) == 0);
    CHECK(Expansion<2>(-1.0) < Expansion<2>(1.0));
}

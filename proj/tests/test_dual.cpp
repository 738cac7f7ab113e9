#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <random>

#include "oracles.hpp"
#include "rkforge/dual.hpp"

using namespace rkforge;

namespace {

// Sparse polynomial in up to 5 variables with integer coefficients, with a
// symbolic partial-derivative oracle.
struct Poly {
    struct Term {
        int coef;
        std::array<int, 5> exp;
    };
    std::vector<Term> terms;

    template <typename S>
    S eval(std::span<const S> x) const {
        S acc{};
        for (const auto& t : terms) {
            S prod = scalar_from_ratio<S>(t.coef, 1);
            for (int v = 0; v < 5; ++v)
                for (int e = 0; e < t.exp[static_cast<std::size_t>(v)]; ++e)
                    prod = prod * x[static_cast<std::size_t>(v)];
            acc += prod;
        }
        return acc;
    }

    Poly derivative(int var) const {
        Poly d;
        for (auto t : terms) {
            const int e = t.exp[static_cast<std::size_t>(var)];
            if (e == 0) continue;
            t.coef *= e;
            t.exp[static_cast<std::size_t>(var)] = e - 1;
            d.terms.push_back(t);
        }
        return d;
    }
};

Poly random_poly(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nterms(1, 6), coef(-5, 5), deg(0, 2);
    Poly p;
    const int n = nterms(rng);
    for (int t = 0; t < n; ++t) {
        Poly::Term term{coef(rng), {}};
        int total = 0;
        for (int v = 0; v < 5 && total < 4; ++v) {
            term.exp[static_cast<std::size_t>(v)] = deg(rng);
            total += term.exp[static_cast<std::size_t>(v)];
        }
        p.terms.push_back(term);
    }
    return p;
}

}  // namespace

TEST_CASE("dual square of 3 + delta", "[dual]") {
    const Dual<double> x(3.0, 1.0);
    const auto y = x * x;
    CHECK(y.re == 9.0);
    CHECK(y.du == 6.0);
}

TEST_CASE("scalars embed with zero dual part", "[dual]") {
    const Dual<double> a(4.0), c(-2.5);
    const auto p = a * c;
    CHECK(p.re == -10.0);
    CHECK(p.du == 0.0);
}

TEST_CASE("product matches the symbolic expansion exactly over rationals", "[dual]") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 50; ++i) {
        const Dual<Rational> x(oracle::random_rational(rng, 9, 7), oracle::random_rational(rng, 9, 7));
        const Dual<Rational> y(oracle::random_rational(rng, 9, 7), oracle::random_rational(rng, 9, 7));
        const auto p = x * y;
        CHECK(p.re == x.re * y.re);
        CHECK(p.du == x.re * y.du + x.du * y.re);
    }
}

TEST_CASE("division inverts multiplication", "[dual]") {
    std::mt19937_64 rng(100);
    for (int i = 0; i < 50; ++i) {
        Dual<Rational> x(oracle::random_rational(rng, 9, 7), oracle::random_rational(rng, 9, 7));
        Dual<Rational> y(oracle::random_rational(rng, 9, 7), oracle::random_rational(rng, 9, 7));
        if (y.re == 0) continue;
        const auto q = x / y;
        const auto back = q * y;
        CHECK(back.re == x.re);
        CHECK(back.du == x.du);
    }
}

TEST_CASE("polynomials over duals carry exact directional derivatives", "[dual]") {
    // p(x + y delta) = p(x) + (grad p(x) . y) delta, checked symbolically.
    std::mt19937_64 rng(4242);
    for (int rep = 0; rep < 100; ++rep) {
        const Poly p = random_poly(rng);
        std::vector<Rational> x(5), y(5);
        for (int v = 0; v < 5; ++v) {
            x[static_cast<std::size_t>(v)] = oracle::random_rational(rng, 5, 4);
            y[static_cast<std::size_t>(v)] = oracle::random_rational(rng, 5, 4);
        }
        std::vector<Dual<Rational>> seeded(5);
        for (int v = 0; v < 5; ++v)
            seeded[static_cast<std::size_t>(v)] =
                Dual<Rational>(x[static_cast<std::size_t>(v)], y[static_cast<std::size_t>(v)]);
        const auto val = p.eval(std::span<const Dual<Rational>>(seeded));

        CHECK(val.re == p.eval(std::span<const Rational>(x)));
        Rational dir{};
        for (int v = 0; v < 5; ++v)
            dir += p.derivative(v).eval(std::span<const Rational>(x)) *
                   y[static_cast<std::size_t>(v)];
        CHECK(val.du == dir);
    }
}

TEST_CASE("gradient helper on a bilinear form", "[dual]") {
    const std::vector<double> x = {2.0, 3.0};
    std::vector<double> g(2);
    auto f = [](std::span<const Dual<double>> v) { return v[0] * v[1]; };
    gradient<double>(f, std::span<const double>(x), std::span<double>(g));
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 2.0);
}

TEST_CASE("gradient helper is linear and keeps real parts shared", "[dual]") {
    std::mt19937_64 rng(7);
    const Poly p1 = random_poly(rng), p2 = random_poly(rng);
    std::vector<Rational> x(5);
    for (auto& v : x) v = oracle::random_rational(rng, 5, 4);

    auto gf = [&](const Poly& p) {
        std::vector<Rational> g(5);
        auto f = [&](std::span<const Dual<Rational>> v) { return p.eval(v); };
        gradient<Rational>(f, std::span<const Rational>(x), std::span<Rational>(g));
        return g;
    };
    Poly combined;
    for (auto t : p1.terms) {
        t.coef *= 3;
        combined.terms.push_back(t);
    }
    for (auto t : p2.terms) {
        t.coef *= -2;
        combined.terms.push_back(t);
    }
    const auto g1 = gf(p1), g2 = gf(p2), gc = gf(combined);
    for (int v = 0; v < 5; ++v)
        CHECK(gc[static_cast<std::size_t>(v)] ==
              Rational(3) * g1[static_cast<std::size_t>(v)] -
                  Rational(2) * g2[static_cast<std::size_t>(v)]);
}

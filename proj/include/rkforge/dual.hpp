#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "rkforge/scalar.hpp"

namespace rkforge {

/**
 * First-order dual number a + b·δ with δ² = 0, over any supported scalar.
 * Arithmetic carries exact first derivatives through polynomial programs.
 */
template <typename S>
struct Dual {
    S re{};
    S du{};

    Dual() = default;
    Dual(S real) : re(std::move(real)), du{} {}
    Dual(S real, S dual) : re(std::move(real)), du(std::move(dual)) {}

    friend Dual operator-(const Dual& x) { return {-x.re, -x.du}; }

    friend Dual operator+(const Dual& x, const Dual& y) { return {x.re + y.re, x.du + y.du}; }
    friend Dual operator-(const Dual& x, const Dual& y) { return {x.re - y.re, x.du - y.du}; }
    friend Dual operator*(const Dual& x, const Dual& y) {
        return {x.re * y.re, x.re * y.du + x.du * y.re};
    }
    /// (a+bδ)/(c+dδ) = a/c + (bc − ad)/c² δ; the objectives never divide,
    /// kept for oracle generality.
    friend Dual operator/(const Dual& x, const Dual& y) {
        const S q = x.re / y.re;
        return {q, (x.du - q * y.du) / y.re};
    }

    Dual& operator+=(const Dual& y) { return *this = *this + y; }
    Dual& operator-=(const Dual& y) { return *this = *this - y; }
    Dual& operator*=(const Dual& y) { return *this = *this * y; }
    Dual& operator/=(const Dual& y) { return *this = *this / y; }

    friend Dual operator*(const S& a, const Dual& y) { return {a * y.re, a * y.du}; }
    friend Dual operator*(const Dual& x, const S& a) { return {x.re * a, x.du * a}; }
    friend Dual operator+(const S& a, const Dual& y) { return {a + y.re, y.du}; }
    friend Dual operator+(const Dual& x, const S& a) { return {x.re + a, x.du}; }
    friend Dual operator-(const S& a, const Dual& y) { return {a - y.re, -y.du}; }
    friend Dual operator-(const Dual& x, const S& a) { return {x.re - a, x.du}; }
};

template <typename S>
struct ScalarTraits<Dual<S>> {
    static constexpr int kLimbs = ScalarTraits<S>::kLimbs;
    static constexpr bool kExact = ScalarTraits<S>::kExact;
    static Dual<S> from_ratio(std::int64_t num, std::int64_t den) {
        return Dual<S>(ScalarTraits<S>::from_ratio(num, den));
    }
    static double to_double(const Dual<S>& x) { return ScalarTraits<S>::to_double(x.re); }
    static bool finite(const Dual<S>& x) {
        return ScalarTraits<S>::finite(x.re) && ScalarTraits<S>::finite(x.du);
    }
    static double epsilon() { return ScalarTraits<S>::epsilon(); }
};

/**
 * Gradient of a polynomial program by seeding one dual direction per input:
 * out[i] = dual part of f(x + e_i δ).  f takes a span of duals and returns
 * a dual.
 */
template <typename S, typename F>
void gradient(F&& f, std::span<const S> x, std::span<S> out) {
    if (out.size() != x.size()) throw std::invalid_argument("gradient: dimension mismatch");
    std::vector<Dual<S>> seeded(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) seeded[i] = Dual<S>(x[i]);
    for (std::size_t i = 0; i < x.size(); ++i) {
        seeded[i].du = scalar_from_ratio<S>(1, 1);
        out[i] = f(std::span<const Dual<S>>(seeded)).du;
        seeded[i].du = S{};
    }
}

}  // namespace rkforge

#pragma once

#include <cmath>

#include "rkforge/decimal.hpp"
#include "rkforge/expansion.hpp"

// exp/log/sin/cos over expansions, enough to drive transcendental test
// problems and their exact solutions at extended precision.  Constants come
// from exact rational series evaluated once per process, so no decimal
// literals need to be trusted.

namespace rkforge {

namespace detail {

// atan(1/x) = sum (-1)^k / ((2k+1) x^(2k+1)), summed exactly.
inline Rational atan_inv(int x, int terms) {
    Rational sum = 0;
    BigInt xpow = x;
    const BigInt xsq = BigInt(x) * x;
    for (int k = 0; k < terms; ++k) {
        const Rational term = Rational(1) / Rational(BigInt(2 * k + 1) * xpow);
        sum += (k % 2 == 0) ? term : -term;
        xpow *= xsq;
    }
    return sum;
}

// Machin: pi/2 = 8 atan(1/5) - 2 atan(1/239), good to ~165 digits here.
inline const Rational& pi_half_rational() {
    static const Rational v = 8 * atan_inv(5, 125) - 2 * atan_inv(239, 40);
    return v;
}

// ln 2 = 2 atanh(1/3) = sum 2 / ((2k+1) 3^(2k+1)).
inline const Rational& ln2_rational() {
    static const Rational v = [] {
        Rational sum = 0;
        BigInt pow3 = 3;
        for (int k = 0; k < 180; ++k) {
            sum += Rational(2) / Rational(BigInt(2 * k + 1) * pow3);
            pow3 *= 9;
        }
        return sum;
    }();
    return v;
}

template <int K>
const Expansion<K>& pi_half_expansion() {
    static const Expansion<K> v = rational_to_expansion<K>(pi_half_rational());
    return v;
}

template <int K>
const Expansion<K>& ln2_expansion() {
    static const Expansion<K> v = rational_to_expansion<K>(ln2_rational());
    return v;
}

template <int K>
constexpr int log_newton_iterations() {
    return K <= 2 ? 2 : (K <= 4 ? 3 : 4);
}

}  // namespace detail

template <int K>
Expansion<K> exp(const Expansion<K>& x) {
    using E = Expansion<K>;
    const double xd = x.to_double();
    if (!std::isfinite(xd) || xd > 709.0 || xd < -745.0)
        return E(std::exp(xd));  // overflow/underflow handled by binary64
    const double md = std::nearbyint(xd / 0.6931471805599453);
    const int m = static_cast<int>(md);
    E r = x - E(md) * detail::ln2_expansion<K>();

    constexpr int kScale = 5;  // |r| <= ln2/2 becomes <= 0.011 after scaling
    r = r.ldexp_pow2(-kScale);

    E sum = E(1.0) + r;
    E term = r;
    const double cutoff = std::ldexp(1.0, -53 * (K + 1));
    for (int n = 2; n < 200; ++n) {
        term = term * r / E(static_cast<double>(n));
        sum += term;
        if (std::fabs(term.to_double()) <= cutoff * std::fabs(sum.to_double())) break;
    }
    for (int i = 0; i < kScale; ++i) sum = sum * sum;
    return sum.ldexp_pow2(m);
}

template <int K>
Expansion<K> log(const Expansion<K>& y) {
    using E = Expansion<K>;
    const double yd = y.to_double();
    if (!(yd > 0.0)) return E(std::log(yd));  // domain error propagates as NaN/-inf
    // Newton on exp: l <- l + (y·exp(-l) - 1), doubling digits per pass.
    E l(std::log(yd));
    const E one(1.0);
    for (int it = 0; it < detail::log_newton_iterations<K>(); ++it)
        l = l + (y * exp(-l) - one);
    return l;
}

namespace detail {

// Taylor kernels on |r| <= pi/4 + reduction slop.
template <int K>
Expansion<K> sin_kernel(const Expansion<K>& r) {
    using E = Expansion<K>;
    const E r2 = r * r;
    E term = r;
    E sum = r;
    const double cutoff = std::ldexp(1.0, -53 * (K + 1));
    for (int k = 1; k < 120; ++k) {
        term = -(term * r2) / E(static_cast<double>(2 * k) * (2 * k + 1));
        sum += term;
        if (std::fabs(term.to_double()) <= cutoff) break;
    }
    return sum;
}

template <int K>
Expansion<K> cos_kernel(const Expansion<K>& r) {
    using E = Expansion<K>;
    const E r2 = r * r;
    E term(1.0);
    E sum(1.0);
    const double cutoff = std::ldexp(1.0, -53 * (K + 1));
    for (int k = 1; k < 120; ++k) {
        term = -(term * r2) / E(static_cast<double>(2 * k - 1) * (2 * k));
        sum += term;
        if (std::fabs(term.to_double()) <= cutoff) break;
    }
    return sum;
}

template <int K>
void sin_cos_reduce(const Expansion<K>& x, Expansion<K>& r, int& quadrant) {
    const double qd = std::nearbyint(x.to_double() / 1.5707963267948966);
    r = x - Expansion<K>(qd) * pi_half_expansion<K>();
    const long q = static_cast<long>(qd);
    quadrant = static_cast<int>(((q % 4) + 4) % 4);
}

}  // namespace detail

template <int K>
Expansion<K> sin(const Expansion<K>& x) {
    if (!x.is_finite()) return Expansion<K>(std::nan(""));
    Expansion<K> r;
    int quad = 0;
    detail::sin_cos_reduce(x, r, quad);
    switch (quad) {
        case 0: return detail::sin_kernel(r);
        case 1: return detail::cos_kernel(r);
        case 2: return -detail::sin_kernel(r);
        default: return -detail::cos_kernel(r);
    }
}

template <int K>
Expansion<K> cos(const Expansion<K>& x) {
    if (!x.is_finite()) return Expansion<K>(std::nan(""));
    Expansion<K> r;
    int quad = 0;
    detail::sin_cos_reduce(x, r, quad);
    switch (quad) {
        case 0: return detail::cos_kernel(r);
        case 1: return -detail::sin_kernel(r);
        case 2: return -detail::cos_kernel(r);
        default: return detail::sin_kernel(r);
    }
}

}  // namespace rkforge

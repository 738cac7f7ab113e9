#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/multiprecision/cpp_int.hpp>

namespace rkforge {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Exact rational value of a finite double (doubles are dyadic).
inline Rational exact_rational(double x) {
    if (x == 0.0) return Rational(0);
    int e = 0;
    const double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
    const auto mi = static_cast<std::int64_t>(std::ldexp(m, 53));
    Rational r(mi);
    const int shift = e - 53;
    if (shift >= 0)
        r *= Rational(BigInt(1) << shift);
    else
        r /= Rational(BigInt(1) << -shift);
    return r;
}

/// Nearest double to r, ties to even.  Overflows to infinity; values below
/// half the smallest subnormal underflow to zero.
inline double nearest_double(const Rational& r) {
    using boost::multiprecision::denominator;
    using boost::multiprecision::msb;
    using boost::multiprecision::numerator;

    if (r == 0) return 0.0;
    const bool neg = r < 0;
    const BigInt num = neg ? BigInt(-numerator(r)) : BigInt(numerator(r));
    const BigInt den = denominator(r);

    // e = floor(log2(num/den))
    int e = static_cast<int>(msb(num)) - static_cast<int>(msb(den));
    if ((e >= 0 && num < (den << e)) || (e < 0 && (num << -e) < den)) --e;

    if (e > 1023) return neg ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();

    // Precision available at this exponent (subnormals get fewer bits).
    int prec = 53;
    if (e < -1022) prec = 53 + (e + 1022);
    if (prec <= 0) return neg ? -0.0 : 0.0;

    const int shift = prec - 1 - e;
    const BigInt n2 = shift >= 0 ? BigInt(num << shift) : num;
    const BigInt d2 = shift >= 0 ? den : BigInt(den << -shift);
    BigInt q, rem;
    boost::multiprecision::divide_qr(n2, d2, q, rem);
    const BigInt twice = rem << 1;
    if (twice > d2 || (twice == d2 && boost::multiprecision::bit_test(q, 0))) ++q;

    const auto qi = q.convert_to<std::uint64_t>();  // q <= 2^53
    const double mag = std::ldexp(static_cast<double>(qi), e - prec + 1);
    return neg ? -mag : mag;
}

inline std::int64_t int64_factorial(int n) {
    std::int64_t f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

}  // namespace rkforge

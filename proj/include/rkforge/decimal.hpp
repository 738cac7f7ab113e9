#pragma once

#include <cctype>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rkforge/expansion.hpp"
#include "rkforge/rational.hpp"

namespace rkforge {

/// Malformed decimal text; `offset` is the 0-based position of the offending
/// character within the parsed token.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Parse an optionally signed decimal with optional fraction and exponent
/// ("-12.5e-3") into its exact rational value.
inline Rational parse_decimal(std::string_view text) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool neg = false;
    if (i < n && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';

    BigInt digits = 0;
    int frac_digits = 0;
    bool any = false;
    for (; i < n && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
        digits = digits * 10 + (text[i] - '0');
        any = true;
    }
    if (i < n && text[i] == '.') {
        ++i;
        for (; i < n && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            digits = digits * 10 + (text[i] - '0');
            ++frac_digits;
            any = true;
        }
    }
    if (!any) throw ParseError("expected a digit", i);

    long exp10 = 0;
    if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < n && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
        if (i >= n || !std::isdigit(static_cast<unsigned char>(text[i])))
            throw ParseError("expected an exponent digit", i);
        for (; i < n && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
            exp10 = exp10 * 10 + (text[i] - '0');
            if (exp10 > 1000000) throw ParseError("exponent out of range", i);
        }
        if (eneg) exp10 = -exp10;
    }
    if (i != n) throw ParseError("trailing characters after number", i);

    exp10 -= frac_digits;
    Rational r(digits);
    if (exp10 > 0)
        r *= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(exp10)));
    else if (exp10 < 0)
        r /= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-exp10)));
    return neg ? Rational(-r) : r;
}

/// Correctly rounded K-limb expansion of an exact rational: each limb is the
/// nearest double to the remaining value.
template <int K>
Expansion<K> rational_to_expansion(Rational r) {
    std::array<double, K> limbs{};
    for (int i = 0; i < K; ++i) {
        const double l = nearest_double(r);
        limbs[static_cast<std::size_t>(i)] = l;
        if (l == 0.0) break;
        r -= exact_rational(l);
    }
    return Expansion<K>::from_limbs(limbs);
}

template <int K>
Expansion<K> from_decimal(std::string_view text) {
    return rational_to_expansion<K>(parse_decimal(text));
}

/// Exact rational value of an expansion.
template <int K>
Rational expansion_to_rational(const Expansion<K>& x) {
    Rational r = 0;
    for (int i = 0; i < K; ++i) r += exact_rational(x.limb(i));
    return r;
}

/**
 * Format an exact rational to `digits` significant decimal digits, rounded
 * half-to-even.  Values whose decimal exponent lies in [-4, 20] print in
 * fixed point ("+0.5", "-12.25"); anything else uses e-notation.  The output
 * always starts with an explicit sign, so tableau files line up.
 */
inline std::string format_decimal(const Rational& value, int digits) {
    if (digits < 1) digits = 1;
    if (value == 0) return "+0.0";
    const bool neg = value < 0;
    Rational mag = neg ? Rational(-value) : value;

    // Decimal exponent e10: 10^e10 <= mag < 10^(e10+1).
    int e10 = 0;
    {
        const double approx = nearest_double(mag);
        e10 = approx > 0 ? static_cast<int>(std::floor(std::log10(approx))) : 0;
        const auto pow10 = [](int e) {
            Rational p = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(e < 0 ? -e : e));
            return e < 0 ? Rational(1) / p : p;
        };
        while (mag >= pow10(e10 + 1)) ++e10;
        while (mag < pow10(e10)) --e10;
    }

    // Integer mantissa with `digits` digits, rounded half-even.
    const int shift = digits - 1 - e10;
    Rational scaled = mag;
    if (shift > 0)
        scaled *= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(shift)));
    else if (shift < 0)
        scaled /= Rational(boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-shift)));
    BigInt q, rem;
    boost::multiprecision::divide_qr(boost::multiprecision::numerator(scaled),
                                     boost::multiprecision::denominator(scaled), q, rem);
    const BigInt twice = rem << 1;
    const BigInt den = boost::multiprecision::denominator(scaled);
    if (twice > den || (twice == den && boost::multiprecision::bit_test(q, 0))) ++q;
    std::string mant = q.str();
    if (static_cast<int>(mant.size()) > digits) {  // rounded up to the next decade
        mant.pop_back();
        ++e10;
    }

    std::string out(neg ? "-" : "+");
    if (e10 >= -4 && e10 <= 20) {
        if (e10 < 0) {
            out += "0.";
            out.append(static_cast<std::size_t>(-e10 - 1), '0');
            out += mant;
        } else if (e10 + 1 >= static_cast<int>(mant.size())) {
            out += mant;
            out.append(static_cast<std::size_t>(e10 + 1 - static_cast<int>(mant.size())), '0');
            out += ".0";
        } else {
            out += mant.substr(0, static_cast<std::size_t>(e10 + 1));
            out += ".";
            out += mant.substr(static_cast<std::size_t>(e10 + 1));
        }
    } else {
        out += mant.substr(0, 1);
        out += ".";
        out += mant.size() > 1 ? mant.substr(1) : "0";
        out += "e";
        out += std::to_string(e10);
    }
    return out;
}

template <int K>
std::string to_decimal(const Expansion<K>& x, int digits) {
    return format_decimal(expansion_to_rational(x), digits);
}

inline std::string to_decimal(double x, int digits) {
    return format_decimal(exact_rational(x), digits);
}

}  // namespace rkforge

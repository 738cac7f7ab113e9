#pragma once

#include <cmath>
#include <cstdint>

#include "rkforge/expansion.hpp"
#include "rkforge/rational.hpp"

namespace rkforge {

/**
 * Uniform interface over the scalar types the evaluation pipeline runs on:
 * binary64, K-limb expansions, exact rationals, and duals over any of them.
 */
template <typename S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr int kLimbs = 1;
    static constexpr bool kExact = false;
    static double from_ratio(std::int64_t num, std::int64_t den) {
        return static_cast<double>(num) / static_cast<double>(den);
    }
    static double to_double(double x) { return x; }
    static bool finite(double x) { return std::isfinite(x); }
    /// Relative rounding unit.
    static double epsilon() { return 0x1p-52; }
};

template <int K>
struct ScalarTraits<Expansion<K>> {
    static constexpr int kLimbs = K;
    static constexpr bool kExact = false;
    static Expansion<K> from_ratio(std::int64_t num, std::int64_t den) {
        // Factors up to 16! stay exactly representable in one limb.
        return Expansion<K>(static_cast<double>(num)) / Expansion<K>(static_cast<double>(den));
    }
    static double to_double(const Expansion<K>& x) { return x.to_double(); }
    static bool finite(const Expansion<K>& x) { return x.is_finite(); }
    static double epsilon() { return std::ldexp(1.0, 1 - 53 * K); }
};

template <>
struct ScalarTraits<Rational> {
    static constexpr int kLimbs = 0;
    static constexpr bool kExact = true;
    static Rational from_ratio(std::int64_t num, std::int64_t den) {
        return Rational(num) / Rational(den);
    }
    static double to_double(const Rational& x) { return nearest_double(x); }
    static bool finite(const Rational&) { return true; }
    static double epsilon() { return 0.0; }
};

template <typename S>
S scalar_from_ratio(std::int64_t num, std::int64_t den) {
    return ScalarTraits<S>::from_ratio(num, den);
}

template <typename S>
double scalar_to_double(const S& x) {
    return ScalarTraits<S>::to_double(x);
}

inline double abs(double x) { return std::fabs(x); }
inline double sqrt(double x) { return std::sqrt(x); }

inline Rational abs(const Rational& x) { return boost::multiprecision::abs(x); }

}  // namespace rkforge

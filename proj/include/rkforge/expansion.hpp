#pragma once

#include <algorithm>
#include <array>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <span>

namespace rkforge {

/// Result of an error-free sum: s = fl(a+b) and s + e = a + b exactly.
struct SumErr {
    double s;
    double e;
};

/// Result of an error-free product: p = fl(a·b) and p + e = a·b exactly.
struct ProdErr {
    double p;
    double e;
};

/// Knuth two-sum, valid for any finite a, b.
inline SumErr two_sum(double a, double b) {
    const double s = a + b;
    const double ap = s - b;
    const double bp = s - ap;
    return {s, (a - ap) + (b - bp)};
}

/// Dekker fast two-sum; requires |a| >= |b| or a == 0.
inline SumErr quick_two_sum(double a, double b) {
    const double s = a + b;
    return {s, b - (s - a)};
}

/// Exact product via fused multiply-add.
inline ProdErr two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

/// Exact product via Dekker splitting; requires no intermediate overflow
/// (|a|, |b| < 2^996).
inline ProdErr two_prod_split(double a, double b) {
    constexpr double kSplitter = 134217729.0;  // 2^27 + 1
    const double p = a * b;
    const double ta = kSplitter * a;
    const double ahi = ta - (ta - a);
    const double alo = a - ahi;
    const double tb = kSplitter * b;
    const double bhi = tb - (tb - b);
    const double blo = b - bhi;
    const double e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo;
    return {p, e};
}

namespace detail {

// The error-free transforms assume round-to-nearest-even; refuse to run
// in any other mode.
inline const bool rounding_mode_checked = [] {
    if (std::fegetround() != FE_TONEAREST) {
        std::fputs("rkforge: FPU is not in round-to-nearest mode\n", stderr);
        std::abort();
    }
    return true;
}();

// Canonical total order on doubles by their bit pattern; only used to break
// ties deterministically.
inline bool bits_less(double a, double b) {
    std::uint64_t ua, ub;
    std::memcpy(&ua, &a, sizeof a);
    std::memcpy(&ub, &b, sizeof b);
    return ua < ub;
}

// Decreasing magnitude, ties by bit pattern.
inline bool magnitude_order(double a, double b) {
    const double fa = std::fabs(a), fb = std::fabs(b);
    if (fa != fb) return fa > fb;
    return bits_less(a, b);
}

}  // namespace detail

/**
 * Extended-precision scalar: a non-overlapping expansion of K binary64
 * limbs, most significant first.  Adjacent limbs (a, b) satisfy
 * a = fl(a + b), and zero limbs appear only as a suffix, so the value
 * carries roughly 53·K bits of precision with the exponent range of
 * binary64.
 *
 * Overflow, division by zero and sqrt of a negative all propagate an
 * explicit error state: a non-finite limb, reported by is_finite().
 *
 * Relative error bounds (u = 2^-53): add/sub and mul are correct to a
 * few units of u^K; div and sqrt, via Newton iteration from a binary64
 * seed, to a small multiple of that.
 */
template <int K>
class Expansion {
    static_assert(K >= 2 && K <= 8, "limb count must be in [2, 8]");

public:
    static constexpr int kLimbs = K;

    constexpr Expansion() : limb_{} {}
    constexpr Expansion(double x) : limb_{} { limb_[0] = x; }

    /// Unchecked: limbs must already be non-overlapping, zeros as suffix.
    static constexpr Expansion from_limbs(const std::array<double, K>& limbs) {
        Expansion x;
        x.limb_ = limbs;
        return x;
    }

    /// Collapse an arbitrary list of doubles (roughly decreasing magnitude)
    /// into a valid K-limb expansion with the same value, truncated to K
    /// limbs.
    static Expansion renormalize(std::span<double> buf) {
        Expansion out;
        const std::size_t n = buf.size();
        if (n == 0) return out;

        // Bottom-up error-free sweep: buf[0] becomes fl(total), the rest
        // carry the round-off, each well below its predecessor.
        double s = buf[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) {
            const SumErr r = two_sum(buf[i], s);
            s = r.s;
            buf[i + 1] = r.e;
        }
        buf[0] = s;

        // Top-down compression, advancing a slot only on a nonzero error so
        // zeros never appear in the interior.
        int k = 0;
        s = buf[0];
        for (std::size_t i = 1; i < n; ++i) {
            const SumErr r = two_sum(s, buf[i]);
            if (r.e != 0.0 && k < K - 1) {
                out.limb_[static_cast<std::size_t>(k++)] = r.s;
                s = r.e;
            } else {
                s = r.s;  // exact merge, or truncating at the last slot
            }
        }
        out.limb_[static_cast<std::size_t>(k)] = s;
        out.fixup();
        return out;
    }

    /// Exhaustive equality of the stored limbs (not just of the value).
    friend bool limbs_equal(const Expansion& x, const Expansion& y) { return x.limb_ == y.limb_; }

    double limb(int i) const { return limb_[static_cast<std::size_t>(i)]; }
    const std::array<double, K>& limbs() const { return limb_; }

    /// Leading limb; within one ulp of the full value.
    double to_double() const { return limb_[0]; }

    bool is_finite() const {
        for (double l : limb_)
            if (!std::isfinite(l)) return false;
        return true;
    }

    bool is_zero() const { return limb_[0] == 0.0; }

    friend Expansion operator-(const Expansion& x) {
        Expansion r;
        for (int i = 0; i < K; ++i) r.limb_[static_cast<std::size_t>(i)] = -x.limb_[static_cast<std::size_t>(i)];
        return r;
    }

    friend Expansion operator+(const Expansion& x, const Expansion& y) {
        // Merge the two limb sequences by decreasing magnitude, then
        // renormalize; every intermediate is an error-free transform.  The
        // tie order is canonical so x + y and y + x agree bit for bit.
        std::array<double, 2 * K> buf;
        int i = 0, j = 0, k = 0;
        while (i < K && j < K) {
            const double xv = x.limb_[static_cast<std::size_t>(i)];
            const double yv = y.limb_[static_cast<std::size_t>(j)];
            const bool take_x =
                std::fabs(xv) != std::fabs(yv) ? std::fabs(xv) > std::fabs(yv) : !detail::bits_less(xv, yv);
            buf[static_cast<std::size_t>(k++)] = take_x
                ? x.limb_[static_cast<std::size_t>(i++)]
                : y.limb_[static_cast<std::size_t>(j++)];
        }
        while (i < K) buf[static_cast<std::size_t>(k++)] = x.limb_[static_cast<std::size_t>(i++)];
        while (j < K) buf[static_cast<std::size_t>(k++)] = y.limb_[static_cast<std::size_t>(j++)];
        return renormalize(buf);
    }

    friend Expansion operator-(const Expansion& x, const Expansion& y) { return x + (-y); }

    friend Expansion operator*(const Expansion& x, const Expansion& y) {
        // Exact partial products grouped by magnitude class m = i + j:
        // full error-free pairs for m < K, rounded heads at m == K, and
        // everything beyond dropped (below the target precision).  Each
        // class is sorted canonically, making the product bit-commutative.
        std::array<double, static_cast<std::size_t>(K * (K + 2))> buf;
        std::size_t n = 0;
        std::array<double, K + 1> carry{};  // tails of class m-1 land in class m
        std::size_t ncarry = 0;
        for (int m = 0; m <= K; ++m) {
            std::array<double, K + 1> heads{};
            std::size_t nheads = 0;
            std::array<double, K + 1> next_carry{};
            std::size_t nnext = 0;
            const int ilo = std::max(0, m - (K - 1));
            const int ihi = std::min(m, K - 1);
            for (int i = ilo; i <= ihi; ++i) {
                const int j = m - i;
                const double xi = x.limb_[static_cast<std::size_t>(i)];
                const double yj = y.limb_[static_cast<std::size_t>(j)];
                if (m < K) {
                    const ProdErr r = two_prod(xi, yj);
                    heads[nheads++] = r.p;
                    next_carry[nnext++] = r.e;
                } else {
                    heads[nheads++] = xi * yj;
                }
            }
            std::sort(heads.begin(), heads.begin() + static_cast<std::ptrdiff_t>(nheads),
                      detail::magnitude_order);
            std::sort(next_carry.begin(), next_carry.begin() + static_cast<std::ptrdiff_t>(nnext),
                      detail::magnitude_order);
            std::sort(carry.begin(), carry.begin() + static_cast<std::ptrdiff_t>(ncarry),
                      detail::magnitude_order);
            for (std::size_t c = 0; c < ncarry; ++c) buf[n++] = carry[c];
            for (std::size_t c = 0; c < nheads; ++c) buf[n++] = heads[c];
            carry = next_carry;
            ncarry = nnext;
        }
        return renormalize(std::span<double>(buf.data(), n));
    }

    friend Expansion operator/(const Expansion& x, const Expansion& y) {
        // Newton iteration on the reciprocal from a binary64 seed; one
        // refinement per doubling of precision, plus a final correction.
        Expansion r(1.0 / y.limb_[0]);
        const Expansion one(1.0);
        for (int it = 0; it < newton_iterations(); ++it) r = r + r * (one - y * r);
        Expansion q = x * r;
        q = q + r * (x - y * q);
        return q;
    }

    Expansion& operator+=(const Expansion& y) { return *this = *this + y; }
    Expansion& operator-=(const Expansion& y) { return *this = *this - y; }
    Expansion& operator*=(const Expansion& y) { return *this = *this * y; }
    Expansion& operator/=(const Expansion& y) { return *this = *this / y; }

    /// Exact scaling by a power of two.
    Expansion ldexp_pow2(int e) const {
        Expansion r;
        for (int i = 0; i < K; ++i)
            r.limb_[static_cast<std::size_t>(i)] = std::ldexp(limb_[static_cast<std::size_t>(i)], e);
        return r;
    }

    /// Sign of x - y, computed exactly (up to binary64 underflow).
    friend int compare(const Expansion& x, const Expansion& y) {
        const Expansion d = x - y;
        if (d.limb_[0] > 0.0) return 1;
        if (d.limb_[0] < 0.0) return -1;
        return 0;
    }

    friend bool operator==(const Expansion& x, const Expansion& y) { return compare(x, y) == 0; }
    friend bool operator<(const Expansion& x, const Expansion& y) { return compare(x, y) < 0; }
    friend bool operator>(const Expansion& x, const Expansion& y) { return compare(x, y) > 0; }
    friend bool operator<=(const Expansion& x, const Expansion& y) { return compare(x, y) <= 0; }
    friend bool operator>=(const Expansion& x, const Expansion& y) { return compare(x, y) >= 0; }

private:
    static constexpr int newton_iterations() {
        // 53 seed bits doubled per step, with one step of margin.
        return K <= 2 ? 2 : (K <= 4 ? 3 : 4);
    }

    // Re-establish strict non-overlap of adjacent limbs.  A top-down sweep
    // of two_sum leaves each touched pair an error-free pair (s = fl(s+e)
    // holds for any two_sum output) and cascades the slack downward; the
    // overshoot shrinks by ~2^-53 per sweep, so the loop settles in two or
    // three.  On an already-valid expansion the first pass is the identity.
    void fixup() {
        for (int pass = 0; pass < 8; ++pass) {
            bool changed = false;
            for (int i = 0; i < K - 1; ++i) {
                const SumErr r =
                    two_sum(limb_[static_cast<std::size_t>(i)], limb_[static_cast<std::size_t>(i + 1)]);
                if (r.s != limb_[static_cast<std::size_t>(i)] ||
                    r.e != limb_[static_cast<std::size_t>(i + 1)]) {
                    limb_[static_cast<std::size_t>(i)] = r.s;
                    limb_[static_cast<std::size_t>(i + 1)] = r.e;
                    changed = true;
                }
            }
            if (!changed) break;
            // Exact merges can leave interior zeros; push them to the end.
            int k = 0;
            for (int i = 0; i < K; ++i) {
                const double l = limb_[static_cast<std::size_t>(i)];
                limb_[static_cast<std::size_t>(i)] = 0.0;
                if (l != 0.0) limb_[static_cast<std::size_t>(k++)] = l;
            }
        }
        // Canonical zeros, so bitwise limb comparisons behave.
        for (int i = 0; i < K; ++i)
            if (limb_[static_cast<std::size_t>(i)] == 0.0) limb_[static_cast<std::size_t>(i)] = 0.0;
    }

    std::array<double, K> limb_;
};

template <int K>
Expansion<K> abs(const Expansion<K>& x) {
    return x.limb(0) < 0.0 ? -x : x;
}

template <int K>
Expansion<K> sqrt(const Expansion<K>& x) {
    if (x.is_zero()) return Expansion<K>{};
    if (x.limb(0) < 0.0) return Expansion<K>(std::nan(""));
    // Newton on the inverse square root, then a final Heron correction.
    Expansion<K> r(1.0 / std::sqrt(x.limb(0)));
    const Expansion<K> one(1.0);
    const int iters = K <= 2 ? 2 : (K <= 4 ? 3 : 4);
    for (int it = 0; it < iters; ++it) r = r + (r * (one - x * r * r)).ldexp_pow2(-1);
    Expansion<K> s = x * r;
    s = s + ((x - s * s) * r).ldexp_pow2(-1);
    return s;
}

/// Exact widening (Kto >= Kfrom) or truncating (Kto < Kfrom) limb conversion.
template <int Kto, int Kfrom>
Expansion<Kto> convert(const Expansion<Kfrom>& x) {
    std::array<double, Kto> limbs{};
    for (int i = 0; i < std::min(Kto, Kfrom); ++i) limbs[static_cast<std::size_t>(i)] = x.limb(i);
    return Expansion<Kto>::from_limbs(limbs);
}

}  // namespace rkforge

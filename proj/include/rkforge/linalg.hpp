#pragma once

#include <span>
#include <vector>

#include "rkforge/scalar.hpp"

namespace rkforge {

/// Row-major dense matrix over any scalar with field operations.
template <typename S>
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<S> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c)) {}

    S& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)]; }
    const S& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        const S one = scalar_from_ratio<S>(1, 1);
        for (int i = 0; i < n; ++i) m(i, i) = one;
        return m;
    }
};

template <typename S>
void matvec(const Matrix<S>& m, std::span<const S> x, std::span<S> out) {
    for (int i = 0; i < m.rows; ++i) {
        S acc{};
        for (int j = 0; j < m.cols; ++j) acc += m(i, j) * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = acc;
    }
}

template <typename S>
S dot(std::span<const S> x, std::span<const S> y) {
    S acc{};
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

template <typename S>
S norm2(std::span<const S> x) {
    using std::sqrt;
    return sqrt(dot(x, x));
}

/// Singular values and right singular vectors of a rows×cols matrix by
/// one-sided Jacobi: plane rotations orthogonalize the columns, accumulated
/// into V, and the singular values are the resulting column norms.
template <typename S>
struct SvdRight {
    std::vector<S> sigma;  ///< column norms after orthogonalization
    Matrix<S> v;           ///< right singular vectors in the columns
};

template <typename S>
SvdRight<S> jacobi_svd_right(Matrix<S> m) {
    using std::abs;
    using std::sqrt;
    const int n = m.cols;
    const int rows = m.rows;
    Matrix<S> v = Matrix<S>::identity(n);
    const S one = scalar_from_ratio<S>(1, 1);
    const S eps2 = [] {
        const double e = ScalarTraits<S>::epsilon();
        return S(e) * S(e);
    }();

    auto col_dot = [&](int p, int q) {
        S acc{};
        for (int i = 0; i < rows; ++i) acc += m(i, p) * m(i, q);
        return acc;
    };

    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const S apq = col_dot(p, q);
                if (apq == S{}) continue;
                const S app = col_dot(p, p);
                const S aqq = col_dot(q, q);
                if (apq * apq <= eps2 * app * aqq) continue;

                const S tau = (aqq - app) / (apq + apq);
                const S root = sqrt(one + tau * tau);
                const S t = tau >= S{} ? one / (tau + root) : -(one / (root - tau));
                const S c = one / sqrt(one + t * t);
                const S s = t * c;
                for (int i = 0; i < rows; ++i) {
                    const S mp = m(i, p), mq = m(i, q);
                    m(i, p) = c * mp - s * mq;
                    m(i, q) = s * mp + c * mq;
                }
                for (int i = 0; i < n; ++i) {
                    const S vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }

    SvdRight<S> out;
    out.sigma.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out.sigma.push_back(sqrt(col_dot(k, k)));
    out.v = std::move(v);
    return out;
}

/// Remove from g its components along right singular vectors whose singular
/// value exceeds rank_tol times the largest, leaving the null-space part.
template <typename S>
void project_onto_nullspace(const SvdRight<S>& svd, double rank_tol, std::span<S> g) {
    const int n = svd.v.cols;
    S sigma_max{};
    for (const S& s : svd.sigma)
        if (s > sigma_max) sigma_max = s;
    const S threshold = S(rank_tol) * sigma_max;
    for (int k = 0; k < n; ++k) {
        if (!(svd.sigma[static_cast<std::size_t>(k)] > threshold)) continue;
        S coef{};
        for (int i = 0; i < n; ++i) coef += svd.v(i, k) * g[static_cast<std::size_t>(i)];
        for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] -= coef * svd.v(i, k);
    }
}

}  // namespace rkforge

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rkforge/elementary.hpp"
#include "rkforge/objective.hpp"
#include "rkforge/program.hpp"
#include "rkforge/tableau.hpp"

namespace rkforge {

template <typename S>
struct IvpProblem {
    int dim = 0;
    std::function<void(const S& t, std::span<const S> y, std::span<S> out)> rhs;
    S t0{};
    std::vector<S> y0;
    /// Optional closed-form solution; null function if unknown.
    std::function<void(const S& t, std::span<S> out)> exact;
    std::string name;
};

/// A non-finite stage value; carries where the integration broke down.
class IntegrationFailure : public std::runtime_error {
public:
    IntegrationFailure(double t, std::vector<double> y)
        : std::runtime_error("non-finite right-hand side at t = " + std::to_string(t)),
          t_(t),
          y_(std::move(y)) {}
    double t() const { return t_; }
    const std::vector<double>& state() const { return y_; }

private:
    double t_;
    std::vector<double> y_;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename S>
struct RkScratch {
    std::vector<S> k;
    std::vector<S> ytmp;
};

/// One step: k_i = h·f(t + c_i h, y + Σ_{j<i} a_ij k_j) in stage order, then
/// y + Σ b_i k_i.  Exactly s evaluations of f.
template <typename S>
void rk_step(const Tableau<S>& tab, const IvpProblem<S>& prob, const S& t, std::span<const S> y,
             const S& h, std::span<S> out, RkScratch<S>& scr) {
    const int s = tab.s;
    const int n = prob.dim;
    scr.k.resize(static_cast<std::size_t>(s) * static_cast<std::size_t>(n));
    scr.ytmp.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < s; ++i) {
        for (int d = 0; d < n; ++d) {
            S acc = y[static_cast<std::size_t>(d)];
            for (int j = 0; j < i; ++j)
                acc += tab.a_at(i, j) * scr.k[static_cast<std::size_t>(j * n + d)];
            scr.ytmp[static_cast<std::size_t>(d)] = acc;
        }
        const S ti = t + tab.c[static_cast<std::size_t>(i)] * h;
        std::span<S> ki(scr.k.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n),
                        static_cast<std::size_t>(n));
        prob.rhs(ti, std::span<const S>(scr.ytmp), ki);
        for (int d = 0; d < n; ++d) {
            ki[static_cast<std::size_t>(d)] = h * ki[static_cast<std::size_t>(d)];
            if (!ScalarTraits<S>::finite(ki[static_cast<std::size_t>(d)])) {
                std::vector<double> yd(y.size());
                for (std::size_t e = 0; e < y.size(); ++e) yd[e] = scalar_to_double(y[e]);
                throw IntegrationFailure(scalar_to_double(t), std::move(yd));
            }
        }
    }
    for (int d = 0; d < n; ++d) {
        S acc = y[static_cast<std::size_t>(d)];
        for (int i = 0; i < s; ++i)
            acc += tab.b[static_cast<std::size_t>(i)] * scr.k[static_cast<std::size_t>(i * n + d)];
        out[static_cast<std::size_t>(d)] = acc;
    }
}

template <typename S>
struct IntegrationResult {
    std::vector<S> y;
    long fevals = 0;
};

/// Fixed-step integration from t0 to t_end; (t_end − t0)/h must land on an
/// integer step count.  f-evaluation count is exactly s · steps.
template <typename S>
IntegrationResult<S> integrate_fixed(const Tableau<S>& tab, const IvpProblem<S>& prob, const S& h,
                                     const S& t_end) {
    const double ratio = scalar_to_double((t_end - prob.t0) / h);
    const long steps = std::lround(ratio);
    if (steps < 0 || std::fabs(ratio - static_cast<double>(steps)) > 1e-9 * (std::fabs(ratio) + 1))
        throw std::invalid_argument("integrate_fixed: (t_end - t0)/h is not a whole step count");

    IntegrationResult<S> res;
    res.y = prob.y0;
    std::vector<S> next(res.y.size());
    RkScratch<S> scr;
    for (long k = 0; k < steps; ++k) {
        const S t = prob.t0 + S(static_cast<double>(k)) * h;
        rk_step(tab, prob, t, std::span<const S>(res.y), h, std::span<S>(next), scr);
        res.y.swap(next);
    }
    res.fevals = static_cast<long>(tab.s) * steps;
    return res;
}

/**
 * Fehlberg's non-stiff test pair y' = −2t·y·log z, z' = 2t·z·log y with
 * y(0) = e, z(0) = 1 and exact solution y = exp(cos t²), z = exp(sin t²).
 */
template <typename S>
IvpProblem<S> fehlberg_problem() {
    IvpProblem<S> p;
    p.dim = 2;
    p.name = "fehlberg";
    p.t0 = S{};
    {
        using std::exp;
        p.y0 = {exp(S(1.0)), S(1.0)};
    }
    p.rhs = [](const S& t, std::span<const S> y, std::span<S> out) {
        using std::log;
        const S two_t = t + t;
        out[0] = -(two_t * y[0] * log(y[1]));
        out[1] = two_t * y[1] * log(y[0]);
    };
    p.exact = [](const S& t, std::span<S> out) {
        using std::cos;
        using std::exp;
        using std::sin;
        const S t2 = t * t;
        out[0] = exp(cos(t2));
        out[1] = exp(sin(t2));
    };
    return p;
}

template <typename S>
double terminal_error(const IvpProblem<S>& prob, const S& t_end, std::span<const S> y) {
    using std::sqrt;
    std::vector<S> ref(static_cast<std::size_t>(prob.dim));
    prob.exact(t_end, std::span<S>(ref));
    S acc{};
    for (std::size_t d = 0; d < ref.size(); ++d) {
        const S diff = y[d] - ref[d];
        acc += diff * diff;
    }
    return scalar_to_double(sqrt(acc));
}

/**
 * Least-squares slope of log(terminal error) against log(h); for an order-p
 * method inside the asymptotic regime the slope is p.  Errors below 100×
 * the working-precision floor are dropped; fewer than 3 surviving points is
 * an InsufficientDataError.
 */
template <typename S>
double empirical_order(const Tableau<S>& tab, const IvpProblem<S>& prob, const S& t_end,
                       std::span<const S> h_list) {
    if (!prob.exact) throw std::invalid_argument("empirical_order: problem has no exact solution");
    std::vector<S> ref(static_cast<std::size_t>(prob.dim));
    prob.exact(t_end, std::span<S>(ref));
    double ref_norm = 0;
    for (const S& r : ref) ref_norm += scalar_to_double(r) * scalar_to_double(r);
    const double floor = ScalarTraits<S>::epsilon() * std::sqrt(ref_norm);

    std::vector<double> lx, ly;
    for (const S& h : h_list) {
        const auto res = integrate_fixed(tab, prob, h, t_end);
        const double err = terminal_error(prob, t_end, std::span<const S>(res.y));
        if (err < 100.0 * floor) continue;
        lx.push_back(std::log(scalar_to_double(h)));
        ly.push_back(std::log(err));
    }
    if (lx.size() < 3)
        throw InsufficientDataError("empirical_order: fewer than 3 usable error samples");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
}

template <typename S>
struct OrderReport {
    int p = 0;
    double tolerance = 0;
    bool pass = false;
    /// max |defect| per order 1..p.
    std::vector<double> max_defect;
    std::string worst_tree;
    int worst_order = 0;
    double worst_defect = 0;
    bool b2_defined = false;
    bool b2_zero = false;
    bool cs_one = false;
    /// Thm-style structural note: s < p forces the p-vertex path condition
    /// to fail with constant defect −1/p!.
    bool structurally_infeasible = false;
};

namespace detail {

template <typename S>
bool defect_exceeds(const S& defect, double tol) {
    using std::abs;
    if constexpr (ScalarTraits<S>::kExact) {
        if (tol == 0.0) return defect != S{};
    }
    return scalar_to_double(S(abs(defect))) > tol;
}

}  // namespace detail

/// Evaluate every condition of order 1..p; pass iff max |defect| ≤ tol.
/// Also reports the b₂ = 0 and c_s = 1 simplifying-assumption flags.
template <typename S>
OrderReport<S> check_order(const Tableau<S>& tab, int p, double tol) {
    using std::abs;
    const EvaluationProgram prog(p, tab.s, false);
    Workspace<S> ws(prog);
    const auto params = tab.parameters();
    const auto defects = condition_values(prog, std::span<const S>(params), ws);

    OrderReport<S> rep;
    rep.p = p;
    rep.tolerance = tol;
    rep.pass = true;
    rep.max_defect.assign(static_cast<std::size_t>(p), 0.0);
    const auto& conds = prog.conditions();
    for (std::size_t c = 0; c < conds.size(); ++c) {
        const double mag = scalar_to_double(S(abs(defects[c])));
        auto& slot = rep.max_defect[static_cast<std::size_t>(conds[c].order - 1)];
        if (mag >= slot) {
            slot = mag;
        }
        if (mag > std::fabs(rep.worst_defect) || rep.worst_tree.empty()) {
            rep.worst_defect = scalar_to_double(defects[c]);
            rep.worst_tree = conds[c].tree;
            rep.worst_order = conds[c].order;
        }
        if (detail::defect_exceeds(defects[c], tol)) rep.pass = false;
    }
    rep.structurally_infeasible = tab.s < p;
    rep.b2_defined = tab.s >= 2;
    if (rep.b2_defined) rep.b2_zero = !detail::defect_exceeds(tab.b[1], tol);
    const S one = scalar_from_ratio<S>(1, 1);
    rep.cs_one = !detail::defect_exceeds(S(tab.c[static_cast<std::size_t>(tab.s - 1)] - one), tol);
    return rep;
}

class OrderCheckError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// {(1/σ(τ))(b·Φ_A(τ) − 1/τ!) : τ ∈ T_{p+1}}, refusing unless the method
/// actually has order ≥ p at tolerance tol.  Its 2-norm is √E_{p,s}.
template <typename S>
std::vector<S> principal_error_coefficients(const Tableau<S>& tab, int p, double tol) {
    const auto rep = check_order(tab, p, tol);
    if (!rep.pass)
        throw OrderCheckError("method is not of order " + std::to_string(p) +
                              ": condition for tree " + rep.worst_tree + " has defect " +
                              std::to_string(rep.worst_defect));
    const EvaluationProgram prog(p, tab.s, true);
    Workspace<S> ws(prog);
    const auto params = tab.parameters();
    const auto defects = error_condition_values(prog, std::span<const S>(params), ws);
    std::vector<S> coeffs(defects.size());
    const auto& errs = prog.error_conditions();
    for (std::size_t c = 0; c < defects.size(); ++c)
        coeffs[c] = scalar_from_ratio<S>(1, errs[c].sigma) * defects[c];
    return coeffs;
}

/// √E_{p,s}, the 2-norm of the principal error coefficients.
template <typename S>
double error_norm_sqrt(const Tableau<S>& tab, int p) {
    const EvaluationProgram prog(p, tab.s, true);
    Workspace<S> ws(prog);
    const auto params = tab.parameters();
    return std::sqrt(scalar_to_double(error_norm(prog, std::span<const S>(params), ws)));
}

struct WorkPrecisionRecord {
    std::string method;
    double h = 0;
    long fevals = 0;
    double error = 0;
    double digits = 0;
};

/**
 * One record per (method, h): terminal Euclidean error against the exact
 * solution and the correct-digit count −log₁₀(error), clamped at the
 * working precision's digit count for exact matches.  Integration failures
 * become records with infinite error rather than disappearing.
 */
template <typename S>
std::vector<WorkPrecisionRecord> work_precision(std::span<const Tableau<S>> tabs,
                                                const IvpProblem<S>& prob, const S& t_end,
                                                std::span<const S> h_grid) {
    if (!prob.exact) throw std::invalid_argument("work_precision: problem has no exact solution");
    const double digit_cap =
        std::floor(53.0 * std::max(1, ScalarTraits<S>::kLimbs) * 0.30102999566398120);
    std::vector<WorkPrecisionRecord> records;
    for (const Tableau<S>& tab : tabs) {
        for (const S& h : h_grid) {
            WorkPrecisionRecord rec;
            rec.method = tab.name;
            rec.h = scalar_to_double(h);
            const double steps = std::round(scalar_to_double((t_end - prob.t0) / h));
            rec.fevals = static_cast<long>(steps) * tab.s;
            try {
                const auto res = integrate_fixed(tab, prob, h, t_end);
                rec.fevals = res.fevals;
                rec.error = terminal_error(prob, t_end, std::span<const S>(res.y));
                rec.digits = rec.error > 0 ? -std::log10(rec.error) : digit_cap;
                if (rec.digits > digit_cap) rec.digits = digit_cap;
            } catch (const IntegrationFailure&) {
                rec.error = std::numeric_limits<double>::infinity();
                rec.digits = -std::numeric_limits<double>::infinity();
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

/// CSV schema: header `method,h,fevals,error,digits`, one row per record.
inline std::string work_precision_csv(std::span<const WorkPrecisionRecord> records) {
    std::string out = "method,h,fevals,error,digits\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%ld,%.17g,%.6g\n", r.method.c_str(), r.h,
                      r.fevals, r.error, r.digits);
        out += buf;
    }
    return out;
}

}  // namespace rkforge

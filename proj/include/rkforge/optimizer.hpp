#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "rkforge/linalg.hpp"
#include "rkforge/objective.hpp"
#include "rkforge/program.hpp"

namespace rkforge {

/// One line of the run log, in documented order:
/// iteration, precision level (limb count), f, gradient norm, step type.
struct IterationLog {
    long iteration;
    int limbs;
    double f;
    double grad_norm;
    const char* kind;  // "BFGS", "GRAD", "RESET", "STUCK"
};

struct SearchOptions {
    long max_iterations = 10000;
    double gradient_tolerance = 1e-280;
    /// Success threshold for R; 0 selects the per-precision default table.
    double objective_tolerance = 0.0;
    int stagnation_window = 50;
    double stagnation_threshold = 1e-3;
    /// Precision ladder as limb counts; 1 is plain binary64.
    std::vector<int> ladder = {1, 2};
    std::uint64_t seed = 0;
    int threads = 0;  ///< 0 = hardware concurrency
    double rank_tolerance = 1e-12;
    double refine_stop_rel = 1e-7;
    long refine_max_iterations = 500;
    std::function<void(const IterationLog&)> log;

    void validate() const {
        if (max_iterations < 1) throw std::invalid_argument("options: max_iterations must be >= 1");
        if (gradient_tolerance <= 0) throw std::invalid_argument("options: gradient tolerance must be positive");
        if (objective_tolerance < 0) throw std::invalid_argument("options: objective tolerance must not be negative");
        if (stagnation_window < 1 || stagnation_threshold <= 0)
            throw std::invalid_argument("options: bad stagnation rule");
        if (ladder.empty()) throw std::invalid_argument("options: precision ladder is empty");
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            if (ladder[i] < 1 || ladder[i] > 8)
                throw std::invalid_argument("options: ladder limb counts must be in [1, 8]");
            if (i > 0 && ladder[i] <= ladder[i - 1])
                throw std::invalid_argument("options: ladder must be strictly increasing");
        }
    }

    double success_threshold(int limbs) const {
        if (objective_tolerance > 0) return objective_tolerance;
        switch (limbs) {
            case 1:
            case 2: return 1e-25;
            case 3: return 1e-42;
            case 4: return 1e-60;
            case 5: return 1e-77;
            case 6: return 1e-95;
            case 7: return 1e-112;
            default: return 1e-130;
        }
    }
};

template <typename S>
struct LineSearchResult {
    S step;
    S f;
};

/**
 * Three-point quadratic line search: expand the step while f decreases,
 * contract otherwise, then polish with the fitted parabola's vertex.
 * Returns a step with f(x + t·d) strictly below f0, or nothing if no
 * descent was found within the evaluation budget.
 */
template <typename S, typename F>
std::optional<LineSearchResult<S>> quadratic_line_search(F&& f, std::span<const S> x,
                                                         std::span<const S> dir, const S& f0,
                                                         int max_evals = 64) {
    const S zero{};
    const S one = scalar_from_ratio<S>(1, 1);
    const S half = scalar_from_ratio<S>(1, 2);
    std::vector<S> xt(x.size());
    int evals = 0;
    auto eval = [&](const S& t) {
        for (std::size_t i = 0; i < x.size(); ++i) xt[i] = x[i] + t * dir[i];
        ++evals;
        return f(std::span<const S>(xt));
    };

    bool have_best = false;
    LineSearchResult<S> best{zero, f0};
    auto consider = [&](const S& t, const S& ft) {
        if (ft < f0 && (!have_best || ft < best.f)) {
            best = {t, ft};
            have_best = true;
        }
    };

    // Vertex of the parabola through three points, if it is a minimum.
    auto vertex = [&](const S& a, const S& fa, const S& b, const S& fb, const S& c,
                      const S& fc) -> std::optional<S> {
        const S d1 = (fb - fa) / (b - a);
        const S d2 = (fc - fb) / (c - b);
        const S curv = (d2 - d1) / (c - a);
        if (!(curv > zero)) return std::nullopt;
        return half * (a + b - d1 / curv);
    };

    S t1 = one;
    S f1 = eval(t1);
    consider(t1, f1);

    if (f1 < f0) {
        S ta = zero, fa = f0;
        S tb = t1, fb = f1;
        while (evals < max_evals) {
            const S tc = tb + tb;
            const S fc = eval(tc);
            consider(tc, fc);
            if (fc < fb) {
                ta = tb;
                fa = fb;
                tb = tc;
                fb = fc;
                continue;
            }
            if (auto tv = vertex(ta, fa, tb, fb, tc, fc);
                tv && *tv > ta && *tv < tc && evals < max_evals) {
                consider(*tv, eval(*tv));
            }
            break;
        }
    } else {
        S tb = t1, fb = f1;
        while (evals < max_evals) {
            const S ta = half * tb;
            const S fa = eval(ta);
            consider(ta, fa);
            if (fa < f0) {
                if (auto tv = vertex(zero, f0, ta, fa, tb, fb);
                    tv && *tv > zero && *tv < tb && evals < max_evals) {
                    consider(*tv, eval(*tv));
                }
                break;
            }
            tb = ta;
            fb = fa;
        }
    }

    if (!have_best) return std::nullopt;
    return best;
}

enum class StepKind { kBfgs, kGradient, kReset, kStuck };

/**
 * BFGS iterate: current point, objective value, gradient, and the symmetric
 * approximate inverse Hessian.  f and g are always recomputed together when
 * x moves.
 */
template <typename S>
struct BfgsState {
    std::vector<S> x;
    std::vector<S> g;
    S f{};
    Matrix<S> h;
    long iteration = 0;
    bool stuck = false;

    template <typename Obj>
    static BfgsState start(std::vector<S> x0, Obj& obj) {
        BfgsState st;
        st.x = std::move(x0);
        st.g.resize(st.x.size());
        st.f = obj.value_and_gradient(std::span<const S>(st.x), std::span<S>(st.g));
        st.h = Matrix<S>::identity(static_cast<int>(st.x.size()));
        return st;
    }
};

/**
 * One step of the modified BFGS strategy: the quadratic line search runs
 * along both the BFGS direction −H·g and the raw gradient direction −g.
 * If the gradient direction achieves the strictly larger reduction, its
 * point is accepted and H is reset to the identity (stale curvature is
 * thrown away); otherwise the BFGS point is accepted and H receives the
 * rank-two inverse-Hessian update enforcing the secant condition
 * H·(g_new − g_old) = x_new − x_old.  If neither direction yields descent
 * the state is flagged stuck.
 */
template <typename S, typename Obj>
StepKind bfgs_step(BfgsState<S>& st, Obj& obj) {
    const std::size_t n = st.x.size();
    std::vector<S> d_bfgs(n), d_grad(n);
    matvec(st.h, std::span<const S>(st.g), std::span<S>(d_bfgs));
    for (std::size_t i = 0; i < n; ++i) {
        d_bfgs[i] = -d_bfgs[i];
        d_grad[i] = -st.g[i];
    }

    auto value = [&](std::span<const S> xs) { return obj.value(xs); };
    const auto rb = quadratic_line_search(value, std::span<const S>(st.x),
                                          std::span<const S>(d_bfgs), st.f);
    const auto rg = quadratic_line_search(value, std::span<const S>(st.x),
                                          std::span<const S>(d_grad), st.f);

    if (!rb && !rg) {
        st.stuck = true;
        return StepKind::kStuck;
    }

    const bool grad_wins = rg && (!rb || rg->f < rb->f);
    const auto& chosen = grad_wins ? *rg : *rb;
    const auto& dir = grad_wins ? d_grad : d_bfgs;

    std::vector<S> step(n), g_old = st.g;
    for (std::size_t i = 0; i < n; ++i) {
        step[i] = chosen.step * dir[i];
        st.x[i] += step[i];
    }
    st.f = obj.value_and_gradient(std::span<const S>(st.x), std::span<S>(st.g));
    ++st.iteration;

    if (grad_wins) {
        st.h = Matrix<S>::identity(static_cast<int>(n));
        return StepKind::kGradient;
    }

    std::vector<S> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = st.g[i] - g_old[i];
    const S sy = dot(std::span<const S>(step), std::span<const S>(y));
    // Updating on nearly-orthogonal (s, y) amplifies round-off past any use;
    // start curvature fresh instead.
    const double gate = std::cbrt(ScalarTraits<S>::epsilon()) *
                        scalar_to_double(norm2(std::span<const S>(step))) *
                        scalar_to_double(norm2(std::span<const S>(y)));
    if (!(scalar_to_double(sy) > gate)) {
        st.h = Matrix<S>::identity(static_cast<int>(n));
        return StepKind::kReset;
    }
    std::vector<S> hy(n);
    matvec(st.h, std::span<const S>(y), std::span<S>(hy));
    const S yhy = dot(std::span<const S>(y), std::span<const S>(hy));
    const S c1 = (sy + yhy) / (sy * sy);
    const S one = scalar_from_ratio<S>(1, 1);
    const S inv_sy = one / sy;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            st.h(static_cast<int>(i), static_cast<int>(j)) +=
                c1 * step[i] * step[j] - (hy[i] * step[j] + step[i] * hy[j]) * inv_sy;
    // Symmetry is exact in the formula; enforce it against round-off.
    const S half = scalar_from_ratio<S>(1, 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const S avg = half * (st.h(static_cast<int>(i), static_cast<int>(j)) +
                                  st.h(static_cast<int>(j), static_cast<int>(i)));
            st.h(static_cast<int>(i), static_cast<int>(j)) = avg;
            st.h(static_cast<int>(j), static_cast<int>(i)) = avg;
        }
    return StepKind::kBfgs;
}

enum class RunOutcome { kHitThreshold, kStagnant, kStuck, kBudget };

/// Iterate bfgs_step at one fixed precision until the objective threshold,
/// stagnation over the options' window, a stuck state, or the budget.
template <typename S, typename Obj>
RunOutcome bfgs_run(BfgsState<S>& st, Obj& obj, const SearchOptions& opt, long budget,
                    double threshold, int limbs_label, long& used) {
    std::vector<double> recent;
    recent.reserve(static_cast<std::size_t>(opt.stagnation_window) + 1);
    used = 0;
    while (true) {
        const double f_now = scalar_to_double(st.f);
        if (f_now < threshold) return RunOutcome::kHitThreshold;
        if (scalar_to_double(norm2(std::span<const S>(st.g))) < opt.gradient_tolerance)
            return RunOutcome::kStagnant;
        if (used >= budget) return RunOutcome::kBudget;

        recent.push_back(f_now);
        const StepKind kind = bfgs_step(st, obj);
        ++used;
        if (opt.log)
            opt.log(IterationLog{st.iteration, limbs_label, scalar_to_double(st.f),
                                 scalar_to_double(norm2(std::span<const S>(st.g))),
                                 kind == StepKind::kBfgs      ? "BFGS"
                                 : kind == StepKind::kGradient ? "GRAD"
                                 : kind == StepKind::kReset    ? "RESET"
                                                               : "STUCK"});
        if (kind == StepKind::kStuck) return RunOutcome::kStuck;

        if (recent.size() > static_cast<std::size_t>(opt.stagnation_window)) {
            const double f_old = recent[recent.size() - 1 - static_cast<std::size_t>(opt.stagnation_window)];
            if (f_old > 0 && (f_old - scalar_to_double(st.f)) < opt.stagnation_threshold * f_old)
                return RunOutcome::kStagnant;
        }
    }
}

enum class MinimizeStatus { kConverged, kStalled, kIterationLimit };

inline const char* to_string(MinimizeStatus s) {
    switch (s) {
        case MinimizeStatus::kConverged: return "converged";
        case MinimizeStatus::kStalled: return "stalled";
        default: return "iteration-limit";
    }
}

/// Interchange precision for parameter vectors moving across ladder rungs.
using PackedScalar = Expansion<8>;

struct MinimizeResult {
    std::vector<PackedScalar> x;
    double f = 0;
    MinimizeStatus status = MinimizeStatus::kStalled;
    long iterations = 0;
    int final_limbs = 1;
};

namespace detail {

template <typename S>
std::vector<S> unpack_params(const std::vector<PackedScalar>& x);

template <>
inline std::vector<double> unpack_params<double>(const std::vector<PackedScalar>& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].to_double();
    return out;
}

template <typename S>
std::vector<S> unpack_params(const std::vector<PackedScalar>& x) {
    std::vector<S> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = convert<S::kLimbs, 8>(x[i]);
    return out;
}

inline PackedScalar pack_param(double v) { return PackedScalar(v); }
template <int K>
PackedScalar pack_param(const Expansion<K>& v) {
    return convert<8, K>(v);
}

/// Objective adapter binding a program and a per-call workspace.
template <typename S>
struct ResidualObjective {
    const EvaluationProgram* prog;
    Workspace<S> ws;

    explicit ResidualObjective(const EvaluationProgram& p) : prog(&p), ws(p) {}
    S value(std::span<const S> x) { return residual(*prog, x, ws); }
    S value_and_gradient(std::span<const S> x, std::span<S> g) {
        return residual_gradient(*prog, x, ws, g);
    }
};

template <typename S>
RunOutcome run_rung(const EvaluationProgram& prog, std::vector<PackedScalar>& x_master,
                    const SearchOptions& opt, long budget, double threshold, int limbs_label,
                    long& used, double& f_out) {
    ResidualObjective<S> obj(prog);
    auto st = BfgsState<S>::start(unpack_params<S>(x_master), obj);
    const RunOutcome out = bfgs_run(st, obj, opt, budget, threshold, limbs_label, used);
    for (std::size_t i = 0; i < x_master.size(); ++i) x_master[i] = pack_param(st.x[i]);
    f_out = scalar_to_double(st.f);
    return out;
}

inline RunOutcome run_rung_dispatch(int limbs, const EvaluationProgram& prog,
                                    std::vector<PackedScalar>& x, const SearchOptions& opt,
                                    long budget, double threshold, long& used, double& f_out) {
    switch (limbs) {
        case 1: return run_rung<double>(prog, x, opt, budget, threshold, limbs, used, f_out);
        case 2: return run_rung<Expansion<2>>(prog, x, opt, budget, threshold, limbs, used, f_out);
        case 3: return run_rung<Expansion<3>>(prog, x, opt, budget, threshold, limbs, used, f_out);
        case 4: return run_rung<Expansion<4>>(prog, x, opt, budget, threshold, limbs, used, f_out);
        case 5: return run_rung<Expansion<5>>(prog, x, opt, budget, threshold, limbs, used, f_out);
        case 6: return run_rung<Expansion<6>>(prog, x, opt, budget, threshold, limbs, used, f_out);
        case 7: return run_rung<Expansion<7>>(prog, x, opt, budget, threshold, limbs, used, f_out);
        default: return run_rung<Expansion<8>>(prog, x, opt, budget, threshold, limbs, used, f_out);
    }
}

}  // namespace detail

/**
 * Minimize R over the options' precision ladder: run BFGS at each rung,
 * escalating on stagnation (or to confirm a sub-threshold value at the next
 * rung), ending converged only when the final rung's value sits below its
 * success threshold.  H restarts at the identity on each escalation.
 */
inline MinimizeResult bfgs_minimize_packed(std::vector<PackedScalar> x0,
                                           const EvaluationProgram& prog,
                                           const SearchOptions& opt) {
    opt.validate();
    if (static_cast<int>(x0.size()) != prog.parameter_count())
        throw std::invalid_argument("bfgs_minimize: parameter vector has wrong length");
    MinimizeResult res;
    res.x = std::move(x0);
    long remaining = opt.max_iterations;
    for (std::size_t ri = 0; ri < opt.ladder.size(); ++ri) {
        const int limbs = opt.ladder[ri];
        const double threshold = opt.success_threshold(limbs);
        long used = 0;
        const RunOutcome out = detail::run_rung_dispatch(limbs, prog, res.x, opt, remaining,
                                                         threshold, used, res.f);
        remaining -= used;
        res.iterations += used;
        res.final_limbs = limbs;
        (void)threshold;
        if (out == RunOutcome::kBudget) {
            res.status = MinimizeStatus::kIterationLimit;
            return res;
        }
        if (ri + 1 == opt.ladder.size()) {
            res.status = out == RunOutcome::kHitThreshold ? MinimizeStatus::kConverged
                                                          : MinimizeStatus::kStalled;
            return res;
        }
        // Not the last rung: escalate, whether we hit this rung's threshold
        // (confirm and polish at higher precision) or stagnated at it.
    }
    return res;  // unreachable; ladder is non-empty
}

inline MinimizeResult bfgs_minimize(std::span<const double> x0, const EvaluationProgram& prog,
                                    const SearchOptions& opt) {
    std::vector<PackedScalar> packed(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) packed[i] = PackedScalar(x0[i]);
    return bfgs_minimize_packed(std::move(packed), prog, opt);
}

/// Uniform [0,1) draws from a seeded mt19937_64, bit-stable across platforms.
inline std::vector<double> random_start(std::uint64_t seed, int n) {
    std::mt19937_64 rng(seed);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return x;
}

struct CandidateOutcome {
    std::uint64_t seed = 0;
    MinimizeResult result;
};

/**
 * Phase one of the search: `count` independent BFGS runs from seeded uniform
 * starts at the ladder's lowest precision, ranked by final objective value
 * (ties broken by seed).  Candidate i uses seed options.seed + i.  Runs are
 * distributed over threads; results do not depend on the schedule.
 */
inline std::vector<CandidateOutcome> search_batch(int count, const EvaluationProgram& prog,
                                                  const SearchOptions& opt) {
    if (count < 1) throw std::invalid_argument("search_batch: count must be >= 1");
    opt.validate();
    SearchOptions phase1 = opt;
    phase1.ladder = {opt.ladder.front()};
    phase1.log = nullptr;  // per-iteration logging is not meaningful across a batch

    std::vector<CandidateOutcome> out(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    const unsigned hw = std::thread::hardware_concurrency();
    const int nthreads = opt.threads > 0 ? opt.threads : static_cast<int>(hw > 0 ? hw : 1);
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(i);
            const auto x0 = random_start(seed, prog.parameter_count());
            out[static_cast<std::size_t>(i)] =
                CandidateOutcome{seed, bfgs_minimize(x0, prog, phase1)};
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::sort(out.begin(), out.end(), [](const CandidateOutcome& a, const CandidateOutcome& b) {
        if (a.result.f != b.result.f) return a.result.f < b.result.f;
        return a.seed < b.seed;
    });
    return out;
}

/// Phase two: re-run the top ceil(fraction·count) candidates over the full
/// ladder, continuing from their phase-one points.  Re-ranks the batch.
inline void promote_batch(std::vector<CandidateOutcome>& batch, double fraction,
                          const EvaluationProgram& prog, const SearchOptions& opt) {
    if (fraction <= 0 || batch.empty()) return;
    const std::size_t m = std::min(
        batch.size(),
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(batch.size()))));
    std::atomic<std::size_t> next{0};
    const unsigned hw = std::thread::hardware_concurrency();
    const int nthreads = opt.threads > 0 ? opt.threads : static_cast<int>(hw > 0 ? hw : 1);
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= m) return;
            batch[i].result = bfgs_minimize_packed(batch[i].result.x, prog, opt);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    std::sort(batch.begin(), batch.end(), [](const CandidateOutcome& a, const CandidateOutcome& b) {
        if (a.result.f != b.result.f) return a.result.f < b.result.f;
        return a.seed < b.seed;
    });
}

enum class RefineStatus { kStationary, kImproved, kRestorationFailed };

template <typename S>
struct RefineOutcome {
    std::vector<S> x;
    S error_value{};
    RefineStatus status = RefineStatus::kStationary;
    long accepted_steps = 0;
};

/**
 * Minimize E on the solution variety R = 0 by projected gradient steps with
 * restoration: step along the component of −∇E orthogonal to the row space
 * of the condition Jacobian (rank decided by options.rank_tolerance relative
 * to the largest singular value), line-search on E, then pull R back below
 * its threshold with BFGS whenever the step left the variety.  Iterates are
 * accepted only when E strictly decreases and R is feasible; the loop stops
 * when the relative improvement drops below options.refine_stop_rel.
 */
template <typename S>
RefineOutcome<S> refine_error(std::span<const S> x0, const EvaluationProgram& prog,
                              const SearchOptions& opt,
                              const std::function<void(long, double, double)>& accepted_cb = {}) {
    opt.validate();
    if (!prog.has_error_order())
        throw std::invalid_argument("refine_error: program built without the error order");
    const int limbs = ScalarTraits<S>::kLimbs;
    const double threshold = opt.success_threshold(limbs);

    Workspace<S> ws(prog);
    RefineOutcome<S> out;
    out.x.assign(x0.begin(), x0.end());
    if (!(scalar_to_double(residual(prog, std::span<const S>(out.x), ws)) < threshold))
        throw std::invalid_argument("refine_error: starting point is not a root of R");
    out.error_value = error_norm(prog, std::span<const S>(out.x), ws);

    const std::size_t n = out.x.size();
    const std::size_t m = prog.conditions().size();
    std::vector<S> ge(n), d(n);
    const double stat_tol = std::sqrt(ScalarTraits<S>::epsilon());

    for (long iter = 0; iter < opt.refine_max_iterations; ++iter) {
        const std::vector<S> jac = condition_jacobian(prog, std::span<const S>(out.x), ws);
        Matrix<S> jm(static_cast<int>(m), static_cast<int>(n));
        jm.a = jac;
        error_gradient(prog, std::span<const S>(out.x), ws, std::span<S>(ge));

        const auto svd = jacobi_svd_right(std::move(jm));
        for (std::size_t i = 0; i < n; ++i) d[i] = -ge[i];
        project_onto_nullspace(svd, opt.rank_tolerance, std::span<S>(d));

        const double dn = scalar_to_double(norm2(std::span<const S>(d)));
        const double gn = scalar_to_double(norm2(std::span<const S>(ge)));
        if (dn <= stat_tol * (1.0 + gn)) {
            if (out.accepted_steps > 0) out.status = RefineStatus::kImproved;
            return out;
        }

        auto e_value = [&](std::span<const S> xs) { return error_norm(prog, xs, ws); };
        const auto ls = quadratic_line_search(e_value, std::span<const S>(out.x),
                                              std::span<const S>(d), out.error_value);
        if (!ls) {
            if (out.accepted_steps > 0) out.status = RefineStatus::kImproved;
            return out;
        }

        std::vector<S> trial(n);
        for (std::size_t i = 0; i < n; ++i) trial[i] = out.x[i] + ls->step * d[i];

        if (!(scalar_to_double(residual(prog, std::span<const S>(trial), ws)) < threshold)) {
            detail::ResidualObjective<S> obj(prog);
            auto st = BfgsState<S>::start(trial, obj);
            long used = 0;
            SearchOptions ropt = opt;
            ropt.log = nullptr;
            bfgs_run(st, obj, ropt, 500, threshold, limbs, used);
            if (!(scalar_to_double(st.f) < threshold)) {
                out.status = RefineStatus::kRestorationFailed;
                return out;
            }
            trial = std::move(st.x);
        }

        const S e_new = error_norm(prog, std::span<const S>(trial), ws);
        if (!(e_new < out.error_value)) {
            if (out.accepted_steps > 0) out.status = RefineStatus::kImproved;
            return out;
        }
        const double rel =
            (scalar_to_double(out.error_value) - scalar_to_double(e_new)) /
            scalar_to_double(out.error_value);
        out.x = std::move(trial);
        out.error_value = e_new;
        ++out.accepted_steps;
        out.status = RefineStatus::kImproved;
        if (accepted_cb)
            accepted_cb(out.accepted_steps, std::sqrt(scalar_to_double(out.error_value)),
                        scalar_to_double(residual(prog, std::span<const S>(out.x), ws)));
        if (rel < opt.refine_stop_rel) return out;
    }
    return out;
}

}  // namespace rkforge

#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "rkforge/program.hpp"
#include "rkforge/scalar.hpp"

namespace rkforge {

/**
 * Per-thread evaluation scratch for one program and one scalar type.
 * Register storage follows the program's nonzero-suffix layout; the
 * right-hand sides 1/τ! and the 1/σ² error weights are converted to S once
 * here.  No allocation happens during evaluation.
 */
template <typename S>
class Workspace {
public:
    explicit Workspace(const EvaluationProgram& prog)
        : reg(static_cast<std::size_t>(prog.storage_size())),
          dreg(static_cast<std::size_t>(prog.storage_size())),
          defect(prog.conditions().size()),
          err_defect(prog.error_conditions().size()) {
        rhs.reserve(prog.conditions().size());
        for (const Condition& c : prog.conditions())
            rhs.push_back(scalar_from_ratio<S>(1, c.rhs_den));
        err_rhs.reserve(prog.error_conditions().size());
        err_inv_sigma2.reserve(prog.error_conditions().size());
        for (const Condition& c : prog.error_conditions()) {
            err_rhs.push_back(scalar_from_ratio<S>(1, c.rhs_den));
            const S inv_sigma = scalar_from_ratio<S>(1, c.sigma);
            err_inv_sigma2.push_back(inv_sigma * inv_sigma);
        }
    }

    std::vector<S> reg;
    std::vector<S> dreg;
    std::vector<S> defect;
    std::vector<S> err_defect;
    std::vector<S> rhs;
    std::vector<S> err_rhs;
    std::vector<S> err_inv_sigma2;
};

namespace detail {

template <typename S>
void eval_registers(const EvaluationProgram& prog, std::span<const S> x, std::vector<S>& reg) {
    const int s = prog.stages();
    const auto& regs = prog.registers();
    const S one = scalar_from_ratio<S>(1, 1);
    for (int i = 0; i < regs[0].stored; ++i) reg[static_cast<std::size_t>(regs[0].offset + i)] = one;
    for (std::size_t r = 1; r < regs.size(); ++r) {
        const WeightSpec& w = regs[r];
        if (w.op == WeightOp::kMatVec) {
            const WeightSpec& src = regs[static_cast<std::size_t>(w.arg0)];
            for (int i = w.leading_zeros; i < s; ++i) {
                S acc{};
                for (int j = src.leading_zeros; j < i; ++j)
                    acc += x[static_cast<std::size_t>(prog.a_index(i, j))] *
                           reg[static_cast<std::size_t>(src.offset + j - src.leading_zeros)];
                reg[static_cast<std::size_t>(w.offset + i - w.leading_zeros)] = acc;
            }
        } else {
            const WeightSpec& lhs = regs[static_cast<std::size_t>(w.arg0)];
            const WeightSpec& rhs2 = regs[static_cast<std::size_t>(w.arg1)];
            for (int i = w.leading_zeros; i < s; ++i)
                reg[static_cast<std::size_t>(w.offset + i - w.leading_zeros)] =
                    reg[static_cast<std::size_t>(lhs.offset + i - lhs.leading_zeros)] *
                    reg[static_cast<std::size_t>(rhs2.offset + i - rhs2.leading_zeros)];
        }
    }
}

template <typename S>
S dot_with_b(const EvaluationProgram& prog, std::span<const S> x, const std::vector<S>& reg,
             const WeightSpec& w) {
    const int s = prog.stages();
    S acc{};
    for (int i = w.leading_zeros; i < s; ++i)
        acc += x[static_cast<std::size_t>(prog.b_index(i))] *
               reg[static_cast<std::size_t>(w.offset + i - w.leading_zeros)];
    return acc;
}

template <typename S>
void compute_defects(const EvaluationProgram& prog, std::span<const S> x, Workspace<S>& ws,
                     bool with_error) {
    if (x.size() != static_cast<std::size_t>(prog.parameter_count()))
        throw std::invalid_argument("objective: parameter vector has wrong length");
    eval_registers(prog, x, ws.reg);
    const auto& regs = prog.registers();
    const auto& conds = prog.conditions();
    for (std::size_t c = 0; c < conds.size(); ++c)
        ws.defect[c] =
            dot_with_b(prog, x, ws.reg, regs[static_cast<std::size_t>(conds[c].reg)]) - ws.rhs[c];
    if (with_error) {
        const auto& errs = prog.error_conditions();
        for (std::size_t c = 0; c < errs.size(); ++c)
            ws.err_defect[c] =
                dot_with_b(prog, x, ws.reg, regs[static_cast<std::size_t>(errs[c].reg)]) -
                ws.err_rhs[c];
    }
}

// Dual part of every register for the seed direction e_q, reusing the real
// parts already in ws.reg: the shared real pass runs once per point, not
// once per seed.
template <typename S>
void dual_pass(const EvaluationProgram& prog, std::span<const S> x, Workspace<S>& ws, int q) {
    const int s = prog.stages();
    const auto& regs = prog.registers();
    const bool seed_in_a = q < prog.matrix_entry_count();
    const int qi = seed_in_a ? prog.a_row(q) : -1;
    const int qj = seed_in_a ? prog.a_col(q) : -1;
    for (int i = 0; i < regs[0].stored; ++i) ws.dreg[static_cast<std::size_t>(regs[0].offset + i)] = S{};
    for (std::size_t r = 1; r < regs.size(); ++r) {
        const WeightSpec& w = regs[r];
        if (w.op == WeightOp::kMatVec) {
            const WeightSpec& src = regs[static_cast<std::size_t>(w.arg0)];
            for (int i = w.leading_zeros; i < s; ++i) {
                S acc{};
                for (int j = src.leading_zeros; j < i; ++j)
                    acc += x[static_cast<std::size_t>(prog.a_index(i, j))] *
                           ws.dreg[static_cast<std::size_t>(src.offset + j - src.leading_zeros)];
                if (i == qi && qj >= src.leading_zeros && qj < i)
                    acc += ws.reg[static_cast<std::size_t>(src.offset + qj - src.leading_zeros)];
                ws.dreg[static_cast<std::size_t>(w.offset + i - w.leading_zeros)] = acc;
            }
        } else {
            const WeightSpec& lhs = regs[static_cast<std::size_t>(w.arg0)];
            const WeightSpec& rhs2 = regs[static_cast<std::size_t>(w.arg1)];
            for (int i = w.leading_zeros; i < s; ++i) {
                const std::size_t li = static_cast<std::size_t>(lhs.offset + i - lhs.leading_zeros);
                const std::size_t ri = static_cast<std::size_t>(rhs2.offset + i - rhs2.leading_zeros);
                ws.dreg[static_cast<std::size_t>(w.offset + i - w.leading_zeros)] =
                    ws.dreg[li] * ws.reg[ri] + ws.reg[li] * ws.dreg[ri];
            }
        }
    }
}

/// d(b·Φ_A(τ))/dx_q given a completed dual pass for seed q.
template <typename S>
S dual_condition_value(const EvaluationProgram& prog, std::span<const S> x, Workspace<S>& ws,
                       const WeightSpec& w, int q) {
    const int s = prog.stages();
    S acc{};
    for (int i = w.leading_zeros; i < s; ++i)
        acc += x[static_cast<std::size_t>(prog.b_index(i))] *
               ws.dreg[static_cast<std::size_t>(w.offset + i - w.leading_zeros)];
    const int qb = q - prog.matrix_entry_count();
    if (qb >= w.leading_zeros && qb < s)
        acc += ws.reg[static_cast<std::size_t>(w.offset + qb - w.leading_zeros)];
    return acc;
}

}  // namespace detail

/// R_{p,s}(x) = Σ_{|τ| ≤ p} (b·Φ_A(τ) − 1/τ!)².
template <typename S>
S residual(const EvaluationProgram& prog, std::span<const S> x, Workspace<S>& ws) {
    detail::compute_defects(prog, x, ws, false);
    S acc{};
    for (const S& d : ws.defect) acc += d * d;
    return acc;
}

/// E_{p,s}(x) = Σ_{|τ| = p+1} (1/σ(τ)²)(b·Φ_A(τ) − 1/τ!)².
template <typename S>
S error_norm(const EvaluationProgram& prog, std::span<const S> x, Workspace<S>& ws) {
    if (!prog.has_error_order())
        throw std::invalid_argument("error_norm: program built without the error order");
    detail::compute_defects(prog, x, ws, true);
    S acc{};
    for (std::size_t c = 0; c < ws.err_defect.size(); ++c)
        acc += ws.err_inv_sigma2[c] * ws.err_defect[c] * ws.err_defect[c];
    return acc;
}

/// Defects b·Φ_A(τ) − 1/τ! in program condition order; the residual is the
/// sum of their squares by construction.
template <typename S>
std::vector<S> condition_values(const EvaluationProgram& prog, std::span<const S> x,
                                Workspace<S>& ws) {
    detail::compute_defects(prog, x, ws, false);
    return ws.defect;
}

/// Defects of the order-(p+1) conditions, aligned with program.error_conditions().
template <typename S>
std::vector<S> error_condition_values(const EvaluationProgram& prog, std::span<const S> x,
                                      Workspace<S>& ws) {
    if (!prog.has_error_order())
        throw std::invalid_argument("error_condition_values: program built without the error order");
    detail::compute_defects(prog, x, ws, true);
    return ws.err_defect;
}

/// Value and gradient of R by one shared real pass plus one dual pass per
/// parameter; the value is the same accumulation residual() performs.
template <typename S>
S residual_gradient(const EvaluationProgram& prog, std::span<const S> x, Workspace<S>& ws,
                    std::span<S> grad) {
    if (grad.size() != x.size()) throw std::invalid_argument("residual_gradient: bad gradient size");
    detail::compute_defects(prog, x, ws, false);
    S value{};
    for (const S& d : ws.defect) value += d * d;
    const auto& regs = prog.registers();
    const auto& conds = prog.conditions();
    for (std::size_t q = 0; q < x.size(); ++q) {
        detail::dual_pass(prog, x, ws, static_cast<int>(q));
        S acc{};
        for (std::size_t c = 0; c < conds.size(); ++c) {
            const S dg = detail::dual_condition_value(
                prog, x, ws, regs[static_cast<std::size_t>(conds[c].reg)], static_cast<int>(q));
            acc += ws.defect[c] * dg;
        }
        grad[q] = acc + acc;
    }
    return value;
}

/// Value and gradient of E over the order-(p+1) conditions.
template <typename S>
S error_gradient(const EvaluationProgram& prog, std::span<const S> x, Workspace<S>& ws,
                 std::span<S> grad) {
    if (!prog.has_error_order())
        throw std::invalid_argument("error_gradient: program built without the error order");
    if (grad.size() != x.size()) throw std::invalid_argument("error_gradient: bad gradient size");
    detail::compute_defects(prog, x, ws, true);
    S value{};
    for (std::size_t c = 0; c < ws.err_defect.size(); ++c)
        value += ws.err_inv_sigma2[c] * ws.err_defect[c] * ws.err_defect[c];
    const auto& regs = prog.registers();
    const auto& errs = prog.error_conditions();
    for (std::size_t q = 0; q < x.size(); ++q) {
        detail::dual_pass(prog, x, ws, static_cast<int>(q));
        S acc{};
        for (std::size_t c = 0; c < errs.size(); ++c) {
            const S dg = detail::dual_condition_value(
                prog, x, ws, regs[static_cast<std::size_t>(errs[c].reg)], static_cast<int>(q));
            acc += ws.err_inv_sigma2[c] * ws.err_defect[c] * dg;
        }
        grad[q] = acc + acc;
    }
    return value;
}

/// Jacobian of the condition values b·Φ_A(τ), row-major conditions × parameters.
/// ∇R = 2·Jᵀ·defects holds against residual_gradient.
template <typename S>
std::vector<S> condition_jacobian(const EvaluationProgram& prog, std::span<const S> x,
                                  Workspace<S>& ws) {
    detail::compute_defects(prog, x, ws, false);
    const auto& regs = prog.registers();
    const auto& conds = prog.conditions();
    const std::size_t n = x.size();
    std::vector<S> jac(conds.size() * n);
    for (std::size_t q = 0; q < n; ++q) {
        detail::dual_pass(prog, x, ws, static_cast<int>(q));
        for (std::size_t c = 0; c < conds.size(); ++c)
            jac[c * n + q] = detail::dual_condition_value(
                prog, x, ws, regs[static_cast<std::size_t>(conds[c].reg)], static_cast<int>(q));
    }
    return jac;
}

}  // namespace rkforge

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rkforge/tree.hpp"

namespace rkforge {

/// How one register's Butcher weight is produced.
enum class WeightOp : std::uint8_t {
    kOnes,      ///< the trivial weight Φ(•) = 𝟙
    kMatVec,    ///< A · reg[arg0]
    kElemWise,  ///< reg[arg0] ⊙ reg[arg1]
};

/// One Butcher weight, stored as its nonzero suffix.
struct WeightSpec {
    WeightOp op = WeightOp::kOnes;
    int arg0 = -1;
    int arg1 = -1;
    int order = 1;          ///< order of the tree this weight belongs to
    int leading_zeros = 0;  ///< = height(τ); entries at indices < this are identically zero
    int offset = 0;         ///< start of this register's suffix in the workspace buffer
    int stored = 0;         ///< suffix length, max(0, s - leading_zeros)
};

/// One order condition b·Φ_A(τ) = 1/τ!.
struct Condition {
    int reg = 0;               ///< register holding Φ_A(τ)
    std::int64_t rhs_den = 1;  ///< τ!, so the right-hand side is 1/rhs_den
    std::int64_t sigma = 1;    ///< σ(τ)
    int order = 1;
    std::string tree;  ///< bracket notation, for reports
};

/**
 * Sliced instruction DAG computing every Butcher weight Φ_A(τ) for trees of
 * order ≤ p (and order p+1 when built with the error order).
 *
 * Registers are grouped into slices by tree order; every instruction reads
 * only registers from strictly earlier slices, so the registers of one slice
 * are independent of each other.  Each tree of order ≤ max appears exactly
 * once: a one-legged tree [τ'] is a mat-vec from τ', and a multi-legged tree
 * splits as [τ₁] ⊙ [τ₂,…,τ_m], both operands being canonical trees of lower
 * order that the table already contains.
 *
 * The parameter vector packs the strictly-lower-triangular rows of A in
 * row-major order followed by b, s(s+1)/2 scalars in total.
 */
class EvaluationProgram {
public:
    EvaluationProgram(int p, int s, bool include_error_order)
        : order_(p), stages_(s) {
        if (p < 1) throw std::invalid_argument("build_program: p must be >= 1");
        if (s < 1) throw std::invalid_argument("build_program: s must be >= 1");
        const int max_order = include_error_order ? p + 1 : p;
        if (max_order > kMaxTreeOrder)
            throw std::invalid_argument("build_program: tree order cap exceeded");

        auto groups = enumerate_trees(max_order);
        std::unordered_map<std::string, int> index;
        slice_begin_.assign(static_cast<std::size_t>(max_order) + 1, 0);

        for (int n = 1; n <= max_order; ++n) {
            slice_begin_[static_cast<std::size_t>(n - 1)] = static_cast<int>(registers_.size());
            for (const RootedTree& tau : groups[static_cast<std::size_t>(n - 1)]) {
                WeightSpec w;
                w.order = n;
                w.leading_zeros = tau.height();
                if (n == 1) {
                    w.op = WeightOp::kOnes;
                } else if (tau.legs().size() == 1) {
                    w.op = WeightOp::kMatVec;
                    w.arg0 = index.at(tau.legs()[0].key());
                } else {
                    auto legs = tau.legs();
                    w.op = WeightOp::kElemWise;
                    RootedTree first(std::vector<RootedTree>{legs[0]});
                    RootedTree rest(std::vector<RootedTree>(legs.begin() + 1, legs.end()));
                    w.arg0 = index.at(first.key());
                    w.arg1 = index.at(rest.key());
                }
                w.offset = storage_;
                w.stored = std::max(0, s - w.leading_zeros);
                storage_ += w.stored;

                const int reg = static_cast<int>(registers_.size());
                index.emplace(tau.key(), reg);
                registers_.push_back(w);

                Condition c;
                c.reg = reg;
                c.rhs_den = density(tau);
                c.sigma = symmetry(tau);
                c.order = n;
                c.tree = tau.display();
                if (n <= p) {
                    conditions_.push_back(std::move(c));
                } else {
                    error_conditions_.push_back(std::move(c));
                }
            }
        }
        slice_begin_[static_cast<std::size_t>(max_order)] = static_cast<int>(registers_.size());

        a_rows_.reserve(static_cast<std::size_t>(matrix_entry_count()));
        a_cols_.reserve(static_cast<std::size_t>(matrix_entry_count()));
        for (int i = 1; i < s; ++i)
            for (int j = 0; j < i; ++j) {
                a_rows_.push_back(i);
                a_cols_.push_back(j);
            }
    }

    int order() const { return order_; }
    int stages() const { return stages_; }
    bool has_error_order() const { return !error_conditions_.empty(); }

    int parameter_count() const { return stages_ * (stages_ + 1) / 2; }
    int matrix_entry_count() const { return stages_ * (stages_ - 1) / 2; }

    const std::vector<WeightSpec>& registers() const { return registers_; }
    const std::vector<Condition>& conditions() const { return conditions_; }
    const std::vector<Condition>& error_conditions() const { return error_conditions_; }

    /// Total scalar slots needed for all register suffixes.
    int storage_size() const { return storage_; }

    /// Registers of slice n (trees of order n) are [slice_begin(n), slice_end(n)).
    int slice_begin(int n) const { return slice_begin_[static_cast<std::size_t>(n - 1)]; }
    int slice_end(int n) const { return slice_begin_[static_cast<std::size_t>(n)]; }

    /// Row-major index of a_{ij} (0-based, j < i) in the parameter vector.
    int a_index(int i, int j) const { return i * (i - 1) / 2 + j; }
    /// Index of b_i (0-based) in the parameter vector.
    int b_index(int i) const { return matrix_entry_count() + i; }
    /// Inverse of a_index for parameter k < matrix_entry_count().
    int a_row(int k) const { return a_rows_[static_cast<std::size_t>(k)]; }
    int a_col(int k) const { return a_cols_[static_cast<std::size_t>(k)]; }

    /// Conditions whose weight is identically zero for every strictly
    /// lower-triangular A (leading_zeros ≥ s): their defect is the constant
    /// −1/τ!, so no method with these (p, s) exists.
    std::vector<const Condition*> structural_barrier() const {
        std::vector<const Condition*> out;
        for (const Condition& c : conditions_)
            if (registers_[static_cast<std::size_t>(c.reg)].stored == 0) out.push_back(&c);
        return out;
    }

private:
    int order_;
    int stages_;
    int storage_ = 0;
    std::vector<WeightSpec> registers_;
    std::vector<Condition> conditions_;
    std::vector<Condition> error_conditions_;
    std::vector<int> slice_begin_;
    std::vector<int> a_rows_;
    std::vector<int> a_cols_;
};

inline EvaluationProgram build_program(int p, int s, bool include_error_order) {
    return EvaluationProgram(p, s, include_error_order);
}

}  // namespace rkforge

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rkforge {

/**
 * An isomorphism class of rooted trees, held in canonical form.
 *
 * A tree is the bracket of its legs (the subtrees hanging off the root).
 * Legs are kept sorted in a fixed total order, so two RootedTree values
 * compare equal exactly when the trees are isomorphic.  The canonical key
 * is a byte string: the tree's order followed by the keys of its legs in
 * ascending order.  Comparing keys bytewise coincides with the structural
 * order (smaller order first, then legs lexicographically).
 *
 * Copies are cheap; the node is shared and immutable.
 */
class RootedTree {
public:
    /// The single-vertex tree.
    RootedTree() : node_(leaf_node()) {}

    /// Bracket of the given legs.  The legs are sorted into canonical order.
    explicit RootedTree(std::vector<RootedTree> legs) {
        std::sort(legs.begin(), legs.end());
        auto n = std::make_shared<Node>();
        n->order = 1;
        n->height = 0;
        for (const RootedTree& leg : legs) {
            n->order += leg.order();
            n->height = std::max(n->height, leg.height() + 1);
        }
        n->key.reserve(static_cast<std::size_t>(n->order));
        n->key.push_back(static_cast<char>(n->order));
        for (const RootedTree& leg : legs) n->key += leg.key();
        n->legs = std::move(legs);
        node_ = std::move(n);
    }

    int order() const { return node_->order; }

    /// Edge-count depth of the deepest leaf; 0 for the single vertex.
    int height() const { return node_->height; }

    std::span<const RootedTree> legs() const { return node_->legs; }

    /// Canonical encoding; usable as a hash/map key.
    const std::string& key() const { return node_->key; }

    /// Bracket notation, e.g. "[[.],.]".
    std::string display() const {
        if (node_->legs.empty()) return ".";
        std::string out = "[";
        for (std::size_t i = 0; i < node_->legs.size(); ++i) {
            if (i > 0) out += ",";
            out += node_->legs[i].display();
        }
        out += "]";
        return out;
    }

    friend bool operator==(const RootedTree& a, const RootedTree& b) {
        return a.key() == b.key();
    }
    friend std::strong_ordering operator<=>(const RootedTree& a, const RootedTree& b) {
        return a.key() <=> b.key();
    }

private:
    struct Node {
        int order = 1;
        int height = 0;
        std::string key;
        std::vector<RootedTree> legs;
    };

    static std::shared_ptr<const Node> leaf_node() {
        static const std::shared_ptr<const Node> leaf = [] {
            auto n = std::make_shared<Node>();
            n->order = 1;
            n->height = 0;
            n->key.push_back(static_cast<char>(1));
            return n;
        }();
        return leaf;
    }

    std::shared_ptr<const Node> node_;
};

inline constexpr int kMaxTreeOrder = 16;

/**
 * All isomorphism classes of rooted trees of order 1..max_order.
 *
 * groups[n-1] holds the trees of order n, sorted by canonical key.
 * Order-n trees are generated as multisets of lower-order trees used as
 * legs (every tree is the bracket of its legs), so the enumeration is
 * exhaustive and duplicate-free by construction.
 */
inline std::vector<std::vector<RootedTree>> enumerate_trees(int max_order) {
    if (max_order < 1 || max_order > kMaxTreeOrder)
        throw std::invalid_argument("enumerate_trees: max_order must be in [1, 16]");

    std::vector<std::vector<RootedTree>> groups(static_cast<std::size_t>(max_order));
    groups[0].push_back(RootedTree{});

    // Pool of all trees of order < n, ascending by (order, key).
    std::vector<RootedTree> pool;
    for (int n = 2; n <= max_order; ++n) {
        for (const RootedTree& t : groups[static_cast<std::size_t>(n - 2)]) pool.push_back(t);

        std::vector<RootedTree> legs;
        auto recurse = [&](auto&& self, int remaining, std::size_t min_idx) -> void {
            if (remaining == 0) {
                groups[static_cast<std::size_t>(n - 1)].emplace_back(legs);
                return;
            }
            for (std::size_t i = min_idx; i < pool.size(); ++i) {
                if (pool[i].order() > remaining) break;  // pool is order-sorted
                legs.push_back(pool[i]);
                self(self, remaining - pool[i].order(), i);
                legs.pop_back();
            }
        };
        recurse(recurse, n - 1, 0);
    }
    return groups;
}

/// |T_n| for n = 1..max_order.
inline std::vector<std::int64_t> tree_counts(int max_order) {
    auto groups = enumerate_trees(max_order);
    std::vector<std::int64_t> counts;
    counts.reserve(groups.size());
    for (const auto& g : groups) counts.push_back(static_cast<std::int64_t>(g.size()));
    return counts;
}

/// Order of the automorphism group: product over distinct legs of m!·σ(leg)^m,
/// where m is the leg's multiplicity.
inline std::int64_t symmetry(const RootedTree& tree) {
    std::int64_t sigma = 1;
    auto legs = tree.legs();
    for (std::size_t i = 0; i < legs.size();) {
        std::size_t j = i;
        while (j < legs.size() && legs[j] == legs[i]) ++j;
        const std::int64_t s = symmetry(legs[i]);
        for (std::size_t m = 1; m <= j - i; ++m) sigma *= static_cast<std::int64_t>(m) * s;
        i = j;
    }
    return sigma;
}

/// Tree factorial: product over vertices of the order of the subtree rooted there.
inline std::int64_t density(const RootedTree& tree) {
    std::int64_t d = tree.order();
    for (const RootedTree& leg : tree.legs()) d *= density(leg);
    return d;
}

inline std::int64_t factorial(int n) {
    std::int64_t f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

/// Number of equivalence classes of rooted labelings: |τ|! / (τ!·σ(τ)).
inline std::int64_t alpha(const RootedTree& tree) {
    const std::int64_t fact = factorial(tree.order());
    const std::int64_t dens = density(tree);
    if (fact % dens != 0)
        throw std::logic_error("alpha: density does not divide |tau|!");
    const std::int64_t q = fact / dens;
    const std::int64_t sig = symmetry(tree);
    if (q % sig != 0)
        throw std::logic_error("alpha: symmetry does not divide |tau|!/tau!");
    return q / sig;
}

}  // namespace rkforge

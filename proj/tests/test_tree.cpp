#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "oracles.hpp"
#include "rkforge/rational.hpp"
#include "rkforge/tree.hpp"

using namespace rkforge;

namespace {

RootedTree leaf() { return RootedTree{}; }
RootedTree bracket(std::vector<RootedTree> legs) { return RootedTree(std::move(legs)); }

}  // namespace

TEST_CASE("tree census matches the known counts through order 12", "[tree]") {
    const auto counts = tree_counts(12);
    const std::vector<std::int64_t> expected = {1, 1, 2, 4, 9, 20, 48, 115, 286, 719, 1842, 4766};
    REQUIRE(counts == expected);
    std::int64_t cum = 0;
    for (std::size_t i = 0; i < 10; ++i) cum += counts[i];
    CHECK(cum == 1205);
    cum += counts[10] + counts[11];
    CHECK(cum == 7813);
}

TEST_CASE("enumerate_trees(1) is the single vertex", "[tree]") {
    const auto groups = enumerate_trees(1);
    REQUIRE(groups.size() == 1);
    REQUIRE(groups[0].size() == 1);
    CHECK(groups[0][0].order() == 1);
    CHECK(groups[0][0].height() == 0);
    CHECK(groups[0][0] == leaf());
}

TEST_CASE("enumerate_trees(4) group sizes", "[tree]") {
    const auto groups = enumerate_trees(4);
    REQUIRE(groups.size() == 4);
    CHECK(groups[0].size() == 1);
    CHECK(groups[1].size() == 1);
    CHECK(groups[2].size() == 2);
    CHECK(groups[3].size() == 4);
}

TEST_CASE("enumerate_trees rejects out-of-range orders", "[tree]") {
    CHECK_THROWS_AS(enumerate_trees(0), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_trees(17), std::invalid_argument);
}

TEST_CASE("enumeration yields canonical, distinct, key-sorted trees", "[tree]") {
    const auto groups = enumerate_trees(8);
    for (const auto& group : groups) {
        std::set<std::string> keys;
        for (const auto& t : group) keys.insert(t.key());
        CHECK(keys.size() == group.size());
        for (std::size_t i = 1; i < group.size(); ++i) CHECK(group[i - 1] < group[i]);
    }
}

TEST_CASE("order, height, and canonical equality", "[tree]") {
    // [[.],.] built in either leg order is the same canonical tree.
    const auto t1 = bracket({bracket({leaf()}), leaf()});
    const auto t2 = bracket({leaf(), bracket({leaf()})});
    CHECK(t1 == t2);
    CHECK(t1.order() == 4);
    CHECK(t1.height() == 2);
    CHECK(t1.display() == "[.,[.]]");
}

TEST_CASE("symmetry on pinned examples", "[tree]") {
    CHECK(symmetry(leaf()) == 1);
    CHECK(symmetry(bracket({leaf(), leaf()})) == 2);
    const auto four_legs =
        bracket({bracket({leaf()}), bracket({leaf()}), bracket({leaf()}), bracket({leaf()})});
    CHECK(symmetry(four_legs) == 24);
}

TEST_CASE("symmetry and alpha agree with brute force on small trees", "[tree]") {
    const auto groups = enumerate_trees(6);
    for (const auto& group : groups)
        for (const auto& t : group) {
            const auto flat = oracle::flatten(t);
            const auto sigma = oracle::brute_force_automorphisms(flat);
            CHECK(symmetry(t) == sigma);
            const auto labelings = oracle::brute_force_rooted_labelings(flat);
            REQUIRE(labelings % sigma == 0);
            CHECK(alpha(t) == labelings / sigma);
        }
}

TEST_CASE("density on pinned examples", "[tree]") {
    CHECK(density(leaf()) == 1);
    // Two three-leaf brooms on a common stem: 9 * 4^2 * 1^6 = 144.
    const auto broom = bracket({leaf(), leaf(), leaf()});
    const auto two_brooms = bracket({broom, broom});
    REQUIRE(two_brooms.order() == 9);
    CHECK(density(two_brooms) == 144);
    // Path on 4 vertices.
    const auto path4 = bracket({bracket({bracket({leaf()})})});
    CHECK(density(path4) == 24);
}

TEST_CASE("alpha on pinned examples", "[tree]") {
    const auto path3 = bracket({bracket({leaf()})});
    CHECK(alpha(path3) == 1);
    CHECK(alpha(bracket({bracket({leaf()}), leaf()})) == 3);
    CHECK(alpha(bracket({bracket({leaf()}), leaf(), leaf()})) == 6);
}

TEST_CASE("alpha * density * symmetry == order! exactly for every tree", "[tree]") {
    const auto groups = enumerate_trees(9);
    for (const auto& group : groups)
        for (const auto& t : group) {
            const BigInt lhs = BigInt(alpha(t)) * BigInt(density(t)) * BigInt(symmetry(t));
            BigInt fact = 1;
            for (int k = 2; k <= t.order(); ++k) fact *= k;
            CHECK(lhs == fact);
        }
}

TEST_CASE("sum of alpha over T_n equals (n-1)!", "[tree]") {
    const auto groups = enumerate_trees(9);
    for (int n = 1; n <= 9; ++n) {
        BigInt sum = 0;
        for (const auto& t : groups[static_cast<std::size_t>(n - 1)]) sum += alpha(t);
        BigInt fact = 1;
        for (int k = 2; k <= n - 1; ++k) fact *= k;
        CHECK(sum == fact);
    }
}

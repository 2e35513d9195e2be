#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "macrodim/lattice.hpp"
#include "macrodim/rng.hpp"
#include "macrodim/sampling.hpp"

using namespace macrodim;

namespace {

// independent scan: smallest k such that the box holds the point
int shell_of_scan(const LatticePoint& x) {
    for (int k = 0; k <= 62; ++k)
        if (in_box(x, k)) return k;
    return -1;
}

// independent scan for tree_dist: smallest level whose cube holds both cells
int tree_dist_scan(const LatticePoint& x, const LatticePoint& y, int k) {
    for (int n = 0; n <= k; ++n) {
        const DyadicCube q = cube_at(x, n);
        if (q.contains(y)) return k + 1 - n;
    }
    return 0;
}

}  // namespace

TEST_CASE("shell index basics") {
    CHECK(shell_of(LatticePoint{0, 0, 0}) == 0);
    CHECK(shell_of(LatticePoint{1, 0, 0}) == 1);
    CHECK(shell_of(LatticePoint{0, 0, 27}) == 5);
    CHECK(chain_length(LatticePoint{0, 0, 27}) == 6);

    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_below(3));
        LatticePoint x;
        for (int i = 0; i < d; ++i)
            x.coords.push_back(static_cast<Coord>(rng.next_u64() % 4096) - 2048);
        const int k = shell_of(x);
        CHECK(k == shell_of_scan(x));
        CHECK(in_box(x, k));
        if (k > 0) CHECK_FALSE(in_box(x, k - 1));
    }
}

TEST_CASE("cube chains") {
    const auto ch0 = cube_chain(LatticePoint{0, 0});
    REQUIRE(ch0.links.size() == 1);
    CHECK(ch0.links[0].level == 0);
    CHECK(ch0.links[0].corner == std::vector<Coord>{0, 0});

    const auto ch1 = cube_chain(LatticePoint{1, 0});
    REQUIRE(ch1.links.size() == 2);
    CHECK(ch1.links[0].level == 1);
    CHECK(ch1.links[0].corner == std::vector<Coord>{0, 0});  // [0,2)^2
    CHECK(ch1.links[1].corner == std::vector<Coord>{1, 0});

    const auto chm = cube_chain(LatticePoint{-1, -1});
    REQUIRE(chm.links.size() == 1);
    CHECK(chm.links[0].corner == std::vector<Coord>{-1, -1});

    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        LatticePoint x{static_cast<Coord>(rng.next_u64() % 512) - 256,
                       static_cast<Coord>(rng.next_u64() % 512) - 256};
        const auto ch = cube_chain(x);
        CHECK(static_cast<int>(ch.links.size()) == shell_of(x) + 1);
        for (std::size_t i = 0; i < ch.links.size(); ++i) {
            CHECK(ch.links[i].contains(x));
            if (i + 1 < ch.links.size()) {
                const auto kids = children(ch.links[i]);
                CHECK(std::find(kids.begin(), kids.end(), ch.links[i + 1]) != kids.end());
            }
        }
    }
}

TEST_CASE("tree metric") {
    CHECK(tree_dist(LatticePoint{3, 3}, LatticePoint{3, 3}) == shell_of(LatticePoint{3, 3}) + 1);
    // no dyadic interval straddles the origin
    CHECK(tree_dist(LatticePoint{-1}, LatticePoint{0}) == 0);
    CHECK(tree_dist(LatticePoint{2, 2}, LatticePoint{3, 3}) == 2);

    CHECK_THROWS_AS(tree_dist(LatticePoint{0, 0}, LatticePoint{5, 0}), std::invalid_argument);

    Rng rng(13);
    for (int trial = 0; trial < 800; ++trial) {
        const int k = static_cast<int>(rng.next_below(6));
        const LatticePoint x = random_point_in_shell(2, k, rng);
        const LatticePoint y = random_point_in_shell(2, k, rng);
        const int dxy = tree_dist(x, y);
        CHECK(dxy == tree_dist_scan(x, y, k));
        CHECK(dxy == tree_dist(y, x));
        CHECK(dxy >= 0);
        CHECK(dxy <= k + 1);
        if (dxy >= 1) CHECK(cube_at(x, k) == cube_at(y, k));
    }
}

TEST_CASE("total order") {
    CHECK(order_cmp(LatticePoint{0, 0}, LatticePoint{5, 0}) == Order::less);
    CHECK(order_cmp(LatticePoint{4, 4}, LatticePoint{4, 4}) == Order::equal);

    // exhaustive check on box(2) of Z^2: 64 points
    std::vector<LatticePoint> pts;
    for (Coord x = -4; x < 4; ++x)
        for (Coord y = -4; y < 4; ++y) pts.push_back(LatticePoint{x, y});
    REQUIRE(pts.size() == 64);
    int equal_count = 0;
    for (const auto& a : pts) {
        for (const auto& b : pts) {
            const Order ab = order_cmp(a, b);
            const Order ba = order_cmp(b, a);
            if (ab == Order::equal) {
                ++equal_count;
                CHECK(a == b);
                CHECK(ba == Order::equal);
            } else {
                CHECK(ab != ba);  // antisymmetry
            }
        }
    }
    CHECK(equal_count == 64);

    std::vector<LatticePoint> sorted = pts;
    std::sort(sorted.begin(), sorted.end(), PointLess{});
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        CHECK(order_cmp(sorted[i], sorted[i + 1]) == Order::less);
        CHECK(shell_of(sorted[i]) <= shell_of(sorted[i + 1]));
    }
    // spot transitivity on random triples (full cubic loop is slow)
    Rng rng(23);
    for (int t = 0; t < 20000; ++t) {
        const auto& a = pts[rng.next_below(64)];
        const auto& b = pts[rng.next_below(64)];
        const auto& c = pts[rng.next_below(64)];
        if (order_cmp(a, b) == Order::less && order_cmp(b, c) == Order::less)
            CHECK(order_cmp(a, c) == Order::less);
    }
}

TEST_CASE("cube subdivision") {
    DyadicCube q;
    q.level = 1;
    q.corner = {0, 0};
    const auto kids = children(q);
    REQUIRE(kids.size() == 4);
    std::set<std::vector<Coord>> corners;
    for (const auto& c : kids) {
        CHECK(c.level == 0);
        corners.insert(c.corner);
    }
    CHECK(corners == std::set<std::vector<Coord>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});

    DyadicCube big;
    big.level = 5;
    big.corner = {2, -1, 0};
    CHECK(children(big).size() == 8);

    DyadicCube leaf;
    leaf.level = 0;
    leaf.corner = {3, 3};
    CHECK_THROWS_AS(children(leaf), std::invalid_argument);

    // partition property: children tile the parent, each point in exactly one
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        DyadicCube parent;
        parent.level = 1 + static_cast<int>(rng.next_below(4));
        parent.corner = {static_cast<Coord>(rng.next_u64() % 16) - 8,
                         static_cast<Coord>(rng.next_u64() % 16) - 8};
        const auto cs = children(parent);
        for (int probe = 0; probe < 40; ++probe) {
            LatticePoint p{
                parent.corner[0] * (Coord{1} << parent.level) +
                    static_cast<Coord>(rng.next_below(std::uint64_t{1} << parent.level)),
                parent.corner[1] * (Coord{1} << parent.level) +
                    static_cast<Coord>(rng.next_below(std::uint64_t{1} << parent.level))};
            REQUIRE(parent.contains(p));
            int holders = 0;
            for (const auto& c : cs) holders += c.contains(p);
            CHECK(holders == 1);
        }
    }
}

TEST_CASE("box cardinality and rounding") {
    CHECK(box_point_count(0, 2) == 4);
    CHECK(box_point_count(3, 2) == 256);
    CHECK(box_point_count(2, 3) == 512);

    CHECK(round_to_lattice({0.5}) == LatticePoint{0});
    CHECK(round_to_lattice({-0.5}) == LatticePoint{-1});
    CHECK(round_to_lattice({1.5, 2.3, -2.7}) == LatticePoint{1, 2, -3});
}

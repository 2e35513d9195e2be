#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "macrodim/dimension.hpp"
#include "macrodim/experiments.hpp"
#include "macrodim/percolation.hpp"
#include "macrodim/sampling.hpp"

using namespace macrodim;

namespace {

std::vector<LatticePoint> random_shell_subset(int d, int k, std::size_t n, Rng& rng) {
    // clamp below the shell cardinality so rejection sampling terminates
    const std::size_t shell_size = static_cast<std::size_t>(
        box_point_count(k, d) - (k > 0 ? box_point_count(k - 1, d) : 0));
    n = std::min(n, shell_size / 2 + 1);
    std::vector<LatticePoint> cells;
    std::vector<std::uint64_t> seen;
    while (cells.size() < n) {
        LatticePoint p = random_point_in_shell(d, k, rng);
        const std::uint64_t key = point_key(p.coords);
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
            seen.push_back(key);
            cells.push_back(std::move(p));
        }
    }
    return cells;
}

std::vector<CoverTree> full_lattice_trees(int K) {
    // p = 1 keeps everything: the occupied tree of the whole shell
    const PercolationField f{0, 2};
    std::vector<CoverTree> trees;
    for (int k = 0; k <= K; ++k)
        trees.push_back(build_cover_tree_percolation(f, 1.0, k, std::int64_t{1} << 26));
    return trees;
}

}  // namespace

TEST_CASE("covering measure basics") {
    // single cell: the unit cube is the optimal cover
    for (int k : {0, 2, 5}) {
        LatticePoint x{(Coord{1} << k) - 1, 0};
        REQUIRE(shell_of(x) == k);
        for (double alpha : {0.4, 1.0, 1.7}) {
            const auto res = n_alpha(ShellCells{k, {x}}, alpha);
            CHECK(res.value == Catch::Approx(std::exp2(-alpha * (k + 1))).epsilon(1e-12));
            REQUIRE(res.cover.size() == 1);
            CHECK(res.cover[0].contains(x));
            CHECK(detail::brute_force_n_alpha({x}, k, alpha) ==
                  Catch::Approx(res.value).epsilon(1e-12));
        }
    }

    // empty input
    CHECK(n_alpha(ShellCells{3, {}}, 0.8).value == 0.0);
    CHECK_THROWS_AS(n_alpha(ShellCells{3, {}}, 0.0), std::invalid_argument);

    // full shells stay below the root-cover bound 2^{d-alpha}; exact equality
    // against brute force at k <= 2 (d = 2)
    for (int k : {1, 2}) {
        std::vector<LatticePoint> cells;
        const Coord r = Coord{1} << k;
        for (Coord x = -r; x < r; ++x)
            for (Coord y = -r; y < r; ++y)
                if (shell_of(LatticePoint{x, y}) == k) cells.push_back(LatticePoint{x, y});
        for (double alpha : {0.5, 1.2}) {
            const auto res = n_alpha(ShellCells{k, cells}, alpha, false);
            CHECK(res.value <= std::exp2(2.0 - alpha) + 1e-12);
            CHECK(res.value ==
                  Catch::Approx(detail::brute_force_n_alpha(cells, k, alpha)).epsilon(1e-9));
        }
    }
}

TEST_CASE("covering measure matches brute force on random subsets") {
    Rng rng(31);
    for (int inst = 0; inst < 12; ++inst) {
        const int k = 1 + inst % 3;
        const double alpha = 0.3 + 0.45 * (inst % 4);
        const auto cells = random_shell_subset(2, k, 4 + rng.next_below(20), rng);
        const auto res = n_alpha(ShellCells{k, cells}, alpha);
        CHECK(res.value ==
              Catch::Approx(detail::brute_force_n_alpha(cells, k, alpha)).epsilon(1e-9));
        // cover validity: every cell covered, claimed cost matches
        double cost = 0.0;
        for (const auto& q : res.cover) {
            CHECK(q.level <= k);
            cost += std::exp2(alpha * (q.level - k - 1));
        }
        CHECK(cost == Catch::Approx(res.value).epsilon(1e-9));
        for (const auto& c : cells) {
            bool covered = false;
            for (const auto& q : res.cover) covered = covered || q.contains(c);
            CHECK(covered);
        }
    }
}

TEST_CASE("covering measure monotonicity properties") {
    Rng rng(37);
    for (int inst = 0; inst < 10; ++inst) {
        const int k = 2 + inst % 2;
        auto cells_b = random_shell_subset(2, k, 20, rng);
        std::vector<LatticePoint> cells_a(cells_b.begin(), cells_b.begin() + 8);
        const double alpha = 0.4 + 0.3 * (inst % 5);
        const double na = n_alpha(ShellCells{k, cells_a}, alpha, false).value;
        const double nb = n_alpha(ShellCells{k, cells_b}, alpha, false).value;
        CHECK(na <= nb + 1e-12);  // monotone in the set

        // subadditive over a union
        auto cells_c = random_shell_subset(2, k, 12, rng);
        auto uni = cells_b;
        uni.insert(uni.end(), cells_c.begin(), cells_c.end());
        const double nc = n_alpha(ShellCells{k, cells_c}, alpha, false).value;
        const double nu = n_alpha(ShellCells{k, uni}, alpha, false).value;
        CHECK(nu <= nb + nc + 1e-12);

        // nonincreasing in alpha
        double prev = n_alpha(ShellCells{k, cells_b}, 0.2, false).value;
        for (double a2 = 0.4; a2 <= 2.4; a2 += 0.2) {
            const double cur = n_alpha(ShellCells{k, cells_b}, a2, false).value;
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("lazy percolation covering equals materialized") {
    for (int seed = 0; seed < 20; ++seed) {
        const PercolationField f{derive_stream(0x99, static_cast<std::uint64_t>(seed)), 2};
        for (int k : {3, 6, 8}) {
            const auto surv = survivor_cells(f, 0.6, k, 1 << 22);
            REQUIRE_FALSE(surv.truncated);
            const double direct =
                surv.cells.empty() ? 0.0
                                   : n_alpha(ShellCells{k, surv.cells}, 0.9, false).value;
            const double lazy = n_alpha_lazy_percolation(f, 0.6, k, 0.9).value;
            CHECK(lazy == direct);  // identical tree, identical arithmetic
        }
    }
    // empty shell
    const PercolationField f{4, 2};
    CHECK(n_alpha_lazy_percolation(f, 1e-12, 5, 0.7).value == 0.0);
    // p = 1 equals the full shell
    const auto full = survivor_cells(f, 1.0, 4, 1 << 22);
    CHECK(n_alpha_lazy_percolation(f, 1.0, 4, 1.1).value ==
          Catch::Approx(n_alpha(ShellCells{4, full.cells}, 1.1, false).value).epsilon(1e-12));
}

TEST_CASE("dimension estimators on reference sets") {
    // the full lattice: all four notions agree with d
    const auto trees = full_lattice_trees(10);
    const auto rep = dim_hausdorff_trees(trees, 0.02);
    CHECK(std::abs(rep.estimate - 2.0) <= 0.1);
    const auto rep_low = dim_hausdorff_lower_trees(trees, 0.02);
    CHECK(std::abs(rep_low.estimate - 2.0) <= 0.1);

    // one point per shell: dimension 0
    std::vector<ShellCells> sparse;
    for (int k = 0; k <= 12; ++k) {
        ShellCells sc;
        sc.shell = k;
        sc.cells.push_back(LatticePoint{(Coord{1} << k) - 1, 0});
        sparse.push_back(std::move(sc));
    }
    CHECK(dim_hausdorff(sparse, 0.02).estimate <= 0.05);
    CHECK(dim_hausdorff_lower(sparse, 0.02).estimate <= 0.05);

    // insufficient data signal
    std::vector<ShellCells> tiny(3);
    for (int k = 0; k < 3; ++k) tiny[static_cast<std::size_t>(k)].shell = k;
    CHECK(dim_hausdorff(tiny, 0.02).status == "insufficient_data");
}

TEST_CASE("estimator preserves set ordering") {
    for (int seed = 0; seed < 4; ++seed) {
        const PercolationField f{derive_stream(0xabc, static_cast<std::uint64_t>(seed)), 2};
        std::vector<CoverTree> small, big;
        for (int k = 0; k <= 10; ++k) {
            small.push_back(build_cover_tree_percolation(f, 0.55, k, 1 << 24));
            big.push_back(build_cover_tree_percolation(f, 0.85, k, 1 << 24));
        }
        const double ds = dim_hausdorff_trees(small, 0.02).estimate;
        const double db = dim_hausdorff_trees(big, 0.02).estimate;
        CHECK(ds <= db + 0.05);
        // lower dimension never exceeds the upper one beyond tolerance
        const double dl = dim_hausdorff_lower_trees(big, 0.02).estimate;
        CHECK(dl <= db + 2 * 0.02 + 1e-9);
    }
}

TEST_CASE("box growth estimators") {
    // full lattice: counts 2^{(n+1)d} give ratios d(n+1)/n, converging to d;
    // upper = the window-start value, lower = the window-end value
    std::vector<std::uint64_t> counts;
    for (int n = 0; n <= 12; ++n) counts.push_back(box_point_count(n, 2));
    const auto rep = minkowski_dims(counts);
    REQUIRE(rep.ok);
    CHECK(rep.upper == Catch::Approx(2.0 * 7 / 6));
    CHECK(rep.lower == Catch::Approx(2.0 * 13 / 12));
    CHECK(rep.upper >= rep.lower);

    // one point per shell: counts n+1, ratios shrink toward 0
    std::vector<std::uint64_t> slow;
    for (int n = 0; n <= 20; ++n) slow.push_back(static_cast<std::uint64_t>(n + 1));
    const auto rep2 = minkowski_dims(slow);
    REQUIRE(rep2.ok);
    CHECK(rep2.upper <= 0.4);
    CHECK(rep2.lower >= 0.0);
    CHECK(rep2.lower <= 0.25);

    // all-zero counts signal
    CHECK_FALSE(minkowski_dims(std::vector<std::uint64_t>(8, 0)).ok);
    // decreasing counts rejected
    CHECK_THROWS_AS(minkowski_dims(std::vector<std::uint64_t>{4, 2, 1}), std::invalid_argument);
}

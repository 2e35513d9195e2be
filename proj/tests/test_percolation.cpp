#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "macrodim/percolation.hpp"
#include "macrodim/rng.hpp"
#include "macrodim/sampling.hpp"

using namespace macrodim;

TEST_CASE("selection weights are deterministic uniforms") {
    const PercolationField field{0xfeedULL, 2};
    DyadicCube q;
    q.level = 1;
    q.corner = {0, -1};
    const double w1 = u_weight(field, 3, q);
    const double w2 = u_weight(field, 3, q);
    CHECK(w1 == w2);
    CHECK(w1 >= 0.0);
    CHECK(w1 < 1.0);
    // keyed by shell: same cube, different shell, different stream
    CHECK(u_weight(field, 3, q) != u_weight(field, 4, q));

    // mean of 1e5 distinct cube weights: 0.5 within 0.005
    double sum = 0.0;
    int n = 0;
    std::vector<int> bins(16, 0);
    for (Coord cx = -100; cx < 100; ++cx) {
        for (Coord cy = -250; cy < 250; ++cy) {
            DyadicCube c;
            c.level = 0;
            c.corner = {cx, cy};
            const double w = u_weight(field, 9, c);
            sum += w;
            ++bins[static_cast<std::size_t>(w * 16)];
            ++n;
        }
    }
    REQUIRE(n == 100000);
    CHECK(std::abs(sum / n - 0.5) < 0.005);
    // coarse uniformity: chi-square over 16 bins, df 15
    double chi2 = 0.0;
    for (int b : bins) chi2 += (b - 6250.0) * (b - 6250.0) / 6250.0;
    CHECK(chi2 < 60.0);

    // two seeds decorrelate: sample correlation below 0.03 over 1e4 cubes
    const PercolationField f2{0xbeefULL, 2};
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    int m = 0;
    for (Coord cx = -50; cx < 50; ++cx) {
        for (Coord cy = -50; cy < 50; ++cy) {
            DyadicCube c;
            c.level = 0;
            c.corner = {cx, cy};
            const double a = u_weight(field, 6, c);
            const double b = u_weight(f2, 6, c);
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
            ++m;
        }
    }
    const double cov = sxy / m - (sx / m) * (sy / m);
    const double rho = cov / std::sqrt((sxx / m - (sx / m) * (sx / m)) *
                                       (syy / m - (sy / m) * (sy / m)));
    CHECK(std::abs(rho) < 0.03);
}

TEST_CASE("weight validation") {
    const PercolationField field{1, 2};
    DyadicCube q;
    q.level = 4;
    q.corner = {0, 0};
    CHECK_THROWS_AS(u_weight(field, 3, q), std::invalid_argument);  // level > shell
    q.level = 1;
    q.corner = {4, 0};  // outside box(2) at level 1 (corner range is [-2, 2))
    CHECK_THROWS_AS(u_weight(field, 2, q), std::invalid_argument);
    DyadicCube q3;
    q3.level = 0;
    q3.corner = {0, 0, 0};
    CHECK_THROWS_AS(u_weight(field, 2, q3), std::invalid_argument);  // dimension mismatch
}

TEST_CASE("membership law and coupling") {
    const PercolationField field{77, 3};
    CHECK(contains(field, 1.0, LatticePoint{5, -3, 2}));  // p = 1 keeps everything
    CHECK_THROWS_AS(contains(field, 0.0, LatticePoint{0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(contains(field, 1.5, LatticePoint{0, 0, 0}), std::invalid_argument);

    // one-point law: x in shell 2, p = 0.5 -> p^3, within 4 sigma of 2e5 seeds
    const LatticePoint x{2, -3};
    REQUIRE(shell_of(x) == 2);
    const int trials = 200000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
        const PercolationField f{derive_stream(0xaaa, static_cast<std::uint64_t>(t)), 2};
        hits += contains(f, 0.5, x);
    }
    const double est = static_cast<double>(hits) / trials;
    const double target = 0.125;
    CHECK(std::abs(est - target) < 4.0 * std::sqrt(target * (1 - target) / trials));

    // two-point law: d(x,y) = 1 at k = 2 -> p^5
    const LatticePoint x2{2, 1};
    const LatticePoint y{3, 3};
    REQUIRE(shell_of(x2) == 2);
    REQUIRE(shell_of(y) == 2);
    REQUIRE(tree_dist(x2, y) == 1);
    int joint = 0;
    for (int t = 0; t < trials; ++t) {
        const PercolationField f{derive_stream(0xbbb, static_cast<std::uint64_t>(t)), 2};
        joint += contains(f, 0.5, x2) && contains(f, 0.5, y);
    }
    const double est2 = static_cast<double>(joint) / trials;
    const double target2 = std::pow(0.5, 5);
    CHECK(std::abs(est2 - target2) < 4.0 * std::sqrt(target2 * (1 - target2) / trials));

    // coupling monotonicity across the p grid
    Rng rng(5);
    for (int t = 0; t < 3000; ++t) {
        const PercolationField f{derive_stream(0xccc, static_cast<std::uint64_t>(t)), 2};
        const LatticePoint pt = random_point_in_shell(2, static_cast<int>(rng.next_below(6)), rng);
        bool prev = false;
        for (int i = 1; i <= 10; ++i) {
            const bool cur = contains(f, 0.1 * i, pt);
            if (prev) CHECK(cur);
            prev = cur;
        }
    }
}

TEST_CASE("shell independence") {
    // nonemptiness of different shells is uncorrelated
    const double p = 0.45;
    const int seeds = 4000;
    int n2 = 0, n3 = 0, both = 0;
    for (int s = 0; s < seeds; ++s) {
        const PercolationField f{derive_stream(0xddd, static_cast<std::uint64_t>(s)), 2};
        const bool a = !survivor_cells(f, p, 2, 10000).cells.empty();
        const bool b = !survivor_cells(f, p, 3, 10000).cells.empty();
        n2 += a;
        n3 += b;
        both += a && b;
    }
    const double pa = static_cast<double>(n2) / seeds;
    const double pb = static_cast<double>(n3) / seeds;
    const double pab = static_cast<double>(both) / seeds;
    const double cov_sigma = std::sqrt(pa * (1 - pa) * pb * (1 - pb) / seeds);
    CHECK(std::abs(pab - pa * pb) < 4.0 * cov_sigma);
}

TEST_CASE("survivor enumeration") {
    const PercolationField field{0x5eedULL, 2};

    // tiny p kills the roots
    CHECK(survivor_cells(field, 1e-12, 3, 1000).cells.empty());

    // consistency with membership, exhaustively for k <= 3
    for (int k = 0; k <= 3; ++k) {
        const auto surv = survivor_cells(field, 0.7, k, 100000);
        CHECK_FALSE(surv.truncated);
        std::set<std::vector<Coord>> got;
        for (const auto& c : surv.cells) {
            CHECK(shell_of(c) == k);
            CHECK(contains(field, 0.7, c));
            got.insert(c.coords);
        }
        // enumerate the whole shell and compare
        const Coord r = Coord{1} << k;
        for (Coord x = -r; x < r; ++x) {
            for (Coord y = -r; y < r; ++y) {
                const LatticePoint pt{x, y};
                if (shell_of(pt) != k) continue;
                CHECK(contains(field, 0.7, pt) == (got.count(pt.coords) > 0));
            }
        }
    }

    // truncation signal
    const auto t = survivor_cells(field, 1.0, 3, 5);
    CHECK(t.truncated);
    CHECK(t.cells.size() == 5);

    // p = 1 keeps the full shell
    const auto full = survivor_cells(field, 1.0, 2, 100000);
    CHECK(full.cells.size() == box_point_count(2, 2) - box_point_count(1, 2));
}

TEST_CASE("subcritical decay trend") {
    // critical p = 1/4 in d = 2: shell survival decays roughly like 1/k
    const double p = 0.25;
    const int seeds = 150;
    auto frac_nonempty = [&](int k) {
        int cnt = 0;
        for (int s = 0; s < seeds; ++s) {
            const PercolationField f{derive_stream(0x1177, static_cast<std::uint64_t>(s)), 2};
            cnt += !survivor_cells(f, p, k, 1).cells.empty() ? 1 : 0;
        }
        return static_cast<double>(cnt) / seeds;
    };
    const double early = frac_nonempty(4);
    const double late = frac_nonempty(24);
    CHECK(late < early);
    CHECK(late > 0.0);  // critical percolation still reaches deep shells sometimes
}

TEST_CASE("raster export") {
    const PercolationField field{0xabcd, 2};
    const auto img = raster2d(field, 0.8, 5);
    CHECK(img.width == 64);
    CHECK(img.height == 64);

    // determinism
    const auto img2 = raster2d(field, 0.8, 5);
    CHECK(img.pixels == img2.pixels);

    // p = 1: every pixel is cluster-dark
    const auto dark = raster2d(field, 1.0, 4);
    CHECK(std::all_of(dark.pixels.begin(), dark.pixels.end(),
                      [](std::uint8_t b) { return b == RasterImage::kCluster; }));

    // dark fraction of a shell tracks p^{k+1}; averaged over realizations
    // because survival within one shell is strongly correlated through the
    // shared selection ancestors
    const auto count_dark = [](const RasterImage& im, int k) {
        const Coord r = Coord{1} << k;
        const Coord half = 32;
        std::int64_t dark_cells = 0, total = 0;
        for (Coord x = -r; x < r; ++x) {
            for (Coord y = -r; y < r; ++y) {
                if (shell_of(LatticePoint{x, y}) != k) continue;
                ++total;
                const Coord col = x + half;
                const Coord row = half - 1 - y;
                if (im.pixels[static_cast<std::size_t>(row * 64 + col)] == RasterImage::kCluster)
                    ++dark_cells;
            }
        }
        return static_cast<double>(dark_cells) / static_cast<double>(total);
    };
    double mean4 = 0.0;
    const int fields = 40;
    for (int s = 0; s < fields; ++s) {
        const PercolationField f{derive_stream(0x90210, static_cast<std::uint64_t>(s)), 2};
        mean4 += count_dark(raster2d(f, 0.8, 5), 4);
    }
    mean4 /= fields;
    CHECK(std::abs(mean4 - std::pow(0.8, 5)) < 0.1);

    CHECK_THROWS_AS(raster2d(PercolationField{1, 3}, 0.5, 4), std::invalid_argument);
    CHECK_THROWS_AS(raster2d(field, 0.5, 13), std::invalid_argument);
}

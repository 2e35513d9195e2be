#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "macrodim/walk.hpp"

using namespace macrodim;

TEST_CASE("step presets") {
    const auto srw = preset_srw(3);
    CHECK(srw.support_size() == 6);
    for (double p : srw.probs) CHECK(p == Catch::Approx(1.0 / 6.0));
    CHECK_THROWS_AS(preset_srw(2), std::invalid_argument);
    CHECK_THROWS_AS(preset_srw(1), std::invalid_argument);

    const auto ht = preset_heavy_tail(1, 0.5, 50);
    CHECK(ht.support_size() == 100);
    double sum = 0.0;
    for (double p : ht.probs) sum += p;
    CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
    // symmetry: weight(x) == weight(-x)
    std::map<Coord, double> w;
    for (std::size_t i = 0; i < ht.support_size(); ++i) w[ht.offset(i)[0]] = ht.probs[i];
    for (const auto& [x, p] : w) CHECK(w.at(-x) == Catch::Approx(p));

    CHECK_THROWS_AS(preset_heavy_tail(2, 2.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(preset_heavy_tail(2, 0.5, 0), std::invalid_argument);
}

TEST_CASE("heavy tail exponent") {
    // empirical tail P{|step| > r} ~ r^{-alpha} in the pre-cutoff range
    const auto ht = preset_heavy_tail(2, 1.0, 100);
    Rng rng(99);
    const int n = 200000;
    std::vector<double> radii = {2, 4, 8, 16, 32};
    std::vector<std::int64_t> exceed(radii.size(), 0);
    Coord step[2];
    for (int i = 0; i < n; ++i) {
        ht.sample(rng, step);
        const double r = std::sqrt(static_cast<double>(step[0]) * step[0] +
                                   static_cast<double>(step[1]) * step[1]);
        for (std::size_t j = 0; j < radii.size(); ++j) exceed[j] += r > radii[j];
    }
    // log-log regression
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < radii.size(); ++j) {
        const double x = std::log(radii[j]);
        const double y = std::log(static_cast<double>(exceed[j]) / n);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = radii.size();
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(std::abs(slope - (-1.0)) < 0.12);
}

TEST_CASE("path sampling") {
    const auto srw = preset_srw(3);
    const LatticePoint a{1, 2, 3};
    const auto empty = sample_path(srw, a, 0, 5);
    CHECK(empty.length() == 1);
    CHECK(empty.at(0) == a);
    CHECK(range_cells(empty).size() == 1);

    const auto p1 = sample_path(srw, a, 1000, 5);
    const auto p2 = sample_path(srw, a, 1000, 5);
    CHECK(p1.points == p2.points);  // deterministic in the seed
    const auto p3 = sample_path(srw, a, 1000, 6);
    CHECK(p1.points != p3.points);

    // steps are unit moves
    for (std::size_t i = 0; i + 1 < p1.length(); ++i) {
        Coord diff = 0;
        for (int j = 0; j < 3; ++j) diff += std::abs(p1.at(i + 1)[j] - p1.at(i)[j]);
        CHECK(diff == 1);
    }

    // E |X_n|^2 = n for the unit-variance walk
    const std::int64_t n_steps = 10000;
    double mean_sq = 0.0;
    const int paths = 800;
    for (int w = 0; w < paths; ++w) {
        const auto path = sample_path(srw, LatticePoint{0, 0, 0}, n_steps,
                                      derive_stream(1234, static_cast<std::uint64_t>(w)));
        const auto last = path.at(path.length() - 1);
        mean_sq += static_cast<double>(last[0]) * last[0] +
                   static_cast<double>(last[1]) * last[1] +
                   static_cast<double>(last[2]) * last[2];
    }
    mean_sq /= paths;
    CHECK(std::abs(mean_sq - static_cast<double>(n_steps)) <
          0.05 * static_cast<double>(n_steps));
}

TEST_CASE("range bookkeeping") {
    const auto srw = preset_srw(3);
    const auto path = sample_path(srw, LatticePoint{0, 0, 0}, 20000, 77);
    const auto range = range_cells(path);
    CHECK(range.size() <= path.length());
    CHECK(range.size() > path.length() / 3);  // transient walk keeps finding new cells

    int K = 0;
    for (const auto& c : range) K = std::max(K, shell_of(c));
    const auto counts = box_counts(range, K);
    CHECK(counts.back() == range.size());
    for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] >= counts[i - 1]);

    const auto shells = cells_by_shell(range);
    std::size_t total = 0;
    for (std::size_t k = 0; k < shells.size(); ++k) {
        for (const auto& c : shells[k]) CHECK(shell_of(c) == static_cast<int>(k));
        total += shells[k].size();
    }
    CHECK(total == range.size());
}

TEST_CASE("hitting probability") {
    const auto srw = preset_srw(3);
    const LatticePoint a{0, 0, 0};
    const auto at_start = hit_prob_mc(srw, a, {a}, 100, 500, 9);
    CHECK(at_start.estimate == 1.0);

    CHECK_THROWS_AS(hit_prob_mc(srw, a, {}, 100, 100, 9), std::invalid_argument);

    // summability trend of the cubically spaced target family
    double prev_sum = 0.0, sum = 0.0;
    std::vector<double> partial;
    for (Coord k = 1; k <= 12; ++k) {
        const auto est = hit_prob_mc(srw, a, {LatticePoint{0, 0, k * k * k}}, 5000, 2000,
                                     derive_stream(31, static_cast<std::uint64_t>(k)));
        sum += est.estimate;
        partial.push_back(sum);
        if (k == 8) prev_sum = sum;
    }
    CHECK(prev_sum > 0.0);
    CHECK((sum - prev_sum) / prev_sum < 0.10);
}

TEST_CASE("transience doubling test") {
    const auto srw = preset_srw(3);
    const auto ok = transience_check(srw, 4000, 300, 2024);
    CHECK(ok.looks_transient);

    // a recurrent walk (simple walk on Z) fails the doubling test
    StepDistribution rec;
    rec.d = 1;
    rec.offsets = {1, -1};
    rec.probs = {0.5, 0.5};
    rec.preset = "srw1-test";
    rec.validate();
    rec.build_sampler();
    const auto bad = transience_check(rec, 4000, 300, 2024);
    CHECK_FALSE(bad.looks_transient);
}

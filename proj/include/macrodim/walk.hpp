#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "macrodim/lattice.hpp"
#include "macrodim/rng.hpp"

namespace macrodim {

// Increment law of a walk with i.i.d. steps: finite, duplicate-free support
// with probabilities summing to 1. Sampling goes through an alias table;
// the simple symmetric walk takes a direct branch.
struct StepDistribution {
    int d = 0;
    std::vector<Coord> offsets;  // n_support x d, row-major
    std::vector<double> probs;
    std::string preset;
    bool is_srw = false;

    // alias sampling state
    std::vector<std::uint32_t> alias;
    std::vector<std::uint64_t> threshold;

    std::size_t support_size() const { return probs.size(); }

    const Coord* offset(std::size_t i) const {
        return offsets.data() + i * static_cast<std::size_t>(d);
    }

    Coord max_abs_offset() const {
        Coord m = 0;
        for (Coord c : offsets) m = std::max(m, std::abs(c));
        return m;
    }

    void validate() const {
        if (d < 1) throw std::invalid_argument("step distribution needs d >= 1");
        if (probs.empty()) throw std::invalid_argument("empty step support");
        if (offsets.size() != probs.size() * static_cast<std::size_t>(d))
            throw std::invalid_argument("offsets/probs size mismatch");
        double sum = 0.0;
        for (double p : probs) {
            if (!(p > 0.0)) throw std::invalid_argument("step probabilities must be positive");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("step probabilities must sum to 1");
        std::unordered_set<std::uint64_t> seen;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (!seen.insert(point_key(offset(i), static_cast<std::size_t>(d))).second)
                throw std::invalid_argument("duplicate step offset");
        }
    }

    void build_sampler() {
        const std::size_t n = probs.size();
        alias.assign(n, 0);
        threshold.assign(n, 0);
        // Vose alias construction with 64-bit thresholds.
        std::vector<double> scaled(n);
        for (std::size_t i = 0; i < n; ++i) scaled[i] = probs[i] * static_cast<double>(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i)
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        while (!small.empty() && !large.empty()) {
            const std::uint32_t s = small.back();
            small.pop_back();
            const std::uint32_t l = large.back();
            threshold[s] = static_cast<std::uint64_t>(
                std::min(1.0, std::max(0.0, scaled[s])) * 0x1.0p64);
            alias[s] = l;
            scaled[l] -= (1.0 - scaled[s]);
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::uint32_t i : large) threshold[i] = ~std::uint64_t{0};
        for (std::uint32_t i : small) threshold[i] = ~std::uint64_t{0};
    }

    // Draw one step into `step` (length d).
    void sample(Rng& rng, Coord* step) const {
        if (is_srw) {
            const std::uint64_t r = rng.next_u64();
            const std::uint64_t dir = static_cast<std::uint64_t>(
                (static_cast<unsigned __int128>(r) * (2 * static_cast<std::uint64_t>(d))) >> 64);
            for (int i = 0; i < d; ++i) step[i] = 0;
            step[dir >> 1] = (dir & 1) ? 1 : -1;
            return;
        }
        const std::size_t n = probs.size();
        const std::uint64_t r1 = rng.next_u64();
        std::size_t idx = static_cast<std::size_t>(
            (static_cast<unsigned __int128>(r1) * n) >> 64);
        if (rng.next_u64() >= threshold[idx]) idx = alias[idx];
        const Coord* o = offset(idx);
        for (int i = 0; i < d; ++i) step[i] = o[i];
    }
};

// Simple symmetric walk; transient only for d >= 3, lower dimensions are
// rejected rather than silently producing divergent Green sums.
inline StepDistribution preset_srw(int d) {
    if (d < 3) throw std::invalid_argument("srw preset requires d >= 3 (transience)");
    StepDistribution s;
    s.d = d;
    s.preset = "srw(" + std::to_string(d) + ")";
    s.is_srw = true;
    const double p = 1.0 / (2.0 * d);
    for (int i = 0; i < d; ++i) {
        for (int sign : {-1, 1}) {
            for (int j = 0; j < d; ++j) s.offsets.push_back(i == j ? sign : 0);
            s.probs.push_back(p);
        }
    }
    s.validate();
    s.build_sampler();
    return s;
}

// Symmetric stable-like law: weights proportional to |x|^{-d-alpha} on
// 0 < max-norm(x) <= R. The cutoff keeps the support finite; power-law decay
// then holds only on scales well below R.
inline StepDistribution preset_heavy_tail(int d, double alpha, Coord R) {
    if (d < 1) throw std::invalid_argument("heavy_tail: d >= 1");
    if (!(alpha > 0.0) || alpha >= 2.0)
        throw std::invalid_argument("heavy_tail: alpha must lie in (0, 2)");
    if (R < 1) throw std::invalid_argument("heavy_tail: cutoff must be >= 1");
    StepDistribution s;
    s.d = d;
    s.preset = "heavy_tail(d=" + std::to_string(d) + ",alpha=" + std::to_string(alpha) +
               ",R=" + std::to_string(R) + ")";

    std::vector<Coord> x(static_cast<std::size_t>(d), -R);
    std::vector<double> weights;
    double total = 0.0;
    while (true) {
        bool zero = true;
        double norm2 = 0.0;
        for (Coord c : x) {
            zero = zero && c == 0;
            norm2 += static_cast<double>(c) * static_cast<double>(c);
        }
        if (!zero) {
            const double w = std::pow(norm2, -0.5 * (d + alpha));
            weights.push_back(w);
            total += w;
            s.offsets.insert(s.offsets.end(), x.begin(), x.end());
        }
        int i = d - 1;
        while (i >= 0 && x[static_cast<std::size_t>(i)] == R) {
            x[static_cast<std::size_t>(i)] = -R;
            --i;
        }
        if (i < 0) break;
        ++x[static_cast<std::size_t>(i)];
    }
    s.probs.reserve(weights.size());
    for (double w : weights) s.probs.push_back(w / total);
    // renormalize exactly against accumulated rounding
    double sum = std::accumulate(s.probs.begin(), s.probs.end(), 0.0);
    for (double& p : s.probs) p /= sum;
    s.validate();
    s.build_sampler();
    return s;
}

struct PathResult {
    int d = 0;
    std::vector<Coord> points;  // (n_steps + 1) x d, row-major, starts at the origin point

    std::size_t length() const { return points.size() / static_cast<std::size_t>(d); }

    LatticePoint at(std::size_t i) const {
        LatticePoint p;
        p.coords.assign(points.begin() + static_cast<std::ptrdiff_t>(i * d),
                        points.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        return p;
    }
};

inline PathResult sample_path(const StepDistribution& dist, const LatticePoint& a,
                              std::int64_t n_steps, std::uint64_t seed) {
    if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
    if (a.dim() != dist.d) throw std::invalid_argument("start point dimension mismatch");
    PathResult path;
    path.d = dist.d;
    path.points.reserve(static_cast<std::size_t>(n_steps + 1) * dist.d);
    path.points.insert(path.points.end(), a.coords.begin(), a.coords.end());
    Rng rng(seed);
    std::vector<Coord> pos(a.coords);
    std::vector<Coord> step(static_cast<std::size_t>(dist.d));
    for (std::int64_t n = 0; n < n_steps; ++n) {
        dist.sample(rng, step.data());
        for (int i = 0; i < dist.d; ++i) pos[static_cast<std::size_t>(i)] += step[static_cast<std::size_t>(i)];
        path.points.insert(path.points.end(), pos.begin(), pos.end());
    }
    return path;
}

// Deduplicated range of a path, in first-visit order.
inline std::vector<LatticePoint> range_cells(const PathResult& path) {
    std::vector<LatticePoint> out;
    std::unordered_set<std::uint64_t> seen;
    const std::size_t n = path.length();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t key =
            point_key(path.points.data() + i * path.d, static_cast<std::size_t>(path.d));
        if (seen.insert(key).second) out.push_back(path.at(i));
    }
    return out;
}

// Range cells grouped by shell, k = 0..K where K is the deepest occupied shell.
inline std::vector<std::vector<LatticePoint>> cells_by_shell(
    const std::vector<LatticePoint>& cells) {
    std::vector<std::vector<LatticePoint>> shells;
    for (const auto& c : cells) {
        const int k = shell_of(c);
        if (static_cast<std::size_t>(k) >= shells.size()) shells.resize(static_cast<std::size_t>(k) + 1);
        shells[static_cast<std::size_t>(k)].push_back(c);
    }
    return shells;
}

// card(A ∩ box(n)) for n = 0..N.
inline std::vector<std::uint64_t> box_counts(const std::vector<LatticePoint>& cells, int N) {
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(N) + 1, 0);
    for (const auto& c : cells) {
        const int k = shell_of(c);
        if (k <= N) ++counts[static_cast<std::size_t>(k)];
    }
    // prefix sums: shell counts -> box counts
    for (int n = 1; n <= N; ++n) counts[static_cast<std::size_t>(n)] += counts[static_cast<std::size_t>(n - 1)];
    return counts;
}

struct HitEstimate {
    double estimate = 0.0;
    double std_err = 0.0;
    std::int64_t hits = 0;
    std::int64_t walks = 0;
    std::int64_t horizon = 0;
    bool truncated_horizon = true;  // horizon truncation always biases downward
};

// Fraction of walks from `a` that meet F within the horizon.
inline HitEstimate hit_prob_mc(const StepDistribution& dist, const LatticePoint& a,
                               const std::vector<LatticePoint>& F, std::int64_t horizon,
                               std::int64_t n_walks, std::uint64_t seed) {
    if (F.empty()) throw std::invalid_argument("hit_prob_mc: target set must be nonempty");
    std::unordered_set<std::uint64_t> targets;
    for (const auto& f : F) {
        if (f.dim() != dist.d) throw std::invalid_argument("target dimension mismatch");
        targets.insert(point_key(f.coords));
    }
    std::int64_t hits = 0;
    std::vector<Coord> pos, step(static_cast<std::size_t>(dist.d));
    for (std::int64_t w = 0; w < n_walks; ++w) {
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(w)));
        pos = a.coords;
        bool hit = targets.count(point_key(pos)) > 0;
        for (std::int64_t n = 0; n < horizon && !hit; ++n) {
            dist.sample(rng, step.data());
            for (int i = 0; i < dist.d; ++i)
                pos[static_cast<std::size_t>(i)] += step[static_cast<std::size_t>(i)];
            hit = targets.count(point_key(pos)) > 0;
        }
        hits += hit ? 1 : 0;
    }
    HitEstimate out;
    out.hits = hits;
    out.walks = n_walks;
    out.horizon = horizon;
    out.estimate = static_cast<double>(hits) / static_cast<double>(n_walks);
    out.std_err = std::sqrt(std::max(out.estimate * (1.0 - out.estimate), 1e-300) /
                            static_cast<double>(n_walks));
    return out;
}

struct TransienceCheck {
    bool looks_transient = false;
    double visits_h = 0.0;   // mean visits to the origin within horizon
    double visits_2h = 0.0;  // ... within doubled horizon
    double rel_increase = 0.0;
};

// Doubling test: mean origin-visit count must stabilize as the horizon doubles.
inline TransienceCheck transience_check(const StepDistribution& dist, std::int64_t horizon,
                                        std::int64_t n_walks, std::uint64_t seed,
                                        double tol = 0.01) {
    TransienceCheck out;
    double v1 = 0.0, v2 = 0.0;
    std::vector<Coord> pos(static_cast<std::size_t>(dist.d));
    std::vector<Coord> step(static_cast<std::size_t>(dist.d));
    for (std::int64_t w = 0; w < n_walks; ++w) {
        Rng rng(derive_stream(seed ^ 0x7ac3f1e25d8b9c64ULL, static_cast<std::uint64_t>(w)));
        std::fill(pos.begin(), pos.end(), 0);
        std::int64_t c1 = 1, c2 = 1;  // time-0 visit
        for (std::int64_t n = 1; n <= 2 * horizon; ++n) {
            dist.sample(rng, step.data());
            bool zero = true;
            for (int i = 0; i < dist.d; ++i) {
                pos[static_cast<std::size_t>(i)] += step[static_cast<std::size_t>(i)];
                zero = zero && pos[static_cast<std::size_t>(i)] == 0;
            }
            if (zero) {
                ++c2;
                if (n <= horizon) ++c1;
            }
        }
        v1 += static_cast<double>(c1);
        v2 += static_cast<double>(c2);
    }
    out.visits_h = v1 / static_cast<double>(n_walks);
    out.visits_2h = v2 / static_cast<double>(n_walks);
    out.rel_increase = (out.visits_2h - out.visits_h) / out.visits_h;
    out.looks_transient = out.rel_increase < tol;
    return out;
}

}  // namespace macrodim

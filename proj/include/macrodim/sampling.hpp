#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "macrodim/lattice.hpp"
#include "macrodim/rng.hpp"

namespace macrodim {

// Uniform point of shell k by rejection from box(k). Acceptance >= 1/2.
inline LatticePoint random_point_in_shell(int d, int k, Rng& rng) {
    const Coord span = Coord{2} << k;  // 2^{k+1}
    LatticePoint p;
    p.coords.resize(static_cast<std::size_t>(d));
    while (true) {
        for (int i = 0; i < d; ++i)
            p.coords[static_cast<std::size_t>(i)] =
                static_cast<Coord>(rng.next_below(static_cast<std::uint64_t>(span))) -
                (Coord{1} << k);
        if (k == 0 || !in_box(p, k - 1)) return p;
    }
}

// Deterministic spread sample of a full shell: one point per chosen stratum
// cube of level ceil(k/2) (coarser when that grid would be huge), strata
// chosen by hash rank. Used where a shell is too large to materialize.
inline std::vector<LatticePoint> sample_shell_stratified(int d, int k, std::size_t count,
                                                         std::uint64_t seed) {
    if (k == 0) {
        std::vector<LatticePoint> out;
        for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << d) && out.size() < count;
             ++mask) {
            LatticePoint p;
            for (int i = 0; i < d; ++i)
                p.coords.push_back(((mask >> (d - 1 - i)) & 1) ? 0 : -1);
            out.push_back(std::move(p));
        }
        return out;
    }

    int m = (k + 1) / 2;
    auto grid_cells = [&](int level) {
        double total = 1.0;
        for (int i = 0; i < d; ++i) total *= static_cast<double>(Coord{2} << (k - level));
        return total;
    };
    while (m < k && grid_cells(m) > static_cast<double>(1 << 22)) ++m;

    const Coord g = Coord{2} << (k - m);  // stratum corners per axis
    const Coord half = g / 2;
    const Coord inner_half = half / 2;  // strata of box(k-1) in corner units

    // Rank strata (level-m cubes of box(k) not inside box(k-1)) by hash.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> ranked;
    std::vector<Coord> j(static_cast<std::size_t>(d), -half);
    std::uint64_t flat = 0;
    while (true) {
        bool inner = true;
        for (Coord c : j)
            if (c < -inner_half || c >= inner_half) inner = false;
        if (!inner) ranked.emplace_back(derive_stream(seed, flat), flat);
        ++flat;
        int i = d - 1;
        while (i >= 0 && j[static_cast<std::size_t>(i)] == half - 1) {
            j[static_cast<std::size_t>(i)] = -half;
            --i;
        }
        if (i < 0) break;
        ++j[static_cast<std::size_t>(i)];
    }
    std::sort(ranked.begin(), ranked.end());

    std::vector<LatticePoint> out;
    out.reserve(count);
    for (std::size_t round = 0; out.size() < count && round <= count; ++round) {
        bool progressed = false;
        for (const auto& [rank, idx] : ranked) {
            if (out.size() >= count) break;
            std::vector<Coord> corner(static_cast<std::size_t>(d));
            std::uint64_t rem = idx;
            for (int i = d - 1; i >= 0; --i) {
                corner[static_cast<std::size_t>(i)] =
                    static_cast<Coord>(rem % static_cast<std::uint64_t>(g)) - half;
                rem /= static_cast<std::uint64_t>(g);
            }
            Rng rng(derive_stream(seed ^ 0xf00dULL, idx * 1315423911ULL + round));
            LatticePoint p;
            p.coords.resize(static_cast<std::size_t>(d));
            bool ok = false;
            for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
                for (int i = 0; i < d; ++i)
                    p.coords[static_cast<std::size_t>(i)] =
                        (corner[static_cast<std::size_t>(i)] << m) +
                        static_cast<Coord>(rng.next_below(std::uint64_t{1} << m));
                ok = shell_of(p) == k;
            }
            if (ok) {
                out.push_back(p);
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    // drop the rare duplicate from multi-round sampling of one stratum
    std::vector<LatticePoint> dedup;
    dedup.reserve(out.size());
    std::vector<std::uint64_t> seen;
    for (auto& p : out) {
        const std::uint64_t key = point_key(p.coords);
        if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
            seen.push_back(key);
            dedup.push_back(std::move(p));
        }
    }
    return dedup;
}

}  // namespace macrodim

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "macrodim/lattice.hpp"
#include "macrodim/rng.hpp"

namespace macrodim {

// Seed-keyed source of the coupled selection weights U(Q). One weight per
// (shell, cube) pair, so distinct shells draw from disjoint key spaces and all
// percolation parameters p share a single monotone coupling. Membership is a
// pure O(shell) query; nothing is ever stored.
struct PercolationField {
    std::uint64_t seed = 0;
    int d = 2;
};

namespace detail {

inline std::uint64_t weight_bits(std::uint64_t seed, int shell, int level,
                                 std::span<const Coord> corner) noexcept {
    std::uint64_t h = mix64(seed ^ 0x8f1bbcdcbfa53e0bULL);
    h = hash_combine(h, static_cast<std::uint64_t>(shell));
    h = hash_combine(h, static_cast<std::uint64_t>(level));
    for (Coord c : corner) h = hash_combine(h, static_cast<std::uint64_t>(c));
    return h;
}

inline double weight_unchecked(const PercolationField& f, int shell, int level,
                               std::span<const Coord> corner) noexcept {
    return u64_to_unit(weight_bits(f.seed, shell, level, corner));
}

// Cube of the given level lies inside box(m)? Requires level <= m.
inline bool cube_in_box(int level, std::span<const Coord> corner, int m) noexcept {
    const Coord half = Coord{1} << (m - level);
    for (Coord j : corner)
        if (j < -half || j >= half) return false;
    return true;
}

}  // namespace detail

// The uniform weight attached to cube Q in the shell-k branching construction.
inline double u_weight(const PercolationField& field, int shell, const DyadicCube& q) {
    if (q.dim() != field.d) throw std::invalid_argument("u_weight: dimension mismatch");
    if (shell < 0) throw std::invalid_argument("u_weight: shell must be >= 0");
    if (q.level < 0 || q.level > shell)
        throw std::invalid_argument("u_weight: cube level must lie in [0, shell]");
    if (!detail::cube_in_box(q.level, q.corner, shell))
        throw std::invalid_argument("u_weight: cube outside the shell's box");
    return detail::weight_unchecked(field, shell, q.level, q.corner);
}

inline void check_percolation_p(double p) {
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("percolation parameter must lie in (0, 1]");
}

// x survives iff every cube in its selection chain carries weight < p.
// Monotone in p for a fixed field by construction.
inline bool contains(const PercolationField& field, double p, const LatticePoint& x) {
    check_percolation_p(p);
    if (x.dim() != field.d) throw std::invalid_argument("contains: dimension mismatch");
    const int k = shell_of(x);
    std::vector<Coord> corner(x.coords.size());
    for (int level = k; level >= 0; --level) {
        for (std::size_t i = 0; i < corner.size(); ++i) corner[i] = x.coords[i] >> level;
        if (detail::weight_unchecked(field, k, level, corner) >= p) return false;
    }
    return true;
}

struct SurvivorSet {
    int shell = 0;
    std::vector<LatticePoint> cells;
    bool truncated = false;
};

namespace detail {

// Depth-first walk of the surviving selection tree of shell k. Visits cubes in
// lexicographic child order, descends only where U(Q) < p, prunes subtrees
// fully inside box(k-1). `leaf` is called for every surviving unit cell of the
// shell; returning false aborts the walk (budget exhausted).
template <typename LeafFn>
bool walk_survivors(const PercolationField& field, double p, int k, LeafFn&& leaf) {
    const int d = field.d;
    struct Frame {
        int level;
        std::uint32_t next_child;  // 0..2^d
        std::vector<Coord> corner;
    };
    const std::uint32_t n_children = std::uint32_t{1} << d;

    // Top-level cubes of box(k): corners in {-1, 0}^d at level k, visited in
    // lexicographic order.
    std::vector<Frame> stack;
    std::vector<Coord> corner(static_cast<std::size_t>(d));
    for (std::uint32_t mask = 0; mask < n_children; ++mask) {
        for (int i = 0; i < d; ++i)
            corner[static_cast<std::size_t>(i)] = ((mask >> (d - 1 - i)) & 1) ? 0 : -1;
        if (weight_unchecked(field, k, k, corner) >= p) continue;
        if (k == 0) {
            LatticePoint cell{std::vector<Coord>(corner)};
            if (!leaf(std::move(cell))) return false;
            continue;
        }
        stack.push_back(Frame{k, 0, corner});
        while (!stack.empty()) {
            Frame& fr = stack.back();
            if (fr.next_child == n_children) {
                stack.pop_back();
                continue;
            }
            const std::uint32_t mask2 = fr.next_child++;
            std::vector<Coord> child(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i)
                child[static_cast<std::size_t>(i)] =
                    2 * fr.corner[static_cast<std::size_t>(i)] + ((mask2 >> (d - 1 - i)) & 1);
            const int child_level = fr.level - 1;
            // Skip subtrees that cannot meet the shell.
            if (k >= 1 && child_level <= k - 1 && cube_in_box(child_level, child, k - 1)) continue;
            if (weight_unchecked(field, k, child_level, child) >= p) continue;
            if (child_level == 0) {
                LatticePoint cell{std::move(child)};
                if (!leaf(std::move(cell))) return false;
            } else {
                stack.push_back(Frame{child_level, 0, std::move(child)});
            }
        }
    }
    return true;
}

}  // namespace detail

// All unit cells of shell k kept by the field at parameter p, found lazily;
// work is proportional to the surviving tree, not the shell volume.
inline SurvivorSet survivor_cells(const PercolationField& field, double p, int k,
                                  std::size_t max_cells) {
    check_percolation_p(p);
    if (k < 0) throw std::invalid_argument("survivor_cells: shell must be >= 0");
    SurvivorSet out;
    out.shell = k;
    const bool complete = detail::walk_survivors(field, p, k, [&](LatticePoint cell) {
        if (out.cells.size() >= max_cells) return false;
        out.cells.push_back(std::move(cell));
        return true;
    });
    out.truncated = !complete;
    return out;
}

struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, top row first

    static constexpr std::uint8_t kCluster = 0;
    static constexpr std::uint8_t kBoundary = 128;
    static constexpr std::uint8_t kBackground = 255;
};

// 2-D raster of the percolation set inside box(K). Cluster cells are black,
// shell frames mid-gray, everything else white. Pure function of (field, p, K),
// so the emitted bytes are reproducible.
inline RasterImage raster2d(const PercolationField& field, double p, int K) {
    if (field.d != 2) throw std::invalid_argument("raster2d: requires d = 2");
    if (K < 0 || K > 12) throw std::invalid_argument("raster2d: K must lie in [0, 12]");
    check_percolation_p(p);

    const Coord half = Coord{1} << K;
    const int side = static_cast<int>(2 * half);
    RasterImage img;
    img.width = side;
    img.height = side;
    img.pixels.assign(static_cast<std::size_t>(side) * side, RasterImage::kBackground);

    auto at = [&](Coord x, Coord y) -> std::uint8_t& {
        const Coord col = x + half;
        const Coord row = half - 1 - y;  // north up
        return img.pixels[static_cast<std::size_t>(row) * side + static_cast<std::size_t>(col)];
    };

    // Shell frames: the innermost and outermost cell rings of each box(j).
    for (int j = 0; j <= K; ++j) {
        const Coord r = Coord{1} << j;
        for (Coord t = -r; t < r; ++t) {
            at(-r, t) = RasterImage::kBoundary;
            at(r - 1, t) = RasterImage::kBoundary;
            at(t, -r) = RasterImage::kBoundary;
            at(t, r - 1) = RasterImage::kBoundary;
        }
    }

    for (int k = 0; k <= K; ++k) {
        detail::walk_survivors(field, p, k, [&](LatticePoint cell) {
            at(cell[0], cell[1]) = RasterImage::kCluster;
            return true;
        });
    }
    return img;
}

}  // namespace macrodim

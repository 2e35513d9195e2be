#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "macrodim/rng.hpp"

namespace macrodim {

using Coord = std::int64_t;

// Cubical box of "radius" 2^k: [-2^k, 2^k)^d. Shell k is box(k) minus box(k-1)
// (shell 0 is box(0) itself). Shells partition the lattice and are the unit of
// scale everywhere below.

struct LatticePoint {
    std::vector<Coord> coords;

    LatticePoint() = default;
    explicit LatticePoint(std::vector<Coord> c) : coords(std::move(c)) {}
    LatticePoint(std::initializer_list<Coord> c) : coords(c) {}

    int dim() const { return static_cast<int>(coords.size()); }
    Coord operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }
    Coord& operator[](int i) { return coords[static_cast<std::size_t>(i)]; }

    bool operator==(const LatticePoint& o) const { return coords == o.coords; }
    bool operator!=(const LatticePoint& o) const { return coords != o.coords; }
};

inline std::uint64_t point_key(std::span<const Coord> c) {
    std::uint64_t h = 0x51ed270b4d2a6c1dULL;
    for (Coord v : c) h = hash_combine(h, static_cast<std::uint64_t>(v));
    return h;
}

inline std::uint64_t point_key(const Coord* p, std::size_t n) {
    return point_key(std::span<const Coord>(p, n));
}

struct LatticePointHash {
    std::size_t operator()(const LatticePoint& p) const {
        return static_cast<std::size_t>(point_key(p.coords));
    }
};

// Coordinates must leave headroom for shell indices up to ~60.
inline constexpr Coord kCoordLimit = Coord{1} << 62;

inline void check_coords(const LatticePoint& p) {
    if (p.dim() < 1) throw std::invalid_argument("lattice point needs dimension >= 1");
    for (Coord c : p.coords) {
        if (c >= kCoordLimit || c < -kCoordLimit)
            throw std::invalid_argument("lattice coordinate out of supported range");
    }
}

namespace detail {

// Smallest k >= 0 with c in [-2^k, 2^k).
inline int shell_of_coord(Coord c) noexcept {
    if (c >= 0) return std::bit_width(static_cast<std::uint64_t>(c));
    return std::bit_width(static_cast<std::uint64_t>(-c) - 1);
}

// Smallest level n with floor(a/2^n) == floor(b/2^n), i.e. the level of the
// lowest dyadic interval holding both unit cells. 64 means "never" (the two
// coordinates are separated by an orthant boundary).
inline int join_level_coord(Coord a, Coord b) noexcept {
    const std::uint64_t x = static_cast<std::uint64_t>(a) ^ static_cast<std::uint64_t>(b);
    return static_cast<int>(std::bit_width(x));
}

}  // namespace detail

// Shell index: the unique k with x in shell k.
inline int shell_of(const LatticePoint& x) {
    check_coords(x);
    int k = 0;
    for (Coord c : x.coords) k = std::max(k, detail::shell_of_coord(c));
    return k;
}

// Delta(x) = shell_of(x) + 1, the length of x's selection chain.
inline int chain_length(const LatticePoint& x) { return shell_of(x) + 1; }

struct DyadicCube {
    int level = 0;                // sidelength 2^level
    std::vector<Coord> corner;    // south-west corner index j; cube starts at j*2^level

    int dim() const { return static_cast<int>(corner.size()); }

    bool operator==(const DyadicCube& o) const { return level == o.level && corner == o.corner; }

    bool contains(const LatticePoint& p) const {
        if (p.dim() != dim()) return false;
        for (int i = 0; i < dim(); ++i) {
            if ((p[i] >> level) != corner[static_cast<std::size_t>(i)]) return false;
        }
        return true;
    }
};

// The level-n dyadic cube whose half-open box holds x's unit cell.
inline DyadicCube cube_at(const LatticePoint& x, int level) {
    if (level < 0) throw std::invalid_argument("cube level must be >= 0");
    DyadicCube q;
    q.level = level;
    q.corner.reserve(x.coords.size());
    for (Coord c : x.coords) q.corner.push_back(c >> level);  // arithmetic shift = floor div
    return q;
}

// The 2^d level-(n-1) cubes partitioning Q, in lexicographic corner order
// (the fixed child order used by the total order below).
inline std::vector<DyadicCube> children(const DyadicCube& q) {
    if (q.level < 1) throw std::invalid_argument("level-0 cubes have no dyadic children");
    const int d = q.dim();
    if (d < 1 || d > 26) throw std::invalid_argument("unsupported dimension");
    std::vector<DyadicCube> out;
    out.reserve(std::size_t{1} << d);
    for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << d); ++mask) {
        DyadicCube c;
        c.level = q.level - 1;
        c.corner.resize(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            const Coord bit = (mask >> (d - 1 - i)) & 1;  // coordinate 0 varies slowest
            c.corner[static_cast<std::size_t>(i)] = 2 * q.corner[static_cast<std::size_t>(i)] + bit;
        }
        out.push_back(std::move(c));
    }
    return out;
}

struct CubeChain {
    int shell = 0;                    // k
    std::vector<DyadicCube> links;    // levels k, k-1, ..., 0 (length k+1)
};

// The k+1 dyadic cubes of levels k..0 holding x, where k = shell_of(x).
// The enclosing box is an implicit root above the chain; it is not itself a
// dyadic cube and carries no selection weight.
inline CubeChain cube_chain(const LatticePoint& x) {
    CubeChain ch;
    ch.shell = shell_of(x);
    ch.links.reserve(static_cast<std::size_t>(ch.shell) + 1);
    for (int level = ch.shell; level >= 0; --level) ch.links.push_back(cube_at(x, level));
    return ch;
}

// Tree metric on a shell: (k+1) minus the level of the lowest dyadic cube of
// level <= k holding both unit cells; 0 when only the shell root joins them.
// d(x,x) = k+1.
inline int tree_dist(const LatticePoint& x, const LatticePoint& y) {
    const int kx = shell_of(x);
    const int ky = shell_of(y);
    if (kx != ky) throw std::invalid_argument("tree_dist requires points in the same shell");
    if (x.dim() != y.dim()) throw std::invalid_argument("dimension mismatch");
    int join = 0;
    for (int i = 0; i < x.dim(); ++i)
        join = std::max(join, detail::join_level_coord(x[i], y[i]));
    if (join > kx) return 0;
    return kx + 1 - join;
}

enum class Order { less, equal, greater };

// Total order: by shell first; within a shell, by the cube chain read from the
// top level down, children ordered lexicographically by corner.
inline Order order_cmp(const LatticePoint& x, const LatticePoint& y) {
    const int kx = shell_of(x);
    const int ky = shell_of(y);
    if (kx != ky) return kx < ky ? Order::less : Order::greater;
    if (x.dim() != y.dim()) throw std::invalid_argument("dimension mismatch");
    for (int level = kx; level >= 0; --level) {
        for (int i = 0; i < x.dim(); ++i) {
            const Coord a = x[i] >> level;
            const Coord b = y[i] >> level;
            if (a != b) return a < b ? Order::less : Order::greater;
        }
    }
    return Order::equal;
}

struct PointLess {
    bool operator()(const LatticePoint& a, const LatticePoint& b) const {
        return order_cmp(a, b) == Order::less;
    }
};

// Is x inside [-2^k, 2^k)^d?
inline bool in_box(const LatticePoint& x, int k) {
    const Coord r = Coord{1} << k;
    for (Coord c : x.coords)
        if (c < -r || c >= r) return false;
    return true;
}

// Number of lattice points in box(n): 2^{(n+1)d}. Guarded against overflow.
inline std::uint64_t box_point_count(int n, int d) {
    const int bits = (n + 1) * d;
    if (bits >= 64) throw std::overflow_error("box point count exceeds 64 bits");
    return std::uint64_t{1} << bits;
}

// Nearest lattice point, ties broken toward -inf coordinatewise. Callers use
// this to discretize real point sets; nothing in the library itself needs it.
inline LatticePoint round_to_lattice(const std::vector<double>& u) {
    LatticePoint p;
    p.coords.reserve(u.size());
    for (double v : u) p.coords.push_back(static_cast<Coord>(std::ceil(v - 0.5)));
    return p;
}

}  // namespace macrodim

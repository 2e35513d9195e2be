#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "macrodim/lattice.hpp"
#include "macrodim/percolation.hpp"

namespace macrodim {

struct ShellCells {
    int shell = 0;
    std::vector<LatticePoint> cells;
};

// Occupied dyadic tree of one shell, stored post-order (children before their
// parent). Leaves are unit cells. Supports repeated covering-measure sweeps at
// different alpha without touching the cells again.
struct CoverTree {
    int shell = 0;
    int d = 0;
    std::vector<std::uint8_t> levels;
    std::vector<std::uint8_t> child_counts;  // 0 for leaves
    std::vector<std::int64_t> subtree_sizes;  // filled only when corners kept
    std::vector<Coord> corners;               // d per node, optional
    std::int64_t cell_count = 0;
    bool truncated = false;

    bool empty() const { return levels.empty(); }
    bool has_corners() const { return !corners.empty(); }
};

struct CoverResult {
    double value = 0.0;
    double alpha = 0.0;
    int shell = 0;
    std::vector<DyadicCube> cover;  // empty when not materialized
    std::int64_t cover_size = 0;
    bool truncated = false;
};

namespace detail {

// Chain-lexicographic sort key: d bits per level, level k at the top,
// coordinate 0 most significant inside each level. Ordering by this key equals
// ordering by the cube chain.
inline std::uint64_t chain_key(const LatticePoint& p, int k) {
    const int d = p.dim();
    if ((k + 1) * d > 63) throw std::invalid_argument("shell too deep for cover tree keys");
    std::uint64_t key = 0;
    for (int level = k; level >= 0; --level) {
        for (int i = 0; i < d; ++i) {
            const std::uint64_t u = static_cast<std::uint64_t>(p[i] + (Coord{1} << k));
            key = (key << 1) | ((u >> level) & 1);
        }
    }
    return key;
}

struct TreeBuilder {
    CoverTree tree;
    bool want_corners = false;

    void emit(int level, std::uint8_t cc, std::int64_t size, std::span<const Coord> corner) {
        tree.levels.push_back(static_cast<std::uint8_t>(level));
        tree.child_counts.push_back(cc);
        if (want_corners) {
            tree.subtree_sizes.push_back(size);
            tree.corners.insert(tree.corners.end(), corner.begin(), corner.end());
        }
    }
};

}  // namespace detail

// Build the occupied tree of shell k from materialized cells.
inline CoverTree build_cover_tree(const ShellCells& cells, bool want_corners = false) {
    const int k = cells.shell;
    CoverTree tree;
    tree.shell = k;
    if (cells.cells.empty()) return tree;
    const int d = cells.cells.front().dim();
    tree.d = d;

    std::vector<std::uint64_t> keys;
    keys.reserve(cells.cells.size());
    for (const auto& c : cells.cells) {
        if (shell_of(c) != k) throw std::invalid_argument("cell outside its declared shell");
        if (c.dim() != d) throw std::invalid_argument("mixed dimensions in shell cells");
        keys.push_back(detail::chain_key(c, k));
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    tree.cell_count = static_cast<std::int64_t>(keys.size());

    detail::TreeBuilder builder;
    builder.want_corners = want_corners;
    builder.tree = std::move(tree);

    std::vector<Coord> corner(static_cast<std::size_t>(d));
    const std::uint64_t child_mask = (std::uint64_t{1} << d) - 1;

    // Recover a cell coordinate vector from its key to derive cube corners.
    auto corner_at = [&](std::uint64_t key, int level) {
        for (int i = 0; i < d; ++i) corner[static_cast<std::size_t>(i)] = 0;
        for (int lv = k; lv >= 0; --lv) {
            for (int i = 0; i < d; ++i) {
                const int pos = lv * d + (d - 1 - i);
                const Coord bit = static_cast<Coord>((key >> pos) & 1);
                corner[static_cast<std::size_t>(i)] =
                    (corner[static_cast<std::size_t>(i)] << 1) | bit;
            }
        }
        // corner currently holds u = c + 2^k; shift to the requested level.
        for (int i = 0; i < d; ++i)
            corner[static_cast<std::size_t>(i)] =
                (corner[static_cast<std::size_t>(i)] - (Coord{1} << k)) >> level;
    };

    // Post-order emission over contiguous key ranges.
    auto build = [&](auto&& self, std::size_t begin, std::size_t end, int level) -> std::int64_t {
        if (level == 0) {
            if (builder.want_corners) corner_at(keys[begin], 0);
            builder.emit(0, 0, 1, corner);
            return 1;
        }
        const int shift = (level - 1) * d;
        std::uint8_t cc = 0;
        std::int64_t size = 1;
        std::size_t i = begin;
        while (i < end) {
            const std::uint64_t child = (keys[i] >> shift) & child_mask;
            std::size_t j = i;
            while (j < end && ((keys[j] >> shift) & child_mask) == child) ++j;
            size += self(self, i, j, level - 1);
            ++cc;
            i = j;
        }
        if (builder.want_corners) corner_at(keys[begin], level);
        builder.emit(level, cc, size, corner);
        return size;
    };

    const int top_shift = k * d;
    std::size_t i = 0;
    while (i < keys.size()) {
        const std::uint64_t top = keys[i] >> top_shift;
        std::size_t j = i;
        while (j < keys.size() && (keys[j] >> top_shift) == top) ++j;
        build(build, i, j, k);
        i = j;
    }
    return builder.tree;
}

// Build the occupied tree of the percolation survivors of shell k directly
// from the selection weights; never materializes the cell set.
inline CoverTree build_cover_tree_percolation(const PercolationField& field, double p, int k,
                                              std::int64_t max_cells, bool want_corners = false) {
    check_percolation_p(p);
    const int d = field.d;
    CoverTree out;
    out.shell = k;
    out.d = d;
    detail::TreeBuilder builder;
    builder.want_corners = want_corners;
    builder.tree = std::move(out);

    std::int64_t cells_seen = 0;
    bool truncated = false;
    const std::uint32_t n_children = std::uint32_t{1} << d;

    // Returns subtree size (0 = nothing survives below).
    auto visit = [&](auto&& self, int level, const std::vector<Coord>& corner) -> std::int64_t {
        if (truncated) return 0;
        if (detail::weight_unchecked(field, k, level, std::span<const Coord>(corner)) >= p)
            return 0;
        if (level == 0) {
            if (cells_seen >= max_cells) {
                truncated = true;
                return 0;
            }
            ++cells_seen;
            builder.emit(0, 0, 1, corner);
            return 1;
        }
        std::uint8_t cc = 0;
        std::int64_t size = 1;
        std::vector<Coord> child(static_cast<std::size_t>(d));
        for (std::uint32_t mask = 0; mask < n_children; ++mask) {
            for (int i = 0; i < d; ++i)
                child[static_cast<std::size_t>(i)] =
                    2 * corner[static_cast<std::size_t>(i)] + ((mask >> (d - 1 - i)) & 1);
            if (k >= 1 && detail::cube_in_box(level - 1, child, k - 1)) continue;
            const std::int64_t sub = self(self, level - 1, child);
            if (sub > 0) {
                size += sub;
                ++cc;
            }
        }
        if (cc == 0) return 0;
        builder.emit(level, cc, size, corner);
        return size;
    };

    std::vector<Coord> corner(static_cast<std::size_t>(d));
    for (std::uint32_t mask = 0; mask < n_children; ++mask) {
        for (int i = 0; i < d; ++i)
            corner[static_cast<std::size_t>(i)] = ((mask >> (d - 1 - i)) & 1) ? 0 : -1;
        visit(visit, k, corner);
    }
    builder.tree.cell_count = cells_seen;
    builder.tree.truncated = truncated;
    return builder.tree;
}

// Exact minimal covering value: value(Q) = min(own cost, sum over occupied
// children), leaves cost 2^{-alpha(k+1)}. Cover cubes above level k never help
// (no dyadic cube straddles an orthant boundary, so a higher-level cube covers
// at most one top cube and costs at least 1 > 2^{-alpha}).
inline double eval_n_alpha(const CoverTree& tree, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
    if (tree.empty()) return 0.0;
    const int k = tree.shell;
    std::vector<double> cost(static_cast<std::size_t>(k) + 1);
    for (int level = 0; level <= k; ++level)
        cost[static_cast<std::size_t>(level)] = std::exp2(alpha * (level - k - 1));

    std::vector<double> stack;
    stack.reserve(64);
    for (std::size_t i = 0; i < tree.levels.size(); ++i) {
        const int cc = tree.child_counts[i];
        if (cc == 0) {
            stack.push_back(cost[0]);
            continue;
        }
        double sum = 0.0;
        for (int c = 0; c < cc; ++c) {
            sum += stack.back();
            stack.pop_back();
        }
        stack.push_back(std::min(cost[tree.levels[i]], sum));
    }
    double total = 0.0;
    for (double v : stack) total += v;
    return total;
}

namespace detail {

// Extract one optimal cover (ties resolved toward the larger cube). Requires
// corners in the tree.
inline void extract_cover(const CoverTree& tree, double alpha, std::vector<DyadicCube>& out) {
    if (tree.empty()) return;
    const int k = tree.shell;
    const int d = tree.d;
    std::vector<double> cost(static_cast<std::size_t>(k) + 1);
    for (int level = 0; level <= k; ++level)
        cost[static_cast<std::size_t>(level)] = std::exp2(alpha * (level - k - 1));

    std::vector<double> value(tree.levels.size());
    std::vector<double> stack;
    for (std::size_t i = 0; i < tree.levels.size(); ++i) {
        const int cc = tree.child_counts[i];
        if (cc == 0) {
            value[i] = cost[0];
        } else {
            double sum = 0.0;
            for (int c = 0; c < cc; ++c) {
                sum += stack.back();
                stack.pop_back();
            }
            value[i] = std::min(cost[tree.levels[i]], sum);
        }
        stack.push_back(value[i]);
    }

    auto cube_of = [&](std::size_t i) {
        DyadicCube q;
        q.level = tree.levels[i];
        q.corner.assign(tree.corners.begin() + static_cast<std::ptrdiff_t>(i) * d,
                        tree.corners.begin() + static_cast<std::ptrdiff_t>(i + 1) * d);
        return q;
    };

    // Walk down from each root; post-order layout means a node's children sit
    // immediately before it, located via subtree sizes. Take the node's own
    // cube whenever its cost attains the minimum (ties favor the larger cube).
    auto descend = [&](auto&& self, std::size_t i) -> void {
        if (tree.child_counts[i] == 0 || cost[tree.levels[i]] <= value[i] * (1.0 + 1e-12)) {
            out.push_back(cube_of(i));
            return;
        }
        std::size_t pos = i;
        for (int c = 0; c < tree.child_counts[i]; ++c) {
            const std::size_t child = pos - 1;
            self(self, child);
            pos -= static_cast<std::size_t>(tree.subtree_sizes[child]);
        }
    };

    // Roots: scan post-order array from the end using subtree sizes.
    std::size_t idx = tree.levels.size();
    while (idx > 0) {
        const std::size_t root = idx - 1;
        descend(descend, root);
        idx -= static_cast<std::size_t>(tree.subtree_sizes[root]);
    }
}

}  // namespace detail

// Exact covering measure of a materialized cell set, with one optimal cover.
inline CoverResult n_alpha(const ShellCells& cells, double alpha, bool want_cover = true) {
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
    CoverTree tree = build_cover_tree(cells, want_cover);
    CoverResult res;
    res.alpha = alpha;
    res.shell = cells.shell;
    res.value = eval_n_alpha(tree, alpha);
    if (want_cover) {
        detail::extract_cover(tree, alpha, res.cover);
        res.cover_size = static_cast<std::int64_t>(res.cover.size());
    }
    return res;
}

// Same value as n_alpha over the shell's percolation survivors, computed
// during the survivor walk.
inline CoverResult n_alpha_lazy_percolation(const PercolationField& field, double p, int k,
                                            double alpha,
                                            std::int64_t max_cells = (std::int64_t{1} << 28)) {
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
    CoverTree tree = build_cover_tree_percolation(field, p, k, max_cells, false);
    CoverResult res;
    res.alpha = alpha;
    res.shell = k;
    res.value = eval_n_alpha(tree, alpha);
    res.truncated = tree.truncated;
    return res;
}

// ---------------------------------------------------------------------------
// Finite-scale dimension estimators.
// ---------------------------------------------------------------------------

struct DimensionReport {
    double estimate = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    // "ok", "at_floor", "at_ceiling", "insufficient_data", "sparse_window"
    std::string status = "ok";
    int window_lo = 0;
    int window_hi = 0;
    int usable_shells = 0;
    std::vector<double> grid_alpha;
    std::vector<double> grid_slope;
};

namespace detail {

struct SlopeFit {
    double slope = 0.0;
    double r2 = 0.0;
    int n = 0;
};

inline SlopeFit least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    SlopeFit fit;
    fit.n = static_cast<int>(xs.size());
    if (fit.n < 2) return fit;
    double mx = 0, my = 0;
    for (int i = 0; i < fit.n; ++i) {
        mx += xs[static_cast<std::size_t>(i)];
        my += ys[static_cast<std::size_t>(i)];
    }
    mx /= fit.n;
    my /= fit.n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < fit.n; ++i) {
        const double dx = xs[static_cast<std::size_t>(i)] - mx;
        const double dy = ys[static_cast<std::size_t>(i)] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0) return fit;
    fit.slope = sxy / sxx;
    fit.r2 = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

// Minimal chord slope over all pairs: a liminf-flavored statistic.
inline double min_chord_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j)
            best = std::min(best, (ys[j] - ys[i]) / (xs[j] - xs[i]));
    return best;
}

// Estimate the covering-series dimension D from the per-shell values: the
// slope of log2 N_alpha against k is ~0 for alpha < D (root-level covers cost
// Theta(1) per shell) and ~D - alpha for alpha > D, so slope(alpha) + alpha
// read off the decaying suffix of the alpha grid estimates D directly.
template <typename SlopeFn>
DimensionReport dim_from_trees(const std::vector<CoverTree>& trees, double alpha_tol,
                               SlopeFn&& slope_of, int dim_d) {
    DimensionReport rep;
    const int K = static_cast<int>(trees.size()) - 1;
    rep.window_lo = (K + 1) / 2;
    rep.window_hi = K;

    std::vector<double> ks;
    std::vector<const CoverTree*> used;
    int zero_shells = 0;
    for (int k = rep.window_lo; k <= K; ++k) {
        const auto& t = trees[static_cast<std::size_t>(k)];
        if (t.cell_count > 0) {
            ks.push_back(static_cast<double>(k));
            used.push_back(&t);
        } else {
            ++zero_shells;
        }
    }
    rep.usable_shells = static_cast<int>(ks.size());
    const int window_size = rep.window_hi - rep.window_lo + 1;
    if (rep.usable_shells < 4) {
        rep.status = "insufficient_data";
        return rep;
    }
    if (zero_shells * 2 > window_size) {
        rep.status = "sparse_window";
        rep.estimate = 0.0;
        rep.bracket_lo = 0.0;
        rep.bracket_hi = std::max(0.01, alpha_tol / 2);
        return rep;
    }

    const double floor_alpha = std::max(0.01, alpha_tol / 2);
    std::vector<double> alphas;
    for (double a = floor_alpha; a < dim_d + alpha_tol / 2; a += alpha_tol) alphas.push_back(a);
    if (alphas.back() < dim_d) alphas.push_back(dim_d);

    std::vector<double> ys(ks.size());
    rep.grid_alpha = alphas;
    rep.grid_slope.resize(alphas.size());
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        for (std::size_t i = 0; i < used.size(); ++i)
            ys[i] = std::log2(eval_n_alpha(*used[i], alphas[ai]));
        rep.grid_slope[ai] = slope_of(ks, ys);
    }

    // decaying suffix: slopes at or below the detection margin
    constexpr double kDecayMargin = -0.2;
    std::size_t first = alphas.size();
    for (std::size_t ai = alphas.size(); ai > 0; --ai) {
        if (rep.grid_slope[ai - 1] <= kDecayMargin) first = ai - 1;
        else break;
    }
    if (first == alphas.size()) {
        // no decay anywhere on the grid: the set fills its window at every
        // tested alpha, so the dimension is at (or beyond) the ceiling
        rep.estimate = static_cast<double>(dim_d);
        rep.bracket_lo = alphas.back();
        rep.bracket_hi = static_cast<double>(dim_d);
        rep.status = "at_ceiling";
        return rep;
    }
    double acc = 0.0;
    for (std::size_t ai = first; ai < alphas.size(); ++ai)
        acc += rep.grid_slope[ai] + alphas[ai];
    double est = acc / static_cast<double>(alphas.size() - first);
    est = std::min(est, static_cast<double>(dim_d));
    if (est <= floor_alpha) {
        rep.estimate = std::max(est, 0.0);
        rep.bracket_lo = 0.0;
        rep.bracket_hi = floor_alpha;
        rep.status = "at_floor";
        return rep;
    }
    rep.estimate = est;
    rep.bracket_lo = std::max(est - alpha_tol, 0.0);
    rep.bracket_hi = std::min(est + alpha_tol, static_cast<double>(dim_d));
    return rep;
}

inline int tree_dim(const std::vector<CoverTree>& trees) {
    for (const auto& t : trees)
        if (t.d > 0) return t.d;
    return 1;
}

}  // namespace detail

inline std::vector<CoverTree> cover_trees_of(const std::vector<ShellCells>& shells) {
    std::vector<CoverTree> trees;
    trees.reserve(shells.size());
    for (const auto& s : shells) trees.push_back(build_cover_tree(s, false));
    return trees;
}

// Estimate of the covering-series dimension: bisection on the regression
// slope of log2 N_alpha(A, shell k) against k over the tail window.
inline DimensionReport dim_hausdorff_trees(const std::vector<CoverTree>& trees, double alpha_tol) {
    return detail::dim_from_trees(
        trees, alpha_tol,
        [](const std::vector<double>& xs, const std::vector<double>& ys) {
            return detail::least_squares_slope(xs, ys).slope;
        },
        detail::tree_dim(trees));
}

inline DimensionReport dim_hausdorff(const std::vector<ShellCells>& shells, double alpha_tol) {
    return dim_hausdorff_trees(cover_trees_of(shells), alpha_tol);
}

// Lower variant: the transition where tail covering values stop decaying,
// judged by the minimal chord slope instead of the mean slope.
inline DimensionReport dim_hausdorff_lower_trees(const std::vector<CoverTree>& trees,
                                                 double alpha_tol) {
    return detail::dim_from_trees(
        trees, alpha_tol,
        [](const std::vector<double>& xs, const std::vector<double>& ys) {
            return detail::min_chord_slope(xs, ys);
        },
        detail::tree_dim(trees));
}

inline DimensionReport dim_hausdorff_lower(const std::vector<ShellCells>& shells,
                                           double alpha_tol) {
    return dim_hausdorff_lower_trees(cover_trees_of(shells), alpha_tol);
}

struct MinkowskiReport {
    double upper = 0.0;
    double lower = 0.0;
    bool ok = false;
    std::string status = "ok";
    std::vector<double> ratios;  // n^{-1} log2 card(A ∩ box(n)), -inf for zero
    int window_lo = 0;
    int window_hi = 0;
};

// Box-growth dimension proxies: extremes of n^{-1} log2 card(A ∩ box(n)) over
// the tail window, the finite-scale stand-ins for the limsup and liminf.
inline MinkowskiReport minkowski_dims(const std::vector<std::uint64_t>& counts) {
    MinkowskiReport rep;
    const int N = static_cast<int>(counts.size()) - 1;
    bool any = false;
    rep.ratios.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const bool nonzero = counts[i] > 0;
        any = any || nonzero;
        rep.ratios[i] = nonzero && i > 0
                            ? std::log2(static_cast<double>(counts[i])) / static_cast<double>(i)
                            : -std::numeric_limits<double>::infinity();
    }
    if (!any || N < 1) {
        rep.status = "all_zero";
        return rep;
    }
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] < counts[i - 1]) throw std::invalid_argument("box counts must be nondecreasing");
    }
    rep.window_lo = std::max((N + 1) / 2, 1);
    rep.window_hi = N;
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    int used = 0;
    for (int n = rep.window_lo; n <= rep.window_hi; ++n) {
        if (counts[static_cast<std::size_t>(n)] == 0) continue;
        hi = std::max(hi, rep.ratios[static_cast<std::size_t>(n)]);
        lo = std::min(lo, rep.ratios[static_cast<std::size_t>(n)]);
        ++used;
    }
    if (used == 0) {
        rep.status = "window_empty";
        return rep;
    }
    rep.upper = hi;
    rep.lower = lo;
    rep.ok = true;
    return rep;
}

}  // namespace macrodim

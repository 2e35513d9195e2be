#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "macrodim/green.hpp"
#include "macrodim/lattice.hpp"
#include "macrodim/percolation.hpp"
#include "macrodim/rng.hpp"
#include "macrodim/sampling.hpp"

namespace macrodim {

struct SimplexMeasure {
    std::vector<LatticePoint> support;
    std::vector<double> weights;

    void validate() const {
        if (support.size() != weights.size())
            throw std::invalid_argument("simplex measure: support/weights size mismatch");
        double sum = 0.0;
        for (double w : weights) {
            if (w < -1e-15 || w > 1.0 + 1e-12)
                throw std::invalid_argument("simplex measure: weight outside [0,1]");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-10)
            throw std::invalid_argument("simplex measure: weights must sum to 1");
    }
};

enum class KernelMode { martin, classical };

namespace detail {

struct KernelMatrix {
    std::size_t n = 0;
    std::vector<double> sym;  // symmetrized kernel, row-major n x n

    double quad(const std::vector<double>& mu) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = sym.data() + i * n;
            double r = 0.0;
            for (std::size_t j = 0; j < n; ++j) r += row[j] * mu[j];
            acc += mu[i] * r;
        }
        return acc;
    }

    void grad(const std::vector<double>& mu, std::vector<double>& out) const {
        out.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = sym.data() + i * n;
            double r = 0.0;
            for (std::size_t j = 0; j < n; ++j) r += row[j] * mu[j];
            out[i] = 2.0 * r;
        }
    }
};

// K(x,y) = [g(x,y)/g(a,y)] * p^{-d(x,y)} for same-shell pairs, weight 1 across
// shells; classical mode drops the normalization and the p-weights.
inline KernelMatrix build_kernel(const std::vector<LatticePoint>& F, const LatticePoint& a,
                                 double p, const GreenOracle& green, KernelMode mode) {
    const std::size_t n = F.size();
    KernelMatrix K;
    K.n = n;
    std::vector<int> shell(n);
    std::vector<double> ga(n);
    for (std::size_t i = 0; i < n; ++i) {
        shell[i] = shell_of(F[i]);
        if (mode == KernelMode::martin) {
            ga[i] = green.g(a, F[i]);
            if (!(ga[i] > 0.0))
                throw std::runtime_error("martin energy: support point unreachable from a");
        }
    }
    std::vector<double> raw(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = green.g(F[i], F[j]);
            if (mode == KernelMode::martin) {
                v /= ga[j];
                if (shell[i] == shell[j]) v *= std::pow(p, -tree_dist(F[i], F[j]));
            }
            raw[i * n + j] = v;
        }
    }
    K.sym.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            K.sym[i * n + j] = 0.5 * (raw[i * n + j] + raw[j * n + i]);
    return K;
}

}  // namespace detail

// Combined energy of a probability measure. Martin mode: cross-shell pairs at
// weight 1, same-shell pairs reweighted by p^{-d(x,y)}; p = 1 recovers the
// plain Martin energy. Classical mode: sum of g(x,y) mu(x) mu(y).
inline double energy(const SimplexMeasure& mu, const LatticePoint& a, double p,
                     const GreenOracle& green, KernelMode mode) {
    mu.validate();
    if (mode == KernelMode::martin) check_percolation_p(p);
    const auto K = detail::build_kernel(mu.support, a, p, green, mode);
    return K.quad(mu.weights);
}

struct CapacitySolverOptions {
    int starts = 10;
    int max_iters = 10000;
    double gap_tol = 1e-9;
    std::uint64_t seed = 0x6d616372ULL;
};

struct CapacityResult {
    double value = 0.0;   // 1 / min energy
    double energy = 0.0;  // minimized quadratic form
    SimplexMeasure minimizer;
    int iterations = 0;
    int restarts = 0;
    double fw_gap = 0.0;
    double lambda_min_estimate = 0.0;
    bool convex_certified = false;  // nonnegative smallest-eigenvalue estimate
};

namespace detail {

struct FwOutcome {
    double value = std::numeric_limits<double>::infinity();
    std::vector<double> mu;
    int iters = 0;
    double gap = 0.0;
};

// Frank–Wolfe with away steps and exact line search on the quadratic.
// The symmetrized kernel need not be PSD; away steps plus multi-start give a
// good stationary point and the small-instance grid oracle certifies quality
// in tests.
inline FwOutcome frank_wolfe(const KernelMatrix& K, std::vector<double> mu, int max_iters,
                             double gap_tol) {
    const std::size_t n = K.n;
    FwOutcome out;
    std::vector<double> grad;
    std::vector<double> dir(n);
    double f = K.quad(mu);
    int it = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (; it < max_iters; ++it) {
        K.grad(mu, grad);
        std::size_t s = 0, v = 0;
        double gmin = std::numeric_limits<double>::infinity();
        double gmax = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (grad[i] < gmin) {
                gmin = grad[i];
                s = i;
            }
            if (mu[i] > 1e-16 && grad[i] > gmax) {
                gmax = grad[i];
                v = i;
            }
        }
        double gdotmu = 0.0;
        for (std::size_t i = 0; i < n; ++i) gdotmu += grad[i] * mu[i];
        gap = gdotmu - gmin;
        if (gap <= gap_tol * std::max(std::abs(f), 1e-12)) break;

        const bool away = (gmax - gdotmu) > (gdotmu - gmin);
        double gamma_max;
        if (away) {
            // move away from vertex v: d = mu - e_v
            for (std::size_t i = 0; i < n; ++i) dir[i] = mu[i];
            dir[v] -= 1.0;
            gamma_max = mu[v] / std::max(1.0 - mu[v], 1e-300);
        } else {
            // toward vertex s: d = e_s - mu
            for (std::size_t i = 0; i < n; ++i) dir[i] = -mu[i];
            dir[s] += 1.0;
            gamma_max = 1.0;
        }
        // f(mu + t d) = f + 2 t <K mu, d> + t^2 <K d, d>
        double kd = 0.0, dkd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = K.sym.data() + i * n;
            double r = 0.0;
            for (std::size_t j = 0; j < n; ++j) r += row[j] * dir[j];
            kd += mu[i] * r;
            dkd += dir[i] * r;
        }
        double t;
        if (dkd > 0.0) {
            t = std::clamp(-kd / dkd, 0.0, gamma_max);
        } else {
            // nonconvex direction: the quadratic decreases toward the boundary
            t = kd < 0.0 ? gamma_max : 0.0;
        }
        if (t <= 0.0) break;
        for (std::size_t i = 0; i < n; ++i) mu[i] = std::max(mu[i] + t * dir[i], 0.0);
        // renormalize drift
        double sum = 0.0;
        for (double w : mu) sum += w;
        for (double& w : mu) w /= sum;
        f = K.quad(mu);
    }
    out.value = f;
    out.mu = std::move(mu);
    out.iters = it;
    out.gap = gap;
    return out;
}

inline double lambda_min_estimate(const KernelMatrix& K, std::uint64_t seed) {
    const std::size_t n = K.n;
    if (n == 0) return 0.0;
    if (n == 1) return K.sym[0];
    // power iteration on (sigma I - K): sigma from the Gershgorin upper bound
    double sigma = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(K.sym[i * n + j]);
        sigma = std::max(sigma, row);
    }
    Rng rng(seed);
    std::vector<double> v(n), w(n);
    for (double& x : v) x = rng.next_unit() - 0.5;
    double lam = 0.0;
    for (int it = 0; it < 60; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = K.sym.data() + i * n;
            double r = 0.0;
            for (std::size_t j = 0; j < n; ++j) r += row[j] * v[j];
            w[i] = sigma * v[i] - r;
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm <= 0.0) break;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
        lam = norm;
    }
    return sigma - lam;  // estimate of the smallest eigenvalue of K
}

}  // namespace detail

// Martin p-capacity of a finite set: reciprocal of the minimized combined
// energy over the simplex of probability measures on F. For finite F the sup
// over finite subsets is attained at F itself by monotonicity.
inline CapacityResult cp_capacity(const std::vector<LatticePoint>& F, const LatticePoint& a,
                                  double p, const GreenOracle& green,
                                  CapacitySolverOptions options = {}) {
    if (F.empty()) {
        CapacityResult r;
        r.energy = std::numeric_limits<double>::infinity();
        return r;
    }
    check_percolation_p(p);
    const auto K = detail::build_kernel(F, a, p, green, KernelMode::martin);
    const std::size_t n = F.size();

    detail::FwOutcome best;
    int restarts = 0;
    int total_iters = 0;
    for (int s = 0; s < std::max(1, options.starts); ++s) {
        std::vector<double> mu(n, 1.0 / static_cast<double>(n));
        if (s > 0) {
            // Dirichlet(1) start
            Rng rng(derive_stream(options.seed, static_cast<std::uint64_t>(s)));
            double sum = 0.0;
            for (double& w : mu) {
                w = -std::log(std::max(rng.next_unit(), 1e-300));
                sum += w;
            }
            for (double& w : mu) w /= sum;
        }
        auto res = detail::frank_wolfe(K, std::move(mu), options.max_iters, options.gap_tol);
        total_iters += res.iters;
        if (res.value < best.value) best = std::move(res);
        ++restarts;
        if (n == 1) break;
    }

    CapacityResult out;
    out.energy = best.value;
    out.value = best.value > 0.0 ? 1.0 / best.value : std::numeric_limits<double>::infinity();
    out.minimizer.support = F;
    out.minimizer.weights = best.mu;
    out.iterations = total_iters;
    out.restarts = restarts;
    out.fw_gap = best.gap;
    out.lambda_min_estimate = detail::lambda_min_estimate(K, options.seed ^ 0x9177);
    out.convex_certified = out.lambda_min_estimate >= -1e-9 * std::abs(K.sym[0]);
    return out;
}

// ---------------------------------------------------------------------------
// Series trend classification shared by the recurrence and p_c tests.
// ---------------------------------------------------------------------------

enum class Trend { diverging, converging, inconclusive };

inline const char* trend_name(Trend t) {
    switch (t) {
        case Trend::diverging: return "diverging";
        case Trend::converging: return "converging";
        default: return "inconclusive";
    }
}

struct TrendReport {
    Trend trend = Trend::inconclusive;
    double geometric_ratio = 0.0;  // fitted per-shell decay of the increments
    double fit_r2 = 0.0;
    double tail_fraction = 0.0;    // mean(last-quarter) / mean(first-half)
    int nonzero_terms = 0;
};

// Increments c_k of a nonnegative series: converging when the increments decay
// geometrically (log-linear fit with R^2 >= 0.9, ratio <= 0.8) or the tail is
// negligible against the head; diverging when the tail keeps a substantial
// fraction of the head rate. The ratio threshold sits well below 1 because
// subsampled supports depress deep-shell capacities by a mild decay factor
// that must not read as convergence.
inline TrendReport classify_trend(const std::vector<double>& increments) {
    TrendReport rep;
    const int K = static_cast<int>(increments.size()) - 1;
    std::vector<double> ks, logs;
    for (int k = 0; k <= K; ++k) {
        const double c = increments[static_cast<std::size_t>(k)];
        if (c > 0.0) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(std::log2(c));
            ++rep.nonzero_terms;
        }
    }
    if (rep.nonzero_terms < 2) {
        rep.trend = Trend::converging;
        return rep;
    }
    // least-squares fit of log2 increments against shell index
    double mx = 0, my = 0;
    const std::size_t n = ks.size();
    for (std::size_t i = 0; i < n; ++i) {
        mx += ks[i];
        my += logs[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (ks[i] - mx) * (ks[i] - mx);
        sxy += (ks[i] - mx) * (logs[i] - my);
        syy += (logs[i] - my) * (logs[i] - my);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    rep.geometric_ratio = std::exp2(slope);
    rep.fit_r2 = (syy > 0 && sxx > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;

    const int head_end = K / 2;
    const int tail_start = K - std::max(K / 4, 1) + 1;
    double head = 0.0, tail = 0.0;
    int nh = 0, nt = 0;
    for (int k = 0; k <= head_end; ++k) {
        head += increments[static_cast<std::size_t>(k)];
        ++nh;
    }
    for (int k = tail_start; k <= K; ++k) {
        tail += increments[static_cast<std::size_t>(k)];
        ++nt;
    }
    const double head_mean = nh > 0 ? head / nh : 0.0;
    const double tail_mean = nt > 0 ? tail / nt : 0.0;
    rep.tail_fraction = head_mean > 0.0 ? tail_mean / head_mean : (tail_mean > 0.0 ? 1e9 : 0.0);

    if (rep.fit_r2 >= 0.9 && rep.geometric_ratio <= 0.8) {
        rep.trend = Trend::converging;
    } else if (rep.tail_fraction <= 0.05) {
        rep.trend = Trend::converging;
    } else if (rep.tail_fraction >= 0.25) {
        rep.trend = Trend::diverging;
    } else {
        rep.trend = Trend::inconclusive;
    }
    return rep;
}

// ---------------------------------------------------------------------------

struct LampertiReport {
    double constant = 0.0;   // max sampled cross-shell ratio sum
    bool stabilized = false; // max over larger gaps stops growing
    std::vector<double> per_gap_max;
    int k_max = 0;
    int min_gap = 0;
};

// Samples the cross-shell ratio g(x,y)/g(a,y) + g(y,x)/g(a,x) over pairs with
// a shell gap, reporting the largest value found and whether it stabilizes as
// the gap grows.
inline LampertiReport lamperti_check(const GreenOracle& green, const LatticePoint& a, int k_max,
                                     int samples_per_shell = 24, int min_gap = 2,
                                     std::uint64_t seed = 0x4c616dULL) {
    const int d = a.dim();
    LampertiReport rep;
    rep.k_max = k_max;
    rep.min_gap = min_gap;

    // Deterministic shell samples.
    auto sample_shell = [&](int k) {
        std::vector<LatticePoint> pts;
        Rng rng(derive_stream(seed, static_cast<std::uint64_t>(k)));
        const Coord lo = k == 0 ? 0 : (Coord{1} << (k - 1));
        const Coord hi = Coord{1} << k;
        while (static_cast<int>(pts.size()) < samples_per_shell) {
            LatticePoint p;
            p.coords.resize(static_cast<std::size_t>(d));
            // at least one coordinate in the outer band to land in shell k
            const int band = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d)));
            for (int i = 0; i < d; ++i) {
                const Coord span = (i == band) ? (hi - lo) : hi;
                const Coord base = (i == band) ? lo : 0;
                Coord v = base + static_cast<Coord>(rng.next_below(static_cast<std::uint64_t>(span)));
                if (rng.next_u64() & 1) v = -v - 1;
                p.coords[static_cast<std::size_t>(i)] = v;
            }
            if (shell_of(p) == k) pts.push_back(std::move(p));
        }
        return pts;
    };

    std::vector<std::vector<LatticePoint>> shells;
    for (int k = 0; k <= k_max; ++k) shells.push_back(sample_shell(k));

    rep.per_gap_max.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
    for (int n = 0; n <= k_max; ++n) {
        for (int m = n + min_gap; m <= k_max; ++m) {
            double worst = 0.0;
            for (const auto& x : shells[static_cast<std::size_t>(n)]) {
                for (const auto& y : shells[static_cast<std::size_t>(m)]) {
                    const double r1 = green.g(x, y) / green.g(a, y);
                    const double r2 = green.g(y, x) / green.g(a, x);
                    worst = std::max(worst, r1 + r2);
                }
            }
            const int gap = m - n;
            rep.per_gap_max[static_cast<std::size_t>(gap)] =
                std::max(rep.per_gap_max[static_cast<std::size_t>(gap)], worst);
        }
    }
    for (double v : rep.per_gap_max) rep.constant = std::max(rep.constant, v);
    // Stabilized: the largest ratio over gaps >= 3 does not exceed the small-gap level.
    double early = 0.0, late = 0.0;
    for (int gp = min_gap; gp <= k_max; ++gp) {
        const double v = rep.per_gap_max[static_cast<std::size_t>(gp)];
        if (gp < min_gap + 2) early = std::max(early, v);
        else late = std::max(late, v);
    }
    rep.stabilized = late <= early * 1.25 || late == 0.0;
    return rep;
}

// Deterministic stratified subsample: keeps at most `cap` cells of a shell,
// spread across the level-ceil(k/2) cubes. Subsampling only lowers capacity.
inline std::vector<LatticePoint> subsample_shell(const std::vector<LatticePoint>& cells, int k,
                                                 std::size_t cap,
                                                 std::uint64_t seed = 0x5354ULL) {
    if (cells.size() <= cap) return cells;
    const int stratum_level = (k + 1) / 2;
    std::map<std::vector<Coord>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::vector<Coord> key(cells[i].coords.size());
        for (std::size_t j = 0; j < key.size(); ++j)
            key[j] = cells[i].coords[j] >> stratum_level;
        strata[key].push_back(i);
    }
    // shuffle within strata deterministically, then round-robin
    std::vector<std::vector<std::size_t>> pools;
    for (auto& [key, idx] : strata) {
        Rng rng(derive_stream(seed, point_key(key.data(), key.size())));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.next_below(i)]);
        pools.push_back(std::move(idx));
    }
    std::vector<LatticePoint> out;
    out.reserve(cap);
    std::size_t round = 0;
    while (out.size() < cap) {
        bool any = false;
        for (auto& pool : pools) {
            if (round < pool.size()) {
                out.push_back(cells[pool[round]]);
                any = true;
                if (out.size() == cap) break;
            }
        }
        if (!any) break;
        ++round;
    }
    return out;
}

struct RecurrenceVerdict {
    std::vector<double> shell_capacity;  // c_p(F ∩ shell k ; a)
    std::vector<double> partial_sums;
    TrendReport trend;
    LampertiReport lamperti;
    bool subsampled = false;
};

// Per-shell Martin capacities and the partial-sum trend of their series.
// Divergence at p = 1 is the recurrence criterion under the Lamperti check.
inline RecurrenceVerdict recurrence_test(const std::vector<std::vector<LatticePoint>>& F_per_shell,
                                         const LatticePoint& a, const GreenOracle& green, int K,
                                         double p = 1.0, std::size_t subsample_cap = 512,
                                         CapacitySolverOptions solver = {}) {
    RecurrenceVerdict verdict;
    verdict.shell_capacity.assign(static_cast<std::size_t>(K) + 1, 0.0);
    double sum = 0.0;
    for (int k = 0; k <= K; ++k) {
        const auto& full = static_cast<std::size_t>(k) < F_per_shell.size()
                               ? F_per_shell[static_cast<std::size_t>(k)]
                               : std::vector<LatticePoint>{};
        if (!full.empty()) {
            auto F = subsample_shell(full, k, subsample_cap);
            verdict.subsampled = verdict.subsampled || F.size() < full.size();
            const auto cap = cp_capacity(F, a, p, green, solver);
            verdict.shell_capacity[static_cast<std::size_t>(k)] = cap.value;
            sum += cap.value;
        }
        verdict.partial_sums.push_back(sum);
    }
    verdict.trend = classify_trend(verdict.shell_capacity);
    verdict.lamperti = lamperti_check(green, a, K);
    return verdict;
}

struct GammaEstimate {
    double series = 0.0;     // transition exponent of sum 2^{-k gamma} U(shell k)
    double potential = 0.0;  // growth rate of log2 U(box n) over the tail window
    bool ok = false;
    std::string status = "ok";
    std::vector<double> log2_shell_U;
};

// Convergence exponent of the Green series, from the shell potentials of a
// table. Series mode: the gamma where the regression slope of
// log2(2^{-k gamma} U(shell k)) over the tail window changes sign, i.e. the
// slope of log2 U(shell k). Potential mode: the largest one-step increment of
// log2 U(box n) over the window. The two must agree for a sound table.
inline GammaEstimate gamma_c_estimate(const GreenTable& table) {
    GammaEstimate est;
    const int K = static_cast<int>(table.shell_potential.size()) - 1;
    if (K < 3) {
        est.status = "insufficient_shell_coverage";
        return est;
    }
    std::vector<double> ks, logs;
    est.log2_shell_U.assign(static_cast<std::size_t>(K) + 1,
                            -std::numeric_limits<double>::infinity());
    for (int k = 0; k <= K; ++k) {
        const double u = table.shell_potential[static_cast<std::size_t>(k)].estimate;
        if (u > 0.0) est.log2_shell_U[static_cast<std::size_t>(k)] = std::log2(u);
    }
    const int lo = (K + 1) / 2;
    for (int k = lo; k <= K; ++k) {
        if (est.log2_shell_U[static_cast<std::size_t>(k)] >
            -std::numeric_limits<double>::infinity()) {
            ks.push_back(static_cast<double>(k));
            logs.push_back(est.log2_shell_U[static_cast<std::size_t>(k)]);
        }
    }
    if (ks.size() < 3) {
        est.status = "insufficient_shell_coverage";
        return est;
    }
    // series: slope of log2 U(shell k); the series sum_k 2^{k(slope-gamma)}
    // flips between divergence and convergence exactly at gamma = slope.
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        mx += ks[i];
        my += logs[i];
    }
    mx /= static_cast<double>(ks.size());
    my /= static_cast<double>(ks.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxx += (ks[i] - mx) * (ks[i] - mx);
        sxy += (ks[i] - mx) * (logs[i] - my);
    }
    est.series = sxy / sxx;

    // potential: max growth increment of log2 U(box n) over the window
    double run = 0.0;
    std::vector<double> box_log;
    for (int k = 0; k <= K; ++k) {
        run += table.shell_potential[static_cast<std::size_t>(k)].estimate;
        box_log.push_back(run > 0 ? std::log2(run) : -std::numeric_limits<double>::infinity());
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int n = lo; n < K; ++n)
        best = std::max(best, box_log[static_cast<std::size_t>(n + 1)] -
                                  box_log[static_cast<std::size_t>(n)]);
    est.potential = best;
    est.ok = true;
    return est;
}

// ---------------------------------------------------------------------------
// Full-shell capacity via the uniform measure. A fixed-size subsample cannot
// carry the full shell's capacity once p^{-(k+1)} outweighs 1/n (the diagonal
// of the energy collapses it), so the energy of the uniform measure on the
// whole shell is estimated instead: pairs are sampled stratified by tree
// distance with exact stratum weights, and the diagonal stratum is exact.
// 1/energy is a capacity lower bound that is near-optimal for shells by
// symmetry.
// ---------------------------------------------------------------------------

struct ShellEnergyBudget {
    int x_samples = 128;
    int y_per_stratum = 24;
};

namespace detail {

// Cells of shell k inside the level-n dyadic cube holding x: the cube's cell
// count minus its overlap with box(k-1).
inline double shell_cells_in_cube(const LatticePoint& x, int n, int k) {
    const int d = x.dim();
    double cube_cells = 1.0, overlap = 1.0;
    for (int i = 0; i < d; ++i) {
        const Coord c = x[i] >> n;
        const double lo = static_cast<double>(c) * std::exp2(n);
        const double hi = lo + std::exp2(n);
        cube_cells *= std::exp2(n);
        if (k >= 1) {
            const double half = std::exp2(k - 1);
            overlap *= std::max(0.0, std::min(hi, half) - std::max(lo, -half));
        }
    }
    if (k < 1) overlap = 0.0;
    return cube_cells - overlap;
}

}  // namespace detail

// Capacity estimate of the whole shell k from the uniform measure's combined
// energy. Returns a lower bound on c_p(shell k; a) up to sampling error.
inline double full_shell_capacity_uniform(int d, int k, const LatticePoint& a, double p,
                                          const GreenOracle& green, std::uint64_t seed,
                                          ShellEnergyBudget budget = {}) {
    check_percolation_p(p);
    const double shell_size = std::exp2(static_cast<double>((k + 1) * d)) -
                              (k >= 1 ? std::exp2(static_cast<double>(k * d)) : 0.0);
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(k)));
    const double g00 = green.g00();

    double energy = 0.0;
    for (int xs = 0; xs < budget.x_samples; ++xs) {
        const LatticePoint x = random_point_in_shell(d, k, rng);
        const double gax = green.g(a, x);
        // diagonal stratum: y = x, tree distance k+1, weight 1/|shell|
        energy += (g00 / gax) * std::pow(p, -(k + 1)) / shell_size / budget.x_samples;

        // rings by join level n = 1..k (tree distance j = k+1-n) and the
        // outside-top-cube stratum (distance 0)
        double cnt_inner = 1.0;  // cells sharing x's level-(n-1) cube
        for (int n = 1; n <= k + 1; ++n) {
            const bool top = n == k + 1;  // outside x's level-k cube
            const double cnt =
                top ? shell_size : detail::shell_cells_in_cube(x, n, k);
            const double ring = cnt - cnt_inner;
            cnt_inner = cnt;
            if (ring <= 0.0) continue;
            const int j = k + 1 - n;  // tree distance of the stratum
            double mean_kernel = 0.0;
            int got = 0;
            for (int ys = 0; ys < budget.y_per_stratum; ++ys) {
                // uniform cell of the ring by rejection
                LatticePoint y;
                bool ok = false;
                for (int attempt = 0; attempt < 256 && !ok; ++attempt) {
                    if (top) {
                        y = random_point_in_shell(d, k, rng);
                        ok = !cube_at(x, k).contains(y);
                    } else {
                        y.coords.resize(static_cast<std::size_t>(d));
                        for (int i = 0; i < d; ++i) {
                            const Coord base = (x[i] >> n) << n;
                            y.coords[static_cast<std::size_t>(i)] =
                                base +
                                static_cast<Coord>(rng.next_below(std::uint64_t{1} << n));
                        }
                        ok = shell_of(y) == k && !cube_at(x, n - 1).contains(y);
                    }
                }
                if (!ok) continue;
                mean_kernel += green.g(x, y) / green.g(a, y);
                ++got;
            }
            if (got == 0) continue;
            mean_kernel /= got;
            energy += mean_kernel * std::pow(p, -j) * (ring / shell_size) / budget.x_samples;
        }
    }
    return energy > 0.0 ? 1.0 / energy : 0.0;
}

struct PcEstimate {
    double p_c = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double dimension_prediction = 0.0;  // -log2 p_c
    std::string status = "ok";
    std::vector<double> grid;
    std::vector<TrendReport> per_p;
};

// Critical percolation parameter of the capacity series: the transition point
// p where sum_k c_p(F ∩ shell k; a) flips from converging to diverging.
inline PcEstimate p_c_estimate(const std::vector<std::vector<LatticePoint>>& F_per_shell,
                               const LatticePoint& a, const GreenOracle& green, int K,
                               std::vector<double> p_grid, std::size_t subsample_cap = 512,
                               CapacitySolverOptions solver = {}) {
    PcEstimate est;
    std::sort(p_grid.begin(), p_grid.end());
    est.grid = p_grid;

    // Subsample once; reuse across the grid so the p-monotonicity of the
    // kernel carries over to the classifications.
    std::vector<std::vector<LatticePoint>> subs(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k) {
        if (static_cast<std::size_t>(k) < F_per_shell.size())
            subs[static_cast<std::size_t>(k)] =
                subsample_shell(F_per_shell[static_cast<std::size_t>(k)], k, subsample_cap);
    }

    int last_conv = -1, first_div = -1;
    for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
        std::vector<double> caps(static_cast<std::size_t>(K) + 1, 0.0);
        for (int k = 0; k <= K; ++k) {
            if (!subs[static_cast<std::size_t>(k)].empty()) {
                caps[static_cast<std::size_t>(k)] =
                    cp_capacity(subs[static_cast<std::size_t>(k)], a, p_grid[pi], green, solver)
                        .value;
            }
        }
        est.per_p.push_back(classify_trend(caps));
        if (est.per_p.back().trend == Trend::converging) last_conv = static_cast<int>(pi);
        if (est.per_p.back().trend == Trend::diverging && first_div < 0)
            first_div = static_cast<int>(pi);
    }
    if (first_div < 0) {
        est.status = "no_transition_in_grid";
        est.p_c = p_grid.back();
        est.bracket_lo = p_grid.back();
        est.bracket_hi = 1.0;
    } else if (last_conv < 0 || last_conv > first_div) {
        if (last_conv < 0) {
            est.status = "diverges_at_grid_floor";
            est.p_c = p_grid.front();
            est.bracket_lo = 0.0;
            est.bracket_hi = p_grid.front();
        } else {
            est.status = "non_monotone_classification";
            est.bracket_lo = p_grid[static_cast<std::size_t>(first_div)];
            est.bracket_hi = p_grid[static_cast<std::size_t>(last_conv)];
            est.p_c = 0.5 * (est.bracket_lo + est.bracket_hi);
        }
    } else {
        est.bracket_lo = p_grid[static_cast<std::size_t>(last_conv)];
        est.bracket_hi = p_grid[static_cast<std::size_t>(first_div)];
        est.p_c = 0.5 * (est.bracket_lo + est.bracket_hi);
    }
    est.dimension_prediction = -std::log2(est.p_c);
    return est;
}

// Critical parameter of the capacity series for the whole lattice, using the
// uniform-measure shell capacities (see full_shell_capacity_uniform).
inline PcEstimate p_c_estimate_full_shells(int d, int K, const LatticePoint& a,
                                           const GreenOracle& green, std::vector<double> p_grid,
                                           std::uint64_t seed, ShellEnergyBudget budget = {}) {
    PcEstimate est;
    std::sort(p_grid.begin(), p_grid.end());
    est.grid = p_grid;
    int last_conv = -1, first_div = -1;
    for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
        std::vector<double> caps(static_cast<std::size_t>(K) + 1, 0.0);
        for (int k = 0; k <= K; ++k)
            caps[static_cast<std::size_t>(k)] =
                full_shell_capacity_uniform(d, k, a, p_grid[pi], green, seed, budget);
        est.per_p.push_back(classify_trend(caps));
        if (est.per_p.back().trend == Trend::converging) last_conv = static_cast<int>(pi);
        if (est.per_p.back().trend == Trend::diverging && first_div < 0)
            first_div = static_cast<int>(pi);
    }
    if (first_div < 0) {
        est.status = "no_transition_in_grid";
        est.p_c = p_grid.back();
        est.bracket_lo = p_grid.back();
        est.bracket_hi = 1.0;
    } else if (last_conv < 0) {
        est.status = "diverges_at_grid_floor";
        est.p_c = p_grid.front();
        est.bracket_lo = 0.0;
        est.bracket_hi = p_grid.front();
    } else if (last_conv > first_div) {
        est.status = "non_monotone_classification";
        est.bracket_lo = p_grid[static_cast<std::size_t>(first_div)];
        est.bracket_hi = p_grid[static_cast<std::size_t>(last_conv)];
        est.p_c = 0.5 * (est.bracket_lo + est.bracket_hi);
    } else {
        est.bracket_lo = p_grid[static_cast<std::size_t>(last_conv)];
        est.bracket_hi = p_grid[static_cast<std::size_t>(first_div)];
        est.p_c = 0.5 * (est.bracket_lo + est.bracket_hi);
    }
    est.dimension_prediction = -std::log2(est.p_c);
    return est;
}

}  // namespace macrodim

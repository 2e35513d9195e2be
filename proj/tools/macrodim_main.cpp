// macrodim: batch experiments on macroscopic fractal percolation, random-walk
// potential theory, and large-scale dimension estimation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "macrodim/capacity.hpp"
#include "macrodim/dimension.hpp"
#include "macrodim/experiments.hpp"
#include "macrodim/green.hpp"
#include "macrodim/io.hpp"
#include "macrodim/percolation.hpp"
#include "macrodim/sampling.hpp"
#include "macrodim/walk.hpp"

namespace {

using macrodim::Json;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_override;
    std::string filter;
};

Json load_or_default(const CommonArgs& args, Json defaults) {
    Json cfg = std::move(defaults);
    if (!args.config_path.empty()) {
        const Json user = macrodim::load_config(args.config_path);
        if (!user.is_object()) throw macrodim::ConfigError(args.config_path + ": must be a JSON object");
        for (auto it = user.begin(); it != user.end(); ++it) cfg[it.key()] = it.value();
    }
    if (args.seed_override) cfg["seed"] = *args.seed_override;
    return cfg;
}

std::filesystem::path out_dir(const CommonArgs& args, const Json& cfg) {
    if (!args.out_override.empty()) return args.out_override;
    if (const char* env = std::getenv("MACRODIM_OUT"); env && *env) return env;
    if (cfg.contains("out")) return cfg.at("out").get<std::string>();
    return "out";
}

template <typename T>
T need(const Json& cfg, const char* key) {
    if (!cfg.contains(key)) throw macrodim::ConfigError(std::string("missing config key: ") + key);
    try {
        return cfg.at(key).get<T>();
    } catch (const std::exception& e) {
        throw macrodim::ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

macrodim::StepDistribution preset_from_config(const Json& cfg) {
    const std::string preset = need<std::string>(cfg, "preset");
    const int d = need<int>(cfg, "d");
    if (preset == "srw") return macrodim::preset_srw(d);
    if (preset == "heavy_tail")
        return macrodim::preset_heavy_tail(d, need<double>(cfg, "alpha"),
                                           need<macrodim::Coord>(cfg, "R"));
    throw macrodim::ConfigError("unknown preset: " + preset + " (srw | heavy_tail)");
}

int cmd_percolate(const CommonArgs& args) {
    Json defaults;
    defaults["d"] = 2;
    defaults["p"] = 0.8;
    defaults["K"] = 5;
    defaults["seed"] = 1;
    defaults["max_cells"] = 10000000;
    const Json cfg = load_or_default(args, defaults);
    const int d = need<int>(cfg, "d");
    const double p = need<double>(cfg, "p");
    const int K = need<int>(cfg, "K");
    const macrodim::PercolationField field{need<std::uint64_t>(cfg, "seed"), d};
    const auto dir = out_dir(args, cfg);

    Json record;
    record["experiment"] = "percolate";
    record["inputs"] = cfg;

    std::vector<std::pair<int, macrodim::LatticePoint>> rows;
    bool truncated = false;
    const std::size_t max_cells = need<std::uint64_t>(cfg, "max_cells");
    for (int k = 0; k <= K; ++k) {
        auto s = macrodim::survivor_cells(field, p, k, max_cells);
        truncated = truncated || s.truncated;
        for (auto& c : s.cells) rows.emplace_back(k, std::move(c));
    }
    macrodim::write_file_atomic(dir / "survivors.csv", macrodim::cells_to_csv(rows, d));
    record["survivor_cells"] = rows.size();
    record["truncated"] = truncated;

    if (d == 2) {
        const auto img = macrodim::raster2d(field, p, K);
        macrodim::write_file_atomic(dir / "raster.pgm", macrodim::pgm_encode(img));
        record["raster"] = "raster.pgm";
    }
    macrodim::write_file_atomic(dir / "record.json", record.dump(2) + "\n");
    std::cout << "percolate: " << rows.size() << " surviving cells, outputs in " << dir << "\n";
    return 0;
}

int cmd_dim_perc(const CommonArgs& args) {
    Json defaults;
    defaults["d"] = 2;
    defaults["p"] = 0.8;
    defaults["K"] = 12;
    defaults["seeds"] = 20;
    defaults["seed"] = 1;
    defaults["alpha_tol"] = 0.02;
    defaults["max_cells"] = std::int64_t{1} << 26;
    const Json cfg = load_or_default(args, defaults);
    const int d = need<int>(cfg, "d");
    const double p = need<double>(cfg, "p");
    const int K = need<int>(cfg, "K");
    const int seeds = need<int>(cfg, "seeds");
    const double alpha_tol = need<double>(cfg, "alpha_tol");
    const std::int64_t max_cells = need<std::int64_t>(cfg, "max_cells");
    const std::uint64_t seed = need<std::uint64_t>(cfg, "seed");

    Json report;
    report["experiment"] = "dim-perc";
    report["inputs"] = cfg;
    report["target"] = std::max(d + std::log2(p), 0.0);
    Json per_seed = Json::array();
    double mean = 0.0;
    bool truncated = false;
    for (int s = 0; s < seeds; ++s) {
        const macrodim::PercolationField field{
            macrodim::derive_stream(seed, static_cast<std::uint64_t>(s)), d};
        std::vector<macrodim::CoverTree> trees;
        for (int k = 0; k <= K; ++k) {
            trees.push_back(macrodim::build_cover_tree_percolation(field, p, k, max_cells));
            truncated = truncated || trees.back().truncated;
        }
        const auto rep = macrodim::dim_hausdorff_trees(trees, alpha_tol);
        mean += rep.estimate;
        Json row;
        row["seed_index"] = s;
        row["estimate"] = rep.estimate;
        row["status"] = rep.status;
        per_seed.push_back(row);
    }
    mean /= std::max(seeds, 1);
    report["mean_estimate"] = mean;
    report["truncated"] = truncated;
    report["per_seed"] = per_seed;
    const auto dir = out_dir(args, cfg);
    macrodim::write_file_atomic(dir / "dim_perc.json", report.dump(2) + "\n");
    std::cout << "dim-perc: mean estimate " << mean << " (target " << report["target"]
              << "), report in " << dir << "\n";
    return 0;
}

int cmd_walk_range(const CommonArgs& args) {
    Json defaults;
    defaults["preset"] = "srw";
    defaults["d"] = 3;
    defaults["steps"] = 1000000;
    defaults["paths"] = 10;
    defaults["seed"] = 1;
    defaults["alpha_tol"] = 0.02;
    defaults["gamma_walks"] = 2000;
    defaults["gamma_horizon"] = 1000000;
    defaults["gamma_shell_kmax"] = 8;
    const Json cfg = load_or_default(args, defaults);
    const auto dist = preset_from_config(cfg);
    const std::int64_t steps = need<std::int64_t>(cfg, "steps");
    const int paths = need<int>(cfg, "paths");
    const std::uint64_t seed = need<std::uint64_t>(cfg, "seed");
    const double alpha_tol = need<double>(cfg, "alpha_tol");

    Json report;
    report["experiment"] = "walk-range";
    report["inputs"] = cfg;
    Json per_path = Json::array();
    double mean_up = 0, mean_low = 0, mean_h = 0;
    for (int i = 0; i < paths; ++i) {
        const auto path = macrodim::sample_path(
            dist, macrodim::LatticePoint{std::vector<macrodim::Coord>(dist.d, 0)}, steps,
            macrodim::derive_stream(seed, static_cast<std::uint64_t>(i)));
        const auto range = macrodim::range_cells(path);
        int K = 0;
        for (const auto& c : range) K = std::max(K, macrodim::shell_of(c));
        const auto box_cnts = macrodim::box_counts(range, K);
        const auto mink = macrodim::minkowski_dims(box_cnts);
        auto by_shell = macrodim::cells_by_shell(range);
        std::vector<macrodim::ShellCells> shells;
        const int K_eff = std::max(macrodim::criteria::mature_shell_count(box_cnts), 1);
        for (int k = 0; k <= K_eff; ++k) {
            macrodim::ShellCells sc;
            sc.shell = k;
            if (static_cast<std::size_t>(k) < by_shell.size())
                sc.cells = std::move(by_shell[static_cast<std::size_t>(k)]);
            shells.push_back(std::move(sc));
        }
        const auto haus = macrodim::dim_hausdorff(shells, alpha_tol);
        mean_up += mink.upper;
        mean_low += mink.lower;
        mean_h += haus.estimate;
        Json row;
        row["path"] = i;
        row["range_cells"] = range.size();
        row["max_shell"] = K;
        row["upper_minkowski"] = mink.upper;
        row["lower_minkowski"] = mink.lower;
        row["hausdorff"] = haus.estimate;
        row["hausdorff_status"] = haus.status;
        per_path.push_back(row);
    }
    if (paths > 0) {
        mean_up /= paths;
        mean_low /= paths;
        mean_h /= paths;
    }
    report["mean_upper_minkowski"] = mean_up;
    report["mean_lower_minkowski"] = mean_low;
    report["mean_hausdorff"] = mean_h;
    report["per_path"] = per_path;

    // gamma reference from the same preset's occupation statistics
    macrodim::GreenOptions opt;
    opt.box_radius = 4;
    opt.shell_k_max = need<int>(cfg, "gamma_shell_kmax");
    macrodim::GreenBudget budget;
    budget.walks = need<std::int64_t>(cfg, "gamma_walks");
    budget.horizon = need<std::int64_t>(cfg, "gamma_horizon");
    const auto table = macrodim::green_estimate(dist, {}, macrodim::GreenMethod::monte_carlo,
                                                budget, macrodim::derive_stream(seed, 0x6a6a), opt);
    const auto gamma = macrodim::gamma_c_estimate(table);
    report["gamma_series"] = gamma.series;
    report["gamma_potential"] = gamma.potential;

    const auto dir = out_dir(args, cfg);
    macrodim::write_file_atomic(dir / "walk_range.json", report.dump(2) + "\n");
    std::cout << "walk-range: upper Minkowski " << mean_up << ", covering dimension " << mean_h
              << ", gamma " << gamma.series << ", report in " << dir << "\n";
    return 0;
}

int cmd_sandwich(const CommonArgs& args) {
    Json defaults;
    defaults["sets"] = 20;
    defaults["p_list"] = Json::array({0.3, 0.6, 0.9});
    defaults["trials"] = 100000;
    defaults["horizon"] = 10000;
    defaults["seed"] = 1;
    defaults["cap_radius"] = 70;
    defaults["conv_horizon"] = 100000;
    const Json cfg = load_or_default(args, defaults);
    const std::uint64_t seed = need<std::uint64_t>(cfg, "seed");

    const auto dist = macrodim::preset_srw(3);
    macrodim::GreenOptions opt;
    opt.box_radius = need<int>(cfg, "cap_radius");
    macrodim::GreenBudget budget;
    budget.horizon = need<std::int64_t>(cfg, "conv_horizon");
    const macrodim::GreenOracle oracle(macrodim::green_estimate(
        dist, {}, macrodim::GreenMethod::convolution, budget, seed ^ 0x5a, opt));

    Json report;
    report["experiment"] = "sandwich";
    report["inputs"] = cfg;
    Json rows = Json::array();
    bool all = true;

    std::vector<std::vector<macrodim::LatticePoint>> sets;
    if (cfg.contains("F")) {
        std::vector<macrodim::LatticePoint> F;
        for (const auto& j : cfg.at("F")) F.push_back(macrodim::point_from_json(j));
        sets.push_back(std::move(F));
    } else {
        macrodim::Rng rng(macrodim::derive_stream(seed, 0xe00));
        const int n_sets = need<int>(cfg, "sets");
        for (int si = 0; si < n_sets; ++si) {
            const std::size_t n = 4 + rng.next_below(37);
            std::vector<macrodim::LatticePoint> F;
            std::vector<std::uint64_t> seen;
            while (F.size() < n) {
                macrodim::LatticePoint pt{static_cast<macrodim::Coord>(rng.next_below(64)) - 32,
                                          static_cast<macrodim::Coord>(rng.next_below(64)) - 32,
                                          static_cast<macrodim::Coord>(rng.next_below(64)) - 32};
                const auto key = macrodim::point_key(pt.coords);
                if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
                    seen.push_back(key);
                    F.push_back(std::move(pt));
                }
            }
            sets.push_back(std::move(F));
        }
    }
    int case_idx = 0;
    for (std::size_t si = 0; si < sets.size(); ++si) {
        for (const auto& pj : cfg.at("p_list")) {
            const double p = pj.get<double>();
            const auto cs = macrodim::criteria::sandwich_case(
                dist, oracle, sets[si], p, need<std::int64_t>(cfg, "trials"),
                need<std::int64_t>(cfg, "horizon"),
                macrodim::derive_stream(seed, 0xe10 + case_idx));
            ++case_idx;
            all = all && cs.pass;
            Json row;
            row["set"] = si;
            row["size"] = cs.set_size;
            row["p"] = p;
            row["capacity"] = cs.capacity;
            row["hit_prob"] = cs.hit_prob;
            row["sigma"] = cs.sigma;
            row["lower_half_capacity"] = 0.5 * cs.capacity;
            row["upper_128_capacity"] = 128.0 * cs.capacity;
            row["pass"] = cs.pass;
            rows.push_back(row);
        }
    }
    report["cases"] = rows;
    report["all_within_bounds"] = all;
    report["horizon_caveat"] =
        "hit probabilities are horizon-truncated and therefore slightly low";
    const auto dir = out_dir(args, cfg);
    macrodim::write_file_atomic(dir / "sandwich.json", report.dump(2) + "\n");
    std::cout << "sandwich: " << rows.size() << " cases, all within bounds: " << std::boolalpha
              << all << ", report in " << dir << "\n";
    return 0;
}

int cmd_kolmogorov(const CommonArgs& args) {
    Json defaults;
    defaults["d_list"] = Json::array({2, 3});
    defaults["k_list"] = Json::array({20, 40, 80});
    defaults["trees"] = 1000000;
    defaults["p"] = 0.0;  // 0: critical 2^-d
    defaults["seed"] = 1;
    const Json cfg = load_or_default(args, defaults);
    const std::uint64_t seed = need<std::uint64_t>(cfg, "seed");
    const std::int64_t trees = need<std::int64_t>(cfg, "trees");

    Json report;
    report["experiment"] = "kolmogorov";
    report["inputs"] = cfg;
    Json rows = Json::array();
    for (const auto& dj : cfg.at("d_list")) {
        const int d = dj.get<int>();
        double q = need<double>(cfg, "p");
        if (q <= 0.0) q = std::exp2(-d);
        const double sigma2 = (1 << d) * q * (1.0 - q);
        for (const auto& kj : cfg.at("k_list")) {
            const int k = kj.get<int>();
            const auto est = macrodim::detail::branching_survival_mc(
                d, q, k, trees, macrodim::derive_stream(seed, 0x5000 + d * 256 + k));
            Json row;
            row["d"] = d;
            row["k"] = k;
            row["offspring_mean"] = (1 << d) * q;
            row["survival"] = est.survival;
            row["survival_exact"] = macrodim::detail::exact_branching_survival(d, q, k);
            row["k_times_survival"] = k * est.survival;
            row["limit_2_over_sigma2"] = 2.0 / sigma2;
            row["mc_sigma"] = k * est.std_err;
            rows.push_back(row);
        }
    }
    report["rows"] = rows;
    const auto dir = out_dir(args, cfg);
    macrodim::write_file_atomic(dir / "kolmogorov.json", report.dump(2) + "\n");
    std::cout << "kolmogorov: " << rows.size() << " rows, report in " << dir << "\n";
    return 0;
}

int cmd_green(const CommonArgs& args) {
    Json defaults;
    defaults["preset"] = "srw";
    defaults["d"] = 3;
    defaults["method"] = "convolution";
    defaults["box_radius"] = 20;
    defaults["walks"] = 100000;
    defaults["horizon"] = 100000;
    defaults["shell_kmax"] = -1;
    defaults["seed"] = 1;
    const Json cfg = load_or_default(args, defaults);
    const auto dist = preset_from_config(cfg);
    const std::string method_s = need<std::string>(cfg, "method");
    macrodim::GreenMethod method;
    if (method_s == "convolution") method = macrodim::GreenMethod::convolution;
    else if (method_s == "monte_carlo") method = macrodim::GreenMethod::monte_carlo;
    else throw macrodim::ConfigError("method must be convolution | monte_carlo");

    macrodim::GreenOptions opt;
    opt.box_radius = need<int>(cfg, "box_radius");
    opt.shell_k_max = need<int>(cfg, "shell_kmax");
    macrodim::GreenBudget budget;
    budget.walks = need<std::int64_t>(cfg, "walks");
    budget.horizon = need<std::int64_t>(cfg, "horizon");
    const auto table = macrodim::green_estimate(dist, {}, method, budget,
                                                need<std::uint64_t>(cfg, "seed"), opt);
    const auto dir = out_dir(args, cfg);
    macrodim::write_file_atomic(dir / "green.csv", macrodim::green_to_csv(table));
    macrodim::write_file_atomic(dir / "green.json",
                                macrodim::green_sidecar(table).dump(2) + "\n");
    std::cout << "green: g(0,0) = " << table.origin().estimate << ", table in " << dir << "\n";
    return 0;
}

int cmd_capacity(const CommonArgs& args) {
    Json defaults;
    defaults["mode"] = "recurrence";  // capacity | recurrence | pc | gamma | lamperti
    defaults["target"] = "sparse_cubes";  // sparse_cubes | full_lattice
    defaults["K"] = 8;
    defaults["p"] = 1.0;
    defaults["subsample"] = 512;
    defaults["seed"] = 1;
    defaults["cap_radius"] = 70;
    defaults["conv_horizon"] = 100000;
    defaults["p_grid"] = Json::array({0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5});
    defaults["gamma_walks"] = 2000;
    defaults["gamma_horizon"] = 1000000;
    defaults["gamma_shell_kmax"] = 8;
    const Json cfg = load_or_default(args, defaults);
    const std::uint64_t seed = need<std::uint64_t>(cfg, "seed");
    const int K = need<int>(cfg, "K");
    const auto dist = macrodim::preset_srw(3);
    const macrodim::LatticePoint a{0, 0, 0};

    Json report;
    report["experiment"] = "capacity";
    report["inputs"] = cfg;
    const std::string mode = need<std::string>(cfg, "mode");
    const auto dir = out_dir(args, cfg);

    if (mode == "gamma") {
        macrodim::GreenOptions opt;
        opt.box_radius = 4;
        opt.shell_k_max = need<int>(cfg, "gamma_shell_kmax");
        macrodim::GreenBudget budget;
        budget.walks = need<std::int64_t>(cfg, "gamma_walks");
        budget.horizon = need<std::int64_t>(cfg, "gamma_horizon");
        const auto table = macrodim::green_estimate(dist, {}, macrodim::GreenMethod::monte_carlo,
                                                    budget, seed, opt);
        const auto est = macrodim::gamma_c_estimate(table);
        report["series"] = est.series;
        report["potential"] = est.potential;
        report["status"] = est.status;
        macrodim::write_file_atomic(dir / "capacity.json", report.dump(2) + "\n");
        std::cout << "gamma: series " << est.series << ", potential " << est.potential << "\n";
        return 0;
    }

    macrodim::GreenOptions opt;
    opt.box_radius = need<int>(cfg, "cap_radius");
    macrodim::GreenBudget budget;
    budget.horizon = need<std::int64_t>(cfg, "conv_horizon");
    const macrodim::GreenOracle oracle(macrodim::green_estimate(
        dist, {}, macrodim::GreenMethod::convolution, budget, seed ^ 0xca9, opt));

    auto build_targets = [&]() {
        std::vector<std::vector<macrodim::LatticePoint>> F(static_cast<std::size_t>(K) + 1);
        const std::string target = need<std::string>(cfg, "target");
        if (target == "sparse_cubes") {
            for (macrodim::Coord j = 1; j <= 60; ++j) {
                const macrodim::LatticePoint x{0, 0, j * j * j};
                const int k = macrodim::shell_of(x);
                if (k <= K) F[static_cast<std::size_t>(k)].push_back(x);
            }
        } else if (target == "full_lattice") {
            for (int k = 0; k <= K; ++k)
                F[static_cast<std::size_t>(k)] = macrodim::sample_shell_stratified(
                    3, k, need<std::uint64_t>(cfg, "subsample"),
                    macrodim::derive_stream(seed, 0xf10 + k));
        } else {
            throw macrodim::ConfigError("target must be sparse_cubes | full_lattice");
        }
        return F;
    };

    if (mode == "lamperti") {
        const auto rep = macrodim::lamperti_check(oracle, a, K);
        report["constant"] = rep.constant;
        report["stabilized"] = rep.stabilized;
        Json gaps = Json::array();
        for (double v : rep.per_gap_max) gaps.push_back(v);
        report["per_gap_max"] = gaps;
    } else if (mode == "recurrence") {
        const auto F = build_targets();
        const auto verdict = macrodim::recurrence_test(F, a, oracle, K,
                                                       need<double>(cfg, "p"),
                                                       need<std::uint64_t>(cfg, "subsample"));
        report["trend"] = macrodim::trend_name(verdict.trend.trend);
        report["geometric_ratio"] = verdict.trend.geometric_ratio;
        report["fit_r2"] = verdict.trend.fit_r2;
        report["tail_fraction"] = verdict.trend.tail_fraction;
        Json caps = Json::array();
        for (double v : verdict.shell_capacity) caps.push_back(v);
        report["shell_capacities"] = caps;
        Json sums = Json::array();
        for (double v : verdict.partial_sums) sums.push_back(v);
        report["partial_sums"] = sums;
        report["lamperti_constant"] = verdict.lamperti.constant;
        report["subsampled"] = verdict.subsampled;
    } else if (mode == "pc") {
        std::vector<double> grid;
        for (const auto& pj : cfg.at("p_grid")) grid.push_back(pj.get<double>());
        macrodim::PcEstimate est;
        if (need<std::string>(cfg, "target") == "full_lattice") {
            // subsampled supports cannot carry full-shell capacities at small
            // p; the uniform-measure estimator can
            est = macrodim::p_c_estimate_full_shells(3, K, a, oracle, grid, seed);
        } else {
            const auto F = build_targets();
            est = macrodim::p_c_estimate(F, a, oracle, K, grid,
                                         need<std::uint64_t>(cfg, "subsample"));
        }
        report["p_c"] = est.p_c;
        report["bracket"] = Json::array({est.bracket_lo, est.bracket_hi});
        report["dimension_prediction"] = est.dimension_prediction;
        report["status"] = est.status;
        Json per_p = Json::array();
        for (std::size_t i = 0; i < est.grid.size(); ++i) {
            Json row;
            row["p"] = est.grid[i];
            row["trend"] = macrodim::trend_name(est.per_p[i].trend);
            per_p.push_back(row);
        }
        report["per_p"] = per_p;
    } else if (mode == "capacity") {
        if (!cfg.contains("F")) throw macrodim::ConfigError("mode=capacity needs an explicit F");
        std::vector<macrodim::LatticePoint> F;
        for (const auto& j : cfg.at("F")) F.push_back(macrodim::point_from_json(j));
        const auto cap = macrodim::cp_capacity(F, a, need<double>(cfg, "p"), oracle);
        report["capacity"] = cap.value;
        report["energy"] = cap.energy;
        report["iterations"] = cap.iterations;
        report["fw_gap"] = cap.fw_gap;
        report["convex_certified"] = cap.convex_certified;
        Json weights = Json::array();
        for (double w : cap.minimizer.weights) weights.push_back(w);
        report["minimizer_weights"] = weights;
    } else {
        throw macrodim::ConfigError("mode must be capacity | recurrence | pc | gamma | lamperti");
    }
    macrodim::write_file_atomic(dir / "capacity.json", report.dump(2) + "\n");
    std::cout << "capacity: mode " << mode << ", report in " << dir << "\n";
    return 0;
}

int cmd_verify(const CommonArgs& args) {
    Json cfg = macrodim::default_verify_config();
    if (!args.config_path.empty()) {
        const Json user = macrodim::load_config(args.config_path);
        for (auto it = user.begin(); it != user.end(); ++it) cfg[it.key()] = it.value();
    }
    if (args.seed_override) cfg["seed"] = *args.seed_override;
    const auto report = macrodim::run_verify(cfg, args.filter);
    const auto dir = out_dir(args, cfg);
    macrodim::write_file_atomic(dir / "verify_report.json", report.canonical.dump(2) + "\n");
    macrodim::write_file_atomic(dir / "verify_timings.json", report.timings.dump(2) + "\n");
    macrodim::write_file_atomic(dir / "verify_table.txt", report.table);
    std::cout << report.table;
    return report.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"macroscopic fractal percolation, walk potentials, and dimension experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    const auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* copt = sub->add_option("--config", args.config_path, "JSON config file");
        if (config_required) copt->required();
        sub->add_option("--seed", args.seed_override, "override the config seed");
        sub->add_option("--out", args.out_override, "output directory");
        return sub;
    };

    auto* percolate = add_common(app.add_subcommand("percolate", "raster + survivor export"), false);
    auto* dimperc = add_common(app.add_subcommand("dim-perc", "percolation dimension report"), false);
    auto* walkrange =
        add_common(app.add_subcommand("walk-range", "range dimension report"), false);
    auto* sandwich =
        add_common(app.add_subcommand("sandwich", "hitting-probability sandwich check"), false);
    auto* kolmogorov =
        add_common(app.add_subcommand("kolmogorov", "critical branching survival"), false);
    auto* green = add_common(app.add_subcommand("green", "green table export"), false);
    auto* capacity = add_common(app.add_subcommand("capacity", "capacity experiments"), false);
    auto* verify = add_common(app.add_subcommand("verify", "run the acceptance suite"), false);
    verify->add_option("--filter", args.filter, "run only criteria whose tag/name/id matches");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (percolate->parsed()) return cmd_percolate(args);
        if (dimperc->parsed()) return cmd_dim_perc(args);
        if (walkrange->parsed()) return cmd_walk_range(args);
        if (sandwich->parsed()) return cmd_sandwich(args);
        if (kolmogorov->parsed()) return cmd_kolmogorov(args);
        if (green->parsed()) return cmd_green(args);
        if (capacity->parsed()) return cmd_capacity(args);
        if (verify->parsed()) return cmd_verify(args);
    } catch (const macrodim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "varescomb/backtest.hpp"
#include "varescomb/core.hpp"
#include "varescomb/dist.hpp"
#include "varescomb/pool.hpp"
#include "varescomb/score.hpp"

namespace fs = std::filesystem;
using namespace varescomb;

namespace {

enum ExitCode { kOk = 0, kUnexpected = 1, kConfig = 2, kData = 3, kNumerical = 4 };

struct Global {
    std::string log_level = "info";
    unsigned threads = 0;
};

struct SynthArgs {
    std::string out_dir;
    int methods = 30;
    int days = 4000;
    double alpha = 0.025;
    DgpConfig dgp;
};

struct PoolArgs {
    std::string returns;
    std::string out;
    std::vector<std::string> methods;
    int est_window = 1800;
    int refit_every = 1;
    double alpha = 0.025;
    ColumnMapping columns;
};

struct CombineArgs {
    std::string returns;
    std::string pool;
    std::string out_dir;
    std::vector<std::string> combiners;
    std::size_t est_window = 1800;
    std::size_t eval_span = 0;
    std::size_t refit_every = 1;
    double alpha = 0.025;
    std::string benchmark = "HS-250";
    std::string grid_cache = ".varescomb-cache";
    bool strict_step_rule = false;
    std::uint64_t seed = 20240601;
    ColumnMapping columns;
};

struct EvaluateArgs {
    std::vector<std::string> runs;
    std::string out_dir;
    std::vector<std::string> scores{"QS", "AL", "NZ", "FZG", "AS"};
    double alpha = 0.025;
    int mcs_boot = 5000;
    std::size_t mcs_block = 21;
    double mcs_confidence = 0.75;
    int es_boot = 10000;
    std::uint64_t seed = 20240601;
};

struct DescribeArgs {
    std::string returns;
    ColumnMapping columns;
};

void add_column_options(CLI::App* cmd, ColumnMapping& columns) {
    cmd->add_option("--date-col", columns.date, "Date column name")->capture_default_str();
    cmd->add_option("--return-col", columns.ret, "Return column name")->capture_default_str();
    cmd->add_option("--high-col", columns.high, "High price column name")->capture_default_str();
    cmd->add_option("--low-col", columns.low, "Low price column name")->capture_default_str();
    cmd->add_option("--rv-col", columns.rv, "Realized variance column name")->capture_default_str();
}

void write_truth(const fs::path& path, const std::vector<Date>& dates, const std::vector<ForecastPair>& truth) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << "date,var,es\n";
    for (std::size_t t = 0; t < dates.size(); ++t) {
        out << format_date(dates[t]) << ',' << format_real(truth[t].var) << ',' << format_real(truth[t].es) << '\n';
    }
}

int run_synth(const SynthArgs& a) {
    const Alpha alpha(a.alpha);
    const auto s = synth_pool(a.dgp, a.methods, a.days, alpha);
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    save_returns(dir / "returns.csv", s.series);
    save_pool(dir / "pool.csv", s.pool);
    write_truth(dir / "truth.csv", s.series.dates(), s.truth);
    spdlog::info("wrote {} days and {} forecasters to {}", a.days, a.methods, dir.string());
    return kOk;
}

int run_pool(const PoolArgs& a, const Global& g) {
    const Alpha alpha(a.alpha);
    const auto series = load_returns(a.returns, a.columns);
    std::vector<MethodSpec> specs;
    if (a.methods.empty()) {
        specs = standard_method_set(a.est_window);
    } else {
        for (const auto& name : a.methods) {
            try {
                specs.push_back(MethodSpec::parse(name));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(fmt::format("method '{}': {}", name, e.what()));
            }
        }
    }
    for (const auto& s : specs) {
        if (s.needs_range() && !series.has_range()) {
            throw DataError(fmt::format("method '{}' needs a range column, which {} lacks", s.name(), a.returns));
        }
        if (s.needs_rv() && !series.has_rv()) {
            throw DataError(fmt::format("method '{}' needs an rv column, which {} lacks", s.name(), a.returns));
        }
    }
    PoolOptions opt;
    opt.est_window = a.est_window;
    opt.refit_every = a.refit_every;
    opt.threads = g.threads;
    const auto generated = generate_pool(specs, series, alpha, opt);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_pool(out, generated.pool);
    save_native(native_sidecar_path(out), generated);
    spdlog::info("wrote {} methods x {} days to {}", generated.pool.num_methods(), generated.pool.num_origins(),
                 out.string());
    return kOk;
}

int run_combine(const CombineArgs& a, const Global& g) {
    const auto series = load_returns(a.returns, a.columns);
    const auto pool = load_pool(a.pool);
    const auto returns = aligned_returns(pool, series);
    NativeMatrix native;
    if (const auto side = native_sidecar_path(a.pool); fs::exists(side)) native = load_native(side, pool);

    BacktestConfig cfg;
    cfg.est_window = a.est_window;
    if (pool.num_origins() <= a.est_window) {
        throw ConfigError(fmt::format("est_window {} leaves no evaluation days in a {}-day pool", a.est_window,
                                      pool.num_origins()));
    }
    cfg.eval_span = a.eval_span > 0 ? a.eval_span : pool.num_origins() - a.est_window;
    cfg.alpha = Alpha(a.alpha);
    cfg.benchmark_method = a.benchmark;
    cfg.refit_every = a.refit_every;
    cfg.threads = g.threads;
    cfg.strict_step_rule = a.strict_step_rule;
    cfg.seed = a.seed;
    cfg.validate(pool.num_origins());

    std::vector<std::string> ids = a.combiners;
    if (ids.empty()) ids.assign(kCombinerIds.begin(), kCombinerIds.end());
    std::shared_ptr<const CandidateGrid> grid;
    if (std::find(ids.begin(), ids.end(), "prob_average") != ids.end()) {
        grid = std::make_shared<const CandidateGrid>(cached_candidate_grid(a.grid_cache, cfg.alpha));
    }

    const auto report = run_backtest(cfg, pool, returns, native, ids, grid);
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    for (const auto& p : report.paths) {
        save_forecast_path(dir / (p.id + ".csv"), report.dates, report.returns, p);
        if (const auto f = p.failures(); f > 0) spdlog::warn("{}: {} failed days", p.id, f);
    }
    if (const auto b = pool.method_index(a.benchmark)) {
        ForecastPath bench;
        bench.id = a.benchmark;
        const std::size_t first = pool.num_origins() - cfg.eval_span;
        for (std::size_t t = first; t < pool.num_origins(); ++t) bench.pairs.emplace_back(pool.at(*b, t));
        save_forecast_path(dir / "benchmark.csv", report.dates, report.returns, bench);
    } else {
        spdlog::warn("benchmark '{}' is not in the pool; evaluate will need benchmark.csv", a.benchmark);
    }
    spdlog::info("wrote {} forecast paths over {} days to {}", report.paths.size(), cfg.eval_span, dir.string());
    return kOk;
}

// Paths in a run directory, dynamic selection and combiners in reporting order.
std::vector<std::pair<std::string, fs::path>> forecast_files(const fs::path& dir) {
    std::vector<std::pair<std::string, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".csv") continue;
        const auto stem = entry.path().stem().string();
        if (stem == "benchmark" || stem == "summary") continue;
        files.emplace_back(stem, entry.path());
    }
    auto order = [](const std::string& id) -> std::size_t {
        if (id == kDynamicSelectionId) return 0;
        const auto it = std::find(kCombinerIds.begin(), kCombinerIds.end(), id);
        return it == kCombinerIds.end() ? kCombinerIds.size() + 1 : 1 + static_cast<std::size_t>(it - kCombinerIds.begin());
    };
    std::sort(files.begin(), files.end(), [&](const auto& x, const auto& y) {
        const auto ox = order(x.first), oy = order(y.first);
        return ox != oy ? ox < oy : x.first < y.first;
    });
    return files;
}

int run_evaluate(const EvaluateArgs& a) {
    const Alpha alpha(a.alpha);
    std::vector<ScoreSpec> specs;
    for (const auto& s : a.scores) {
        try {
            specs.emplace_back(parse_score_variant(s), alpha);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    EvaluationOptions opt;
    opt.mcs.n_boot = a.mcs_boot;
    opt.mcs.block_len = a.mcs_block;
    opt.mcs.confidence = a.mcs_confidence;
    opt.mcs.seed = a.seed;
    opt.es_boot = a.es_boot;
    opt.seed = a.seed;

    std::vector<IndexEvaluation> indices;
    for (const auto& run : a.runs) {
        const fs::path dir(run);
        if (!fs::is_directory(dir)) throw DataError(fmt::format("run directory '{}' not found", run));
        const auto bench_file = dir / "benchmark.csv";
        if (!fs::exists(bench_file)) throw DataError(fmt::format("'{}' has no benchmark.csv", run));
        const auto bench = load_forecast_path(bench_file, "benchmark");
        std::vector<ForecastPath> paths;
        for (const auto& [id, file] : forecast_files(dir)) {
            auto loaded = load_forecast_path(file, id);
            if (loaded.dates != bench.dates) {
                throw DataError(fmt::format("'{}' covers different dates than the benchmark", file.string()));
            }
            paths.push_back(std::move(loaded.path));
        }
        if (paths.empty()) throw DataError(fmt::format("'{}' holds no forecast paths", run));
        auto name = dir.filename().string();
        if (name.empty()) name = dir.parent_path().filename().string();
        indices.push_back(evaluate_index(name, bench.returns, paths, bench.path, specs, alpha, opt));
    }
    const auto board = leaderboard(indices);
    const auto tables = format_tables(indices, board);
    const fs::path out(a.out_dir);
    fs::create_directories(out);
    save_summary_csv(out / "summary.csv", indices);
    std::ofstream(out / "tables.txt") << tables;
    std::cout << tables;
    return kOk;
}

int run_describe(const DescribeArgs& a) {
    const auto series = load_returns(a.returns, a.columns);
    const auto s = describe(series);
    std::cout << fmt::format("{:<10}{:>12}\n", "days", s.n) << fmt::format("{:<10}{:>12.4f}\n", "mean", s.mean)
              << fmt::format("{:<10}{:>12.4f}\n", "median", s.median) << fmt::format("{:<10}{:>12.3f}\n", "min", s.min)
              << fmt::format("{:<10}{:>12.3f}\n", "max", s.max) << fmt::format("{:<10}{:>12.4f}\n", "std", s.std)
              << fmt::format("{:<10}{:>12.4f}\n", "skewness", s.skewness)
              << fmt::format("{:<10}{:>12.3f}\n", "kurtosis", s.kurtosis);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Combine and evaluate VaR and ES forecasts"};
    app.set_config("--config", "", "INI or TOML file with option values");
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
        ->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads, 0 for all cores")->capture_default_str();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Write a simulated GARCH-t dataset, forecaster pool and true path");
    c_synth->add_option("--out-dir", synth.out_dir, "Output directory")->required();
    c_synth->add_option("--methods", synth.methods, "Number of distorted forecasters")->check(CLI::PositiveNumber);
    c_synth->add_option("--days", synth.days, "Number of days")->check(CLI::PositiveNumber);
    c_synth->add_option("--alpha", synth.alpha, "Tail probability")->capture_default_str();
    c_synth->add_option("--seed", synth.dgp.seed, "Random seed")->capture_default_str();
    c_synth->add_option("--garch-omega", synth.dgp.omega)->capture_default_str();
    c_synth->add_option("--garch-alpha", synth.dgp.alpha)->capture_default_str();
    c_synth->add_option("--garch-beta", synth.dgp.beta)->capture_default_str();
    c_synth->add_option("--nu", synth.dgp.nu, "Student-t degrees of freedom")->capture_default_str();
    c_synth->add_option("--var-bias", synth.dgp.var_bias)->capture_default_str();
    c_synth->add_option("--spacing-bias", synth.dgp.spacing_bias)->capture_default_str();
    c_synth->add_option("--noise-min", synth.dgp.noise_min)->capture_default_str();
    c_synth->add_option("--noise-max", synth.dgp.noise_max)->capture_default_str();

    PoolArgs pool;
    auto* c_pool = app.add_subcommand("pool", "Fit forecasters on rolling windows and write the forecast pool");
    c_pool->add_option("--returns", pool.returns, "Returns CSV")->required()->check(CLI::ExistingFile);
    c_pool->add_option("--out", pool.out, "Pool CSV to write")->required();
    c_pool->add_option("--method", pool.methods, "Method name, repeatable; default is the full set");
    c_pool->add_option("--est-window", pool.est_window, "Estimation window")->capture_default_str();
    c_pool->add_option("--refit-every", pool.refit_every, "Refit stride in days")->capture_default_str();
    c_pool->add_option("--alpha", pool.alpha, "Tail probability")->capture_default_str();
    add_column_options(c_pool, pool.columns);

    CombineArgs combine;
    auto* c_combine = app.add_subcommand("combine", "Run the rolling combiners and write one forecast path each");
    c_combine->add_option("--returns", combine.returns, "Returns CSV")->required()->check(CLI::ExistingFile);
    c_combine->add_option("--pool", combine.pool, "Pool CSV")->required()->check(CLI::ExistingFile);
    c_combine->add_option("--out-dir", combine.out_dir, "Output directory")->required();
    c_combine->add_option("--combiner", combine.combiners, "Combiner id, repeatable; default is all");
    c_combine->add_option("--est-window", combine.est_window, "Estimation window")->capture_default_str();
    c_combine->add_option("--eval-span", combine.eval_span, "Evaluated days, 0 for all after the first window");
    c_combine->add_option("--refit-every", combine.refit_every, "Refit stride in days")->capture_default_str();
    c_combine->add_option("--alpha", combine.alpha, "Tail probability")->capture_default_str();
    c_combine->add_option("--benchmark", combine.benchmark, "Benchmark method in the pool")->capture_default_str();
    c_combine->add_option("--grid-cache", combine.grid_cache, "Candidate grid cache directory")->capture_default_str();
    c_combine->add_flag("--strict-step-rule", combine.strict_step_rule, "Step-function VaR in probability averaging");
    c_combine->add_option("--seed", combine.seed, "Seed for multi-start optimizers")->capture_default_str();
    add_column_options(c_combine, combine.columns);

    EvaluateArgs evaluate;
    auto* c_eval = app.add_subcommand("evaluate", "Backtest saved forecast paths and write the report tables");
    c_eval->add_option("--run", evaluate.runs, "Directory written by combine, one per index")->required();
    c_eval->add_option("--out-dir", evaluate.out_dir, "Report directory")->required();
    c_eval->add_option("--score", evaluate.scores, "Score variants")->capture_default_str();
    c_eval->add_option("--alpha", evaluate.alpha, "Tail probability")->capture_default_str();
    c_eval->add_option("--mcs-boot", evaluate.mcs_boot, "Bootstrap draws for the confidence set")->capture_default_str();
    c_eval->add_option("--mcs-block", evaluate.mcs_block, "Bootstrap block length")->capture_default_str();
    c_eval->add_option("--mcs-confidence", evaluate.mcs_confidence, "Confidence level")->capture_default_str();
    c_eval->add_option("--es-boot", evaluate.es_boot, "Bootstrap draws for the ES test")->capture_default_str();
    c_eval->add_option("--seed", evaluate.seed, "Bootstrap seed")->capture_default_str();

    DescribeArgs desc;
    auto* c_desc = app.add_subcommand("describe", "Summary statistics of a return series");
    c_desc->add_option("--returns", desc.returns, "Returns CSV")->required()->check(CLI::ExistingFile);
    add_column_options(c_desc, desc.columns);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    spdlog::set_level(spdlog::level::from_str(g.log_level));

    try {
        if (c_synth->parsed()) return run_synth(synth);
        if (c_pool->parsed()) return run_pool(pool, g);
        if (c_combine->parsed()) return run_combine(combine, g);
        if (c_eval->parsed()) return run_evaluate(evaluate);
        if (c_desc->parsed()) return run_describe(desc);
    } catch (const ConfigError& e) {
        spdlog::error("configuration: {}", e.what());
        return kConfig;
    } catch (const DataError& e) {
        spdlog::error("data: {}", e.what());
        return kData;
    } catch (const NumericalError& e) {
        spdlog::error("numerical: {}", e.what());
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        spdlog::error("configuration: {}", e.what());
        return kConfig;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kUnexpected;
    }
    return kUnexpected;
}

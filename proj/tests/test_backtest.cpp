#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "varescomb/backtest.hpp"
#include "varescomb/combine_central.hpp"
#include "varescomb/pool.hpp"

using namespace varescomb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Alpha kAlpha(0.025);

std::vector<bool> bernoulli_hits(std::mt19937_64& rng, std::size_t n, double p) {
    std::bernoulli_distribution b(p);
    std::vector<bool> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = b(rng);
    return h;
}

std::vector<double> random_var_path(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-3.0, -1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// Method m forecasts truth scaled by (var_scale, spacing_scale) on each day.
ForecastPool scaled_pool(const SynthResult& s, const std::vector<std::vector<std::pair<double, double>>>& daily) {
    std::vector<std::string> ids;
    for (std::size_t m = 0; m < daily.front().size(); ++m) ids.push_back("M" + std::to_string(m));
    std::vector<ForecastPair> entries;
    for (std::size_t t = 0; t < s.truth.size(); ++t) {
        for (const auto& [sv, sd] : daily[t]) {
            const double var = s.truth[t].var * sv;
            entries.push_back({var, var - (s.truth[t].var - s.truth[t].es) * sd});
        }
    }
    return ForecastPool(ids, s.series.dates(), entries);
}

SynthResult small_synth(int methods, int days, std::uint64_t seed) {
    DgpConfig cfg;
    cfg.seed = seed;
    return synth_pool(cfg, methods, days, kAlpha);
}

}  // namespace

TEST_CASE("uc test matches the log-likelihood ratio by hand", "[backtest]") {
    std::vector<bool> hits(1000, false);
    for (int i = 0; i < 25; ++i) hits[i * 40] = true;
    const auto exact = uc_test(hits, kAlpha);
    CHECK(exact.statistic == 0.0);
    CHECK(exact.p_value == 1.0);
    CHECK_FALSE(exact.reject_at_5pct);

    for (int i = 0; i < 25; ++i) hits[i * 40 + 20] = true;
    const double a = 0.025, p = 0.05;
    const double lr = -2.0 * ((50 * std::log(a) + 950 * std::log(1 - a)) - (50 * std::log(p) + 950 * std::log(1 - p)));
    const auto r = uc_test(hits, kAlpha);
    CHECK_THAT(r.statistic, WithinRel(lr, 1e-12));
    const double pv = boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), lr));
    CHECK_THAT(r.p_value, WithinRel(pv, 1e-10));
    CHECK(r.p_value < 0.01);
    CHECK(r.reject_at_5pct);
}

TEST_CASE("uc and cc handle degenerate hit sequences", "[backtest]") {
    const std::vector<bool> none(500, false);
    const auto uc = uc_test(none, kAlpha);
    CHECK_THAT(uc.statistic, WithinRel(-2.0 * 500 * std::log(1 - 0.025), 1e-12));
    const auto cc = cc_test(none, kAlpha);
    CHECK_THAT(cc.statistic, WithinRel(uc.statistic, 1e-12));

    const std::vector<bool> all(500, true);
    CHECK(std::isfinite(uc_test(all, kAlpha).statistic));
    CHECK(cc_test(all, kAlpha).reject_at_5pct);

    CHECK_THROWS_AS(uc_test(std::vector<bool>(49, false), kAlpha), std::invalid_argument);
}

TEST_CASE("cc rejects a single run of hits", "[backtest]") {
    std::vector<bool> hits(1000, false);
    for (int i = 400; i < 425; ++i) hits[i] = true;  // right rate, fully clustered
    CHECK(uc_test(hits, kAlpha).statistic == 0.0);
    const auto cc = cc_test(hits, kAlpha);
    CHECK(cc.reject_at_5pct);
    CHECK(cc.p_value < 1e-6);
}

TEST_CASE("calibration tests hold their size under the null", "[backtest][slow]") {
    std::mt19937_64 rng(11);
    int uc = 0, cc = 0, dq = 0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        const auto hits = bernoulli_hits(rng, 1800, 0.025);
        const auto var = random_var_path(rng, 1800);
        uc += uc_test(hits, kAlpha).reject_at_5pct;
        cc += cc_test(hits, kAlpha).reject_at_5pct;
        dq += dq_test(hits, var, kAlpha).reject_at_5pct;
    }
    INFO("uc " << uc << " cc " << cc << " dq " << dq);
    for (int c : {uc, cc, dq}) {
        CHECK(c >= 30);
        CHECK(c <= 70);
    }
}

TEST_CASE("dq test has power against hits that follow lagged hits", "[backtest]") {
    std::mt19937_64 rng(5);
    int rejections = 0;
    for (int r = 0; r < 200; ++r) {
        // A hit is followed by another with probability 0.5.
        std::bernoulli_distribution base(0.02), follow(0.5);
        std::vector<bool> hits(1000);
        for (std::size_t t = 0; t < hits.size(); ++t) hits[t] = (t > 0 && hits[t - 1]) ? follow(rng) : base(rng);
        rejections += dq_test(hits, random_var_path(rng, hits.size()), kAlpha).reject_at_5pct;
    }
    CHECK(rejections > 180);
}

TEST_CASE("dq test on degenerate inputs", "[backtest]") {
    std::mt19937_64 rng(3);
    const auto var = random_var_path(rng, 400);
    const std::vector<bool> none(400, false);
    const auto r = dq_test(none, var, kAlpha);
    // Only the constant explains y = -alpha: statistic n alpha / (1 - alpha).
    CHECK_THAT(r.statistic, WithinRel(396 * 0.025 / 0.975, 1e-9));

    const std::vector<double> flat(400, -2.0);
    CHECK(std::isfinite(dq_test(bernoulli_hits(rng, 400, 0.025), flat, kAlpha).statistic));
    CHECK_THROWS_AS(dq_test(none, std::vector<double>(99, -1.0), kAlpha), std::invalid_argument);
}

TEST_CASE("dq statistic matches a normal-equation oracle", "[backtest]") {
    std::mt19937_64 rng(8);
    const std::size_t n = 300;
    auto hits = bernoulli_hits(rng, n, 0.05);
    const auto var = random_var_path(rng, n);
    // Plain least squares with 6 regressors by Gaussian elimination.
    const int K = 6;
    std::vector<std::vector<double>> xtx(K, std::vector<double>(K + 1, 0.0));
    std::vector<std::array<double, K>> rows;
    std::vector<double> y;
    for (std::size_t t = 4; t < n; ++t) {
        std::array<double, K> x{1.0, hits[t - 1] - 0.025, hits[t - 2] - 0.025, hits[t - 3] - 0.025,
                                hits[t - 4] - 0.025, var[t]};
        rows.push_back(x);
        y.push_back(hits[t] - 0.025);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int a = 0; a < K; ++a) {
            for (int b = 0; b < K; ++b) xtx[a][b] += rows[i][a] * rows[i][b];
            xtx[a][K] += rows[i][a] * y[i];
        }
    }
    for (int c = 0; c < K; ++c) {
        for (int r = c + 1; r < K; ++r) {
            const double f = xtx[r][c] / xtx[c][c];
            for (int k = c; k <= K; ++k) xtx[r][k] -= f * xtx[c][k];
        }
    }
    std::array<double, K> beta{};
    for (int r = K - 1; r >= 0; --r) {
        double s = xtx[r][K];
        for (int k = r + 1; k < K; ++k) s -= xtx[r][k] * beta[k];
        beta[r] = s / xtx[r][r];
    }
    double q = 0.0;
    for (const auto& x : rows) {
        double fit = 0.0;
        for (int a = 0; a < K; ++a) fit += x[a] * beta[a];
        q += fit * fit;
    }
    const double stat = q / (0.025 * 0.975);
    const auto r = dq_test(hits, var, kAlpha);
    CHECK_THAT(r.statistic, WithinRel(stat, 1e-8));
    CHECK_THAT(r.p_value, WithinRel(boost::math::cdf(boost::math::complement(boost::math::chi_squared(6.0), stat)), 1e-8));
}

TEST_CASE("es bootstrap test under the null", "[backtest]") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> r(1800), var(1800, -1.96), es(1800);
    for (auto& x : r) x = z(rng);
    double sum = 0.0;
    int count = 0;
    for (double x : r) {
        if (x <= -1.96) {
            sum += x;
            ++count;
        }
    }
    std::fill(es.begin(), es.end(), sum / count);
    const auto null = es_bootstrap_test(r, var, es, 2000, 4);
    REQUIRE(null.result);
    CHECK(null.result->p_value > 0.95);
    CHECK(null.exceedances == static_cast<std::size_t>(count));

    const auto again = es_bootstrap_test(r, var, es, 2000, 4);
    CHECK(again.result->p_value == null.result->p_value);
    CHECK(again.result->statistic == null.result->statistic);

    const std::vector<double> quiet(1800, 0.0);
    const auto few = es_bootstrap_test(quiet, var, es, 100, 1);
    CHECK_FALSE(few.result);
    CHECK(few.exceedances == 0);
}

TEST_CASE("es bootstrap test detects 20% shallow es on garch data", "[backtest][slow]") {
    int rejections = 0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
        const auto s = small_synth(1, 1800, 100 + rep);
        const auto& ret = s.series.returns();
        std::vector<double> var(ret.size()), es(ret.size());
        for (std::size_t t = 0; t < ret.size(); ++t) {
            var[t] = s.truth[t].var;
            es[t] = 0.8 * s.truth[t].es;
        }
        const auto res = es_bootstrap_test(ret, var, es, 2000, rep);
        rejections += res.result && res.result->reject_at_5pct;
    }
    INFO(rejections << " of " << reps);
    CHECK(rejections > 0.8 * reps);
}

TEST_CASE("skill scores follow the geometric mean of ratios", "[backtest]") {
    const std::vector<double> bench{2.0, 3.0};
    CHECK_THAT(skill_score(std::vector<double>{1.8, 2.7}, bench), WithinAbs(10.0, 1e-12));
    CHECK_THAT(skill_score(std::vector<double>{1.6, 3.0}, bench), WithinAbs(100.0 * (1.0 - std::sqrt(0.8)), 1e-12));
    CHECK_THAT(skill_score(std::vector<double>{1.6, 3.0}, bench), WithinAbs(10.557, 5e-4));
    CHECK(skill_score(bench, bench) == 0.0);
    CHECK_THROWS_AS(skill_score(std::vector<double>{0.0, 1.0}, bench), NumericalError);
    CHECK_THROWS_AS(skill_score(std::vector<double>{1.0}, bench), std::invalid_argument);
}

TEST_CASE("average ranks use midranks", "[backtest]") {
    const auto r = average_ranks({{1.0, 2.0}, {0.5, 0.7}});
    CHECK(r == std::vector<double>{1.0, 2.0});
    const auto tie = average_ranks({{1.0, 1.0, 0.5}});
    CHECK(tie == std::vector<double>{2.5, 2.5, 1.0});

    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> level(0, 5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<double>> table(4, std::vector<double>(7));
        for (auto& row : table) {
            for (auto& v : row) v = level(rng);
        }
        std::vector<double> oracle(7, 0.0);
        for (const auto& row : table) {
            for (std::size_t m = 0; m < 7; ++m) {
                const double less = std::count_if(row.begin(), row.end(), [&](double v) { return v < row[m]; });
                const double equal = std::count(row.begin(), row.end(), row[m]);
                oracle[m] += less + (equal + 1.0) / 2.0;
            }
        }
        const auto got = average_ranks(table);
        for (std::size_t m = 0; m < 7; ++m) CHECK_THAT(got[m], WithinAbs(oracle[m] / 4.0, 1e-12));
    }
}

TEST_CASE("mcs keeps identical methods", "[backtest]") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> z(1.0, 0.3);
    std::vector<double> l(500);
    for (auto& v : l) v = z(rng);
    const auto res = mcs({l, l, l}, {0.75, 500, 21, 1});
    CHECK(res.surviving.size() == 3);
    CHECK(res.eliminated.empty());
}

TEST_CASE("mcs eliminates a dominated method first", "[backtest]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<std::vector<double>> losses(5, std::vector<double>(600));
        for (auto& row : losses) {
            for (auto& v : row) v = 10.0 + z(rng);
        }
        for (auto& v : losses[2]) v += 5.0;
        const auto res = mcs(losses, {0.75, 1000, 21, seed});
        REQUIRE_FALSE(res.eliminated.empty());
        CHECK(res.eliminated.front().method == 2);
        CHECK(std::find(res.surviving.begin(), res.surviving.end(), 2) == res.surviving.end());
        for (std::size_t i = 1; i < res.eliminated.size(); ++i) {
            CHECK(res.eliminated[i].p_value >= res.eliminated[i - 1].p_value);
        }
        CHECK(res.surviving.size() + res.eliminated.size() == 5);
    }
}

TEST_CASE("mcs survivor sets nest across confidence levels", "[backtest]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed + 50);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<std::vector<double>> losses(6, std::vector<double>(400));
        for (std::size_t m = 0; m < losses.size(); ++m) {
            for (auto& v : losses[m]) v = 1.0 + 0.04 * static_cast<double>(m) + 0.5 * z(rng);
        }
        auto lo = mcs(losses, {0.75, 1000, 21, seed});
        auto hi = mcs(losses, {0.90, 1000, 21, seed});
        std::sort(lo.surviving.begin(), lo.surviving.end());
        std::sort(hi.surviving.begin(), hi.surviving.end());
        CHECK(std::includes(hi.surviving.begin(), hi.surviving.end(), lo.surviving.begin(), lo.surviving.end()));
    }
}

TEST_CASE("dynamic selection picks the trailing-window argmin", "[backtest]") {
    const int days = 700;
    const auto s = small_synth(1, days, 9);
    // M0 is exact for the first half and badly scaled after; M1 the reverse.
    std::vector<std::vector<std::pair<double, double>>> daily(days);
    for (int t = 0; t < days; ++t) {
        daily[t] = t < 400 ? std::vector<std::pair<double, double>>{{1.0, 1.0}, {1.6, 1.6}}
                           : std::vector<std::pair<double, double>>{{1.6, 1.6}, {1.0, 1.0}};
    }
    const auto pool = scaled_pool(s, daily);
    BacktestConfig cfg;
    cfg.est_window = 100;
    cfg.eval_span = 500;
    const ScoreSpec al(ScoreVariant::AL, kAlpha);
    const auto sel = dynamic_selection(cfg, pool, s.series.returns(), al);
    REQUIRE(sel.chosen.size() == 500);

    const auto& r = s.series.returns();
    for (std::size_t d = 0; d < sel.chosen.size(); ++d) {
        const std::size_t t = 200 + d;
        std::array<double, 2> sums{0.0, 0.0};
        for (std::size_t u = t - 100; u < t; ++u) {
            for (std::size_t m = 0; m < 2; ++m) sums[m] += joint_score(al, pool.at(m, u).var, pool.at(m, u).es, r[u]);
        }
        CHECK(sums[sel.chosen[d]] <= sums[1 - sel.chosen[d]]);
        CHECK(*sel.path.pairs[d] == pool.at(sel.chosen[d], t));
    }
    // Switch happens after the change point, within one window.
    CHECK(sel.chosen.front() == 0);
    CHECK(sel.chosen.back() == 1);
    const auto first_one = std::find(sel.chosen.begin(), sel.chosen.end(), 1u) - sel.chosen.begin();
    CHECK(200 + first_one > 400);
    CHECK(200 + first_one <= 500);

    std::vector<std::vector<std::pair<double, double>>> dom(days, {{1.0, 1.0}, {2.5, 2.5}, {0.4, 0.4}});
    const auto dpool = scaled_pool(s, dom);
    const auto dsel = dynamic_selection(cfg, dpool, r, al);
    CHECK(std::all_of(dsel.chosen.begin(), dsel.chosen.end(), [](std::size_t m) { return m == 0; }));
}

TEST_CASE("run_backtest is causal, deterministic and complete", "[backtest]") {
    const int days = 420;
    const auto s = small_synth(6, days, 13);
    BacktestConfig cfg;
    cfg.est_window = 300;
    cfg.eval_span = 120;
    cfg.refit_every = 40;
    cfg.threads = 2;
    const std::vector<std::string> ids{"simple_average", "median", "trim_symmetric", "relative_score",
                                       "min_score",      "stc",    "depth_halfspace", "grand_average"};
    const auto report = run_backtest(cfg, s.pool, s.series.returns(), {}, ids);
    REQUIRE(report.paths.size() == ids.size() + 1);
    CHECK(report.paths.front().id == kDynamicSelectionId);
    CHECK(report.dates.size() == 120);
    for (const auto& p : report.paths) {
        CHECK(p.pairs.size() == 120);
        CHECK(p.failures() == 0);
    }
    for (std::size_t d = 0; d < 120; ++d) {
        CHECK(*report.path("simple_average").pairs[d] == simple_average(s.pool.column(300 + d)));
    }

    const auto again = run_backtest(cfg, s.pool, s.series.returns(), {}, ids);
    for (std::size_t k = 0; k < report.paths.size(); ++k) {
        CHECK(report.paths[k].pairs == again.paths[k].pairs);
        CHECK(report.paths[k].parameters == again.paths[k].parameters);
    }

    // Returns from column 350 on are scrambled; forecasts for columns up to 350 must not move.
    std::vector<double> bumped = s.series.returns();
    for (std::size_t t = 350; t < bumped.size(); ++t) bumped[t] *= -3.0;
    const auto canary = run_backtest(cfg, s.pool, bumped, {}, ids);
    for (std::size_t k = 0; k < report.paths.size(); ++k) {
        for (std::size_t d = 0; d <= 50; ++d) CHECK(canary.paths[k].pairs[d] == report.paths[k].pairs[d]);
    }
}

TEST_CASE("run_backtest with a single evaluated day", "[backtest]") {
    const auto s = small_synth(4, 150, 3);
    BacktestConfig cfg;
    cfg.est_window = 100;
    cfg.eval_span = 1;
    const std::vector<std::string> ids{"min_score"};
    const auto report = run_backtest(cfg, s.pool, s.series.returns(), {}, ids);
    REQUIRE(report.paths.size() == 2);
    CHECK(report.paths[1].pairs.size() == 1);
    CHECK(report.paths[1].pairs[0].has_value());
    CHECK(report.dates.front() == s.pool.origins().back());
}

TEST_CASE("run_backtest records failures instead of filling them", "[backtest]") {
    const auto s = small_synth(4, 200, 4);
    BacktestConfig cfg;
    cfg.est_window = 50;
    cfg.eval_span = 20;
    const std::vector<std::string> ids{"min_score", "simple_average", "grand_average"};
    const auto report = run_backtest(cfg, s.pool, s.series.returns(), {}, ids);
    const auto& ms = report.path("min_score");
    CHECK(ms.failures() == 20);
    CHECK_FALSE(ms.errors[0].empty());
    CHECK(report.path("simple_average").failures() == 0);
    CHECK(*report.path("grand_average").pairs[3] == *report.path("simple_average").pairs[3]);

    BacktestConfig bad = cfg;
    bad.eval_span = 190;
    CHECK_THROWS_AS(run_backtest(bad, s.pool, s.series.returns(), {}, ids), ConfigError);
    const std::vector<std::string> unknown{"nope"};
    CHECK_THROWS_AS(run_backtest(cfg, s.pool, s.series.returns(), {}, unknown), ConfigError);
}

TEST_CASE("evaluation and files round trip", "[backtest]") {
    const auto s = small_synth(5, 800, 17);
    BacktestConfig cfg;
    cfg.est_window = 300;
    cfg.eval_span = 500;
    cfg.refit_every = 100;
    const std::vector<std::string> ids{"simple_average", "median", "relative_score"};
    const auto report = run_backtest(cfg, s.pool, s.series.returns(), {}, ids);

    ForecastPath bench;
    bench.id = "benchmark";
    for (std::size_t t = 300; t < 800; ++t) bench.pairs.emplace_back(s.pool.at(0, t));
    bench.errors.assign(500, "");
    bench.parameters.assign(500, "");

    const std::vector<ScoreSpec> specs{ScoreSpec(ScoreVariant::AL, kAlpha), ScoreSpec(ScoreVariant::NZ, kAlpha)};
    EvaluationOptions opt;
    opt.es_boot = 500;
    opt.mcs.n_boot = 300;
    auto paths = report.paths;
    paths.push_back(bench);
    const auto ev = evaluate_index("synthetic", report.returns, paths, bench, specs, kAlpha, opt);
    CHECK(ev.common_days == 500);
    REQUIRE(ev.methods.size() == 5);
    for (std::size_t s2 = 0; s2 < specs.size(); ++s2) CHECK(ev.methods.back().avg_scores[s2] == ev.benchmark_avg[s2]);
    for (const auto& m : ev.methods) {
        CHECK(m.uc.p_value >= 0.0);
        CHECK(m.uc.p_value <= 1.0);
        CHECK(m.uc.reject_at_5pct == (m.uc.p_value < 0.05));
        CHECK(m.in_mcs.size() == 2);
    }
    const auto board = leaderboard({ev, ev});
    CHECK(board.skill.back()[0] == 0.0);
    CHECK(board.skill.back()[1] == 0.0);
    const auto text = format_tables({ev, ev}, board);
    CHECK(text.find("Simple average") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "varescomb_backtest_test";
    std::filesystem::create_directories(dir);
    const auto& sa = report.path("simple_average");
    save_forecast_path(dir / "sa.csv", report.dates, report.returns, sa);
    const auto loaded = load_forecast_path(dir / "sa.csv", "simple_average");
    CHECK(loaded.dates == report.dates);
    for (std::size_t d = 0; d < 500; ++d) {
        CHECK(loaded.path.pairs[d]->var == sa.pairs[d]->var);
        CHECK(loaded.path.pairs[d]->es == sa.pairs[d]->es);
        CHECK(loaded.returns[d] == report.returns[d]);
    }
    save_summary_csv(dir / "summary.csv", {ev});
    CHECK(std::filesystem::file_size(dir / "summary.csv") > 0);
    std::filesystem::remove_all(dir);
}

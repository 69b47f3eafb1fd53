#include "varescomb/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "varescomb/combine_meta.hpp"
#include "varescomb/csv.hpp"
#include "varescomb/parallel.hpp"

namespace varescomb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double score_or_inf(const ScoreSpec& spec, double var, double es, double r) {
    try {
        const double s = joint_score(spec, var, es, r);
        return std::isfinite(s) ? s : kInf;
    } catch (const std::domain_error&) {
        return kInf;
    }
}

double chi2_upper(double statistic, double df) {
    if (!(statistic > 0.0)) return 1.0;
    if (!std::isfinite(statistic)) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), statistic));
}

TestResult make_result(double statistic, double p) {
    p = std::clamp(p, 0.0, 1.0);
    return {statistic, p, p < 0.05};
}

// x ln(p) with 0 ln 0 = 0.
double xlogy(double x, double p) { return x == 0.0 ? 0.0 : x * std::log(p); }

std::string clean_field(std::string s) {
    for (auto& c : s) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------- driver

void BacktestConfig::validate(std::size_t pool_columns) const {
    if (est_window == 0) throw ConfigError("est_window must be positive");
    if (eval_span == 0) throw ConfigError("eval_span must be positive");
    if (refit_every == 0) throw ConfigError("refit stride must be positive");
    if (est_window + eval_span > pool_columns) {
        throw ConfigError(fmt::format("est_window {} + eval_span {} exceeds the {} pool columns", est_window, eval_span,
                                      pool_columns));
    }
}

std::size_t ForecastPath::failures() const {
    return static_cast<std::size_t>(std::count(pairs.begin(), pairs.end(), std::nullopt));
}

const ForecastPath& BacktestReport::path(std::string_view id) const {
    for (const auto& p : paths) {
        if (p.id == id) return p;
    }
    throw std::out_of_range(fmt::format("no forecast path '{}'", id));
}

SelectionPath dynamic_selection(const BacktestConfig& cfg, const ForecastPool& pool, std::span<const double> returns,
                                const ScoreSpec& spec) {
    cfg.validate(pool.num_origins());
    if (returns.size() != pool.num_origins()) throw std::invalid_argument("returns not aligned with the pool");
    const std::size_t N = pool.num_origins();
    const std::size_t M = pool.num_methods();
    const std::size_t first = N - cfg.eval_span;
    const std::size_t W = cfg.est_window;

    std::vector<double> scores((N - (first - W)) * M);
    const std::size_t base = first - W;
    for (std::size_t t = base; t < N; ++t) {
        const auto col = pool.column(t);
        for (std::size_t m = 0; m < M; ++m) scores[(t - base) * M + m] = score_or_inf(spec, col[m].var, col[m].es, returns[t]);
    }

    SelectionPath out;
    out.path.id = std::string(kDynamicSelectionId);
    for (std::size_t t = first; t < N; ++t) {
        std::size_t best = 0;
        double best_sum = kInf;
        for (std::size_t m = 0; m < M; ++m) {
            double s = 0.0;
            for (std::size_t u = t - W; u < t; ++u) s += scores[(u - base) * M + m];
            if (s < best_sum) {
                best_sum = s;
                best = m;
            }
        }
        out.chosen.push_back(best);
        out.path.pairs.emplace_back(pool.at(best, t));
        out.path.errors.emplace_back();
        out.path.parameters.push_back(pool.method_ids()[best]);
    }
    return out;
}

BacktestReport run_backtest(const BacktestConfig& cfg, const ForecastPool& pool, std::span<const double> returns,
                            const NativeMatrix& native, std::span<const std::string> combiners,
                            std::shared_ptr<const CandidateGrid> grid) {
    cfg.validate(pool.num_origins());
    if (returns.size() != pool.num_origins()) throw std::invalid_argument("returns not aligned with the pool");
    if (!native.empty() && native.size() != pool.num_origins()) {
        throw std::invalid_argument("native CDF matrix not aligned with the pool");
    }
    bool want_grand = false;
    std::vector<std::string> ids;
    for (const auto& id : combiners) {
        if (std::find(kCombinerIds.begin(), kCombinerIds.end(), id) == kCombinerIds.end()) {
            throw ConfigError(fmt::format("unknown combiner '{}'", id));
        }
        if (id == "grand_average") want_grand = true;
        else ids.push_back(id);
    }
    if (!grid && std::find(ids.begin(), ids.end(), "prob_average") != ids.end()) {
        grid = std::make_shared<const CandidateGrid>(build_candidate_grid(cfg.alpha));
    }

    CombinerContext ctx;
    ctx.fit_spec = ScoreSpec(ScoreVariant::AL, cfg.alpha);
    ctx.grid = grid;
    ctx.strict_step_rule = cfg.strict_step_rule;
    ctx.seed = cfg.seed;

    const std::size_t N = pool.num_origins();
    const std::size_t first = N - cfg.eval_span;
    const std::size_t W = cfg.est_window;
    const std::size_t blocks = (cfg.eval_span + cfg.refit_every - 1) / cfg.refit_every;

    BacktestReport report;
    for (std::size_t t = first; t < N; ++t) {
        report.dates.push_back(pool.origins()[t]);
        report.returns.push_back(returns[t]);
    }
    report.paths.push_back(dynamic_selection(cfg, pool, returns, ctx.fit_spec).path);

    std::vector<ForecastPath> paths(ids.size());
    for (std::size_t c = 0; c < ids.size(); ++c) {
        paths[c].id = ids[c];
        paths[c].pairs.assign(cfg.eval_span, std::nullopt);
        paths[c].errors.assign(cfg.eval_span, std::string());
        paths[c].parameters.assign(cfg.eval_span, std::string());
    }

    const std::span<const std::optional<ParametricDist>> no_native;
    parallel_for(ids.size() * blocks, cfg.threads, [&](std::size_t task) {
        const std::size_t c = task / blocks;
        const std::size_t b = task % blocks;
        const std::size_t start = first + b * cfg.refit_every;
        const std::size_t stop = std::min(start + cfg.refit_every, N);
        auto& path = paths[c];

        auto combiner = make_combiner(ids[c], ctx);
        std::string fit_error;
        try {
            combiner->fit(pool.slice(start - W, W), returns.subspan(start - W, W));
        } catch (const std::exception& e) {
            fit_error = fmt::format("fit failed: {}", e.what());
        }
        const std::string params = fit_error.empty() ? combiner->parameters() : std::string();
        for (std::size_t t = start; t < stop; ++t) {
            const std::size_t d = t - first;
            if (!fit_error.empty()) {
                path.errors[d] = fit_error;
                continue;
            }
            path.parameters[d] = params;
            try {
                const auto nat = native.empty() ? no_native : std::span<const std::optional<ParametricDist>>(native[t]);
                const auto pair = combiner->forecast(pool.column(t), nat);
                if (!pair.valid()) {
                    path.errors[d] = fmt::format("invalid forecast ({}, {})", pair.var, pair.es);
                } else {
                    path.pairs[d] = pair;
                }
            } catch (const std::exception& e) {
                path.errors[d] = e.what();
            }
        }
    });

    if (want_grand) {
        ForecastPath grand;
        grand.id = "grand_average";
        for (std::size_t d = 0; d < cfg.eval_span; ++d) {
            std::vector<std::optional<ForecastPair>> others;
            for (const auto& p : paths) others.push_back(p.pairs[d]);
            try {
                const auto g = grand_average(others);
                grand.pairs.emplace_back(g.pair);
                grand.errors.emplace_back();
                grand.parameters.push_back(fmt::format("used={}", g.used));
            } catch (const std::exception& e) {
                grand.pairs.emplace_back(std::nullopt);
                grand.errors.emplace_back(e.what());
                grand.parameters.emplace_back();
            }
        }
        paths.push_back(std::move(grand));
    }

    for (auto& p : paths) {
        if (const auto f = p.failures(); f > 0) spdlog::warn("{}: {} of {} days failed", p.id, f, cfg.eval_span);
        report.paths.push_back(std::move(p));
    }
    return report;
}

// ---------------------------------------------------------------- calibration tests

std::vector<bool> hit_sequence(std::span<const double> returns, std::span<const double> var) {
    if (returns.size() != var.size()) throw std::invalid_argument("returns and VaR path differ in length");
    std::vector<bool> hits(returns.size());
    for (std::size_t t = 0; t < returns.size(); ++t) hits[t] = returns[t] <= var[t];
    return hits;
}

TestResult uc_test(const std::vector<bool>& hits, Alpha alpha) {
    if (hits.size() < 50) throw std::invalid_argument("unconditional coverage test needs 50 days");
    const double n = static_cast<double>(hits.size());
    const double x = static_cast<double>(std::count(hits.begin(), hits.end(), true));
    const double a = alpha.value();
    const double p = x / n;
    const double l0 = xlogy(x, a) + xlogy(n - x, 1.0 - a);
    const double l1 = xlogy(x, p) + xlogy(n - x, 1.0 - p);
    const double lr = std::max(0.0, -2.0 * (l0 - l1));
    return make_result(lr, chi2_upper(lr, 1.0));
}

TestResult cc_test(const std::vector<bool>& hits, Alpha alpha) {
    const auto uc = uc_test(hits, alpha);
    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (std::size_t t = 1; t < hits.size(); ++t) {
        if (!hits[t - 1]) (hits[t] ? n01 : n00) += 1.0;
        else (hits[t] ? n11 : n10) += 1.0;
    }
    const double pi01 = n00 + n01 > 0 ? n01 / (n00 + n01) : 0.0;
    const double pi11 = n10 + n11 > 0 ? n11 / (n10 + n11) : 0.0;
    const double pi = (n01 + n11) / (n00 + n01 + n10 + n11);
    const double l0 = xlogy(n00 + n10, 1.0 - pi) + xlogy(n01 + n11, pi);
    const double l1 = xlogy(n00, 1.0 - pi01) + xlogy(n01, pi01) + xlogy(n10, 1.0 - pi11) + xlogy(n11, pi11);
    const double lr = uc.statistic + std::max(0.0, -2.0 * (l0 - l1));
    return make_result(lr, chi2_upper(lr, 2.0));
}

TestResult dq_test(const std::vector<bool>& hits, std::span<const double> var, Alpha alpha, int lags) {
    if (hits.size() != var.size()) throw std::invalid_argument("hits and VaR path differ in length");
    if (hits.size() < 100) throw std::invalid_argument("dynamic quantile test needs 100 days");
    if (lags < 0) throw std::invalid_argument("lags must be nonnegative");
    const double a = alpha.value();
    const auto L = static_cast<std::size_t>(lags);
    const std::size_t n = hits.size() - L;
    const std::size_t k_all = L + 2;

    Eigen::MatrixXd X(n, k_all);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = i + L;
        y(i) = (hits[t] ? 1.0 : 0.0) - a;
        X(i, 0) = 1.0;
        for (std::size_t k = 1; k <= L; ++k) X(i, k) = (hits[t - k] ? 1.0 : 0.0) - a;
        X(i, L + 1) = var[t];
    }
    std::vector<Eigen::Index> keep{0};
    for (Eigen::Index c = 1; c < X.cols(); ++c) {
        if (X.col(c).maxCoeff() > X.col(c).minCoeff()) keep.push_back(c);
    }
    Eigen::MatrixXd Xk(n, keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) Xk.col(j) = X.col(keep[j]);

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xk);
    if (qr.rank() < Xk.cols()) throw NumericalError("dynamic quantile regressors are collinear");
    const Eigen::VectorXd beta = qr.solve(y);
    const double stat = (Xk * beta).squaredNorm() / (a * (1.0 - a));
    return make_result(stat, chi2_upper(stat, static_cast<double>(Xk.cols())));
}

EsTestResult es_bootstrap_test(std::span<const double> returns, std::span<const double> var,
                               std::span<const double> es, int n_boot, std::uint64_t seed) {
    if (returns.size() != var.size() || returns.size() != es.size()) {
        throw std::invalid_argument("returns, VaR and ES paths differ in length");
    }
    if (n_boot < 1) throw std::invalid_argument("n_boot must be positive");
    std::vector<double> u;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        if (returns[t] <= var[t]) u.push_back((returns[t] - es[t]) / var[t]);
    }
    EsTestResult out;
    out.exceedances = u.size();
    if (u.size() < kMinEsExceedances) return out;

    const double n = static_cast<double>(u.size());
    auto studentized = [n](std::span<const double> x) {
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        if (sd > 0.0) return mean / (sd / std::sqrt(n));
        return mean == 0.0 ? 0.0 : std::copysign(kInf, mean);
    };
    const double t0 = studentized(u);
    const double mean = std::accumulate(u.begin(), u.end(), 0.0) / n;
    std::vector<double> centred(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) centred[i] = u[i] - mean;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, u.size() - 1);
    std::vector<double> draw(u.size());
    int extreme = 0;
    for (int b = 0; b < n_boot; ++b) {
        for (auto& v : draw) v = centred[pick(rng)];
        double tb = studentized(draw);
        if (!std::isfinite(tb)) tb = 0.0;
        if (std::abs(tb) >= std::abs(t0)) ++extreme;
    }
    out.result = make_result(t0, static_cast<double>(extreme) / n_boot);
    return out;
}

// ---------------------------------------------------------------- ranking

double skill_score(std::span<const double> method_avg, std::span<const double> benchmark_avg) {
    if (method_avg.size() != benchmark_avg.size() || method_avg.empty()) {
        throw std::invalid_argument("skill score needs one method and benchmark average per index");
    }
    double log_sum = 0.0;
    for (std::size_t i = 0; i < method_avg.size(); ++i) {
        if (!(method_avg[i] > 0.0) || !(benchmark_avg[i] > 0.0)) {
            throw NumericalError(fmt::format("skill score needs positive average scores, got {} and {}",
                                             method_avg[i], benchmark_avg[i]));
        }
        log_sum += std::log(method_avg[i] / benchmark_avg[i]);
    }
    return 100.0 * (1.0 - std::exp(log_sum / static_cast<double>(method_avg.size())));
}

std::vector<double> average_ranks(const std::vector<std::vector<double>>& scores) {
    if (scores.empty()) throw std::invalid_argument("ranking needs at least one index");
    const std::size_t M = scores.front().size();
    std::vector<double> mean(M, 0.0);
    for (const auto& row : scores) {
        if (row.size() != M) throw std::invalid_argument("every index must score the same methods");
        std::vector<std::size_t> order(M);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
        for (std::size_t i = 0; i < M;) {
            std::size_t j = i;
            while (j + 1 < M && row[order[j + 1]] == row[order[i]]) ++j;
            const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) mean[order[k]] += rank;
            i = j + 1;
        }
    }
    for (auto& r : mean) r /= static_cast<double>(scores.size());
    return mean;
}

McsResult mcs(const std::vector<std::vector<double>>& losses, const McsOptions& options) {
    const std::size_t M = losses.size();
    if (M < 2) throw std::invalid_argument("model confidence set needs at least two methods");
    const std::size_t n = losses.front().size();
    if (n < 250) throw std::invalid_argument("model confidence set needs at least 250 days");
    for (const auto& l : losses) {
        if (l.size() != n) throw std::invalid_argument("loss series differ in length");
        for (double v : l) {
            if (!std::isfinite(v)) throw NumericalError("model confidence set needs finite losses");
        }
    }
    if (!(options.confidence > 0.0 && options.confidence < 1.0)) throw std::invalid_argument("confidence in (0, 1)");
    if (options.n_boot < 1 || options.block_len < 1) throw std::invalid_argument("invalid bootstrap settings");
    const auto B = static_cast<std::size_t>(options.n_boot);

    std::vector<double> mean(M, 0.0);
    double scale = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        mean[m] = std::accumulate(losses[m].begin(), losses[m].end(), 0.0) / static_cast<double>(n);
        scale = std::max(scale, std::abs(mean[m]));
    }

    // Circular moving-block resamples shared by every elimination step.
    std::vector<double> boot(B * M, 0.0);  // boot[b * M + m]
    parallel_for(B, 0, [&](std::size_t b) {
        std::seed_seq seq{static_cast<std::uint64_t>(options.seed), static_cast<std::uint64_t>(b)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> start(0, n - 1);
        std::vector<double> sums(M, 0.0);
        std::size_t filled = 0;
        while (filled < n) {
            const std::size_t s = start(rng);
            for (std::size_t k = 0; k < options.block_len && filled < n; ++k, ++filled) {
                const std::size_t t = (s + k) % n;
                for (std::size_t m = 0; m < M; ++m) sums[m] += losses[m][t];
            }
        }
        for (std::size_t m = 0; m < M; ++m) boot[b * M + m] = sums[m] / static_cast<double>(n);
    });

    const double tiny = std::pow(1e-10 * std::max(scale, 1e-300), 2.0);
    std::vector<std::size_t> alive(M);
    std::iota(alive.begin(), alive.end(), 0);
    McsResult out;
    double p_running = 0.0;
    while (alive.size() > 1) {
        const std::size_t k = alive.size();
        double avg = 0.0;
        for (auto m : alive) avg += mean[m];
        avg /= static_cast<double>(k);
        std::vector<double> dbar(k), var(k, 0.0), dstar(B * k);
        for (std::size_t i = 0; i < k; ++i) dbar[i] = mean[alive[i]] - avg;
        for (std::size_t b = 0; b < B; ++b) {
            double bavg = 0.0;
            for (auto m : alive) bavg += boot[b * M + m];
            bavg /= static_cast<double>(k);
            for (std::size_t i = 0; i < k; ++i) {
                const double d = boot[b * M + alive[i]] - bavg - dbar[i];
                dstar[b * k + i] = d;
                var[i] += d * d;
            }
        }
        std::vector<double> tstat(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            var[i] /= static_cast<double>(B);
            tstat[i] = var[i] > tiny ? dbar[i] / std::sqrt(var[i]) : 0.0;
        }
        const auto worst = static_cast<std::size_t>(std::max_element(tstat.begin(), tstat.end()) - tstat.begin());
        const double tmax = tstat[worst];
        std::size_t exceed = 0;
        for (std::size_t b = 0; b < B; ++b) {
            double tb = 0.0;
            bool any = false;
            for (std::size_t i = 0; i < k; ++i) {
                const double v = var[i] > tiny ? dstar[b * k + i] / std::sqrt(var[i]) : 0.0;
                tb = any ? std::max(tb, v) : v;
                any = true;
            }
            if (tb >= tmax) ++exceed;
        }
        const double p = static_cast<double>(exceed) / static_cast<double>(B);
        p_running = std::max(p_running, p);
        if (p_running >= 1.0 - options.confidence) break;
        out.eliminated.push_back({alive[worst], p_running});
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    out.surviving = alive;
    return out;
}

// ---------------------------------------------------------------- evaluation

IndexEvaluation evaluate_index(std::string index, std::span<const double> returns,
                               const std::vector<ForecastPath>& paths, const ForecastPath& benchmark,
                               const std::vector<ScoreSpec>& specs, Alpha alpha, const EvaluationOptions& options) {
    const std::size_t D = returns.size();
    auto check = [&](const ForecastPath& p) {
        if (p.pairs.size() != D) {
            throw DataError(fmt::format("forecast path '{}' has {} days, expected {}", p.id, p.pairs.size(), D));
        }
    };
    check(benchmark);
    for (const auto& p : paths) check(p);
    if (specs.empty()) throw ConfigError("no score variants to evaluate");

    std::vector<std::size_t> days;
    for (std::size_t d = 0; d < D; ++d) {
        bool ok = std::isfinite(returns[d]) && benchmark.pairs[d].has_value();
        for (const auto& p : paths) ok = ok && p.pairs[d].has_value();
        if (ok) days.push_back(d);
    }
    if (days.size() < D) spdlog::info("{}: evaluating {} of {} days common to every path", index, days.size(), D);
    if (days.size() < 50) throw DataError(fmt::format("{}: only {} common forecast days", index, days.size()));

    IndexEvaluation out;
    out.index = std::move(index);
    out.specs = specs;
    out.common_days = days.size();
    std::vector<double> r(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) r[i] = returns[days[i]];

    auto avg_score = [&](const ScoreSpec& spec, const ForecastPath& p, std::vector<double>* daily) {
        double total = 0.0;
        for (std::size_t i = 0; i < days.size(); ++i) {
            const auto& f = *p.pairs[days[i]];
            const double s = score_or_inf(spec, f.var, f.es, r[i]);
            if (daily) daily->push_back(s);
            total += s;
        }
        return total / static_cast<double>(days.size());
    };
    for (const auto& spec : specs) out.benchmark_avg.push_back(avg_score(spec, benchmark, nullptr));

    std::vector<std::vector<std::vector<double>>> daily(specs.size(), std::vector<std::vector<double>>(paths.size()));
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const auto& p = paths[k];
        MethodEvaluation ev;
        ev.id = p.id;
        ev.days = days.size();
        std::vector<double> var(days.size()), es(days.size());
        for (std::size_t i = 0; i < days.size(); ++i) {
            var[i] = p.pairs[days[i]]->var;
            es[i] = p.pairs[days[i]]->es;
        }
        const auto hits = hit_sequence(r, var);
        ev.hit_rate = static_cast<double>(std::count(hits.begin(), hits.end(), true)) / static_cast<double>(hits.size());
        ev.uc = uc_test(hits, alpha);
        ev.cc = cc_test(hits, alpha);
        if (hits.size() >= 100) {
            try {
                ev.dq = dq_test(hits, var, alpha);
            } catch (const NumericalError& e) {
                spdlog::warn("{} {}: {}", out.index, p.id, e.what());
            }
        }
        ev.es = es_bootstrap_test(r, var, es, options.es_boot, options.seed);
        for (std::size_t s = 0; s < specs.size(); ++s) ev.avg_scores.push_back(avg_score(specs[s], p, &daily[s][k]));
        out.methods.push_back(std::move(ev));
    }

    if (paths.size() >= 2 && days.size() >= 250) {
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const auto res = mcs(daily[s], options.mcs);
            for (auto& m : out.methods) m.in_mcs.push_back(false);
            for (auto m : res.surviving) out.methods[m].in_mcs[s] = true;
        }
    } else {
        spdlog::warn("{}: model confidence set skipped ({} methods, {} days)", out.index, paths.size(), days.size());
    }
    return out;
}

Leaderboard leaderboard(const std::vector<IndexEvaluation>& indices) {
    if (indices.empty()) throw std::invalid_argument("leaderboard needs at least one index");
    const auto& first = indices.front();
    const std::size_t M = first.methods.size();
    const std::size_t S = first.specs.size();
    Leaderboard board;
    for (const auto& m : first.methods) board.ids.push_back(m.id);
    for (const auto& ix : indices) {
        if (ix.methods.size() != M || ix.specs.size() != S) throw DataError("indices evaluate different method sets");
        for (std::size_t m = 0; m < M; ++m) {
            if (ix.methods[m].id != board.ids[m]) throw DataError("indices list methods in different orders");
        }
    }
    board.skill.assign(M, std::vector<double>(S));
    board.rank.assign(M, std::vector<double>(S));
    board.mcs_count.assign(M, std::vector<int>(S, 0));
    board.rejections.assign(M, {0, 0, 0, 0});
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> bench;
        std::vector<std::vector<double>> table;
        for (const auto& ix : indices) {
            bench.push_back(ix.benchmark_avg[s]);
            std::vector<double> row;
            for (const auto& m : ix.methods) row.push_back(m.avg_scores[s]);
            table.push_back(std::move(row));
        }
        const auto ranks = average_ranks(table);
        for (std::size_t m = 0; m < M; ++m) {
            std::vector<double> mine;
            for (const auto& row : table) mine.push_back(row[m]);
            board.skill[m][s] = skill_score(mine, bench);
            board.rank[m][s] = ranks[m];
            for (const auto& ix : indices) {
                if (!ix.methods[m].in_mcs.empty() && ix.methods[m].in_mcs[s]) ++board.mcs_count[m][s];
            }
        }
    }
    for (const auto& ix : indices) {
        for (std::size_t m = 0; m < M; ++m) {
            const auto& ev = ix.methods[m];
            board.rejections[m][0] += ev.uc.reject_at_5pct ? 1 : 0;
            board.rejections[m][1] += ev.cc.reject_at_5pct ? 1 : 0;
            board.rejections[m][2] += ev.dq && ev.dq->reject_at_5pct ? 1 : 0;
            board.rejections[m][3] += ev.es.result && ev.es.result->reject_at_5pct ? 1 : 0;
        }
    }
    return board;
}

// ---------------------------------------------------------------- files

void save_forecast_path(const std::filesystem::path& path, std::span<const Date> dates,
                        std::span<const double> returns, const ForecastPath& forecasts) {
    if (dates.size() != forecasts.pairs.size() || returns.size() != dates.size()) {
        throw std::invalid_argument("forecast path, dates and returns differ in length");
    }
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << "date,return,var,es,error,parameters\n";
    for (std::size_t d = 0; d < dates.size(); ++d) {
        out << format_date(dates[d]) << ',' << format_real(returns[d]) << ',';
        if (forecasts.pairs[d]) out << format_real(forecasts.pairs[d]->var) << ',' << format_real(forecasts.pairs[d]->es);
        else out << ',';
        const std::string err = d < forecasts.errors.size() ? forecasts.errors[d] : std::string();
        const std::string par = d < forecasts.parameters.size() ? forecasts.parameters[d] : std::string();
        out << ',' << clean_field(err) << ',' << clean_field(par) << '\n';
    }
}

LoadedPath load_forecast_path(const std::filesystem::path& path, std::string id) {
    const auto table = csv::read(path);
    const auto c_date = table.require("date", path);
    const auto c_ret = table.require("return", path);
    const auto c_var = table.require("var", path);
    const auto c_es = table.require("es", path);
    const auto c_err = table.find("error");
    const auto c_par = table.find("parameters");
    LoadedPath out;
    out.path.id = std::move(id);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        auto cell = [&](std::size_t c) -> std::string { return c < row.size() ? row[c] : std::string(); };
        try {
            out.dates.push_back(parse_date(cell(c_date)));
            out.returns.push_back(parse_real(cell(c_ret)));
            if (cell(c_var).empty()) {
                out.path.pairs.emplace_back(std::nullopt);
            } else {
                out.path.pairs.emplace_back(ForecastPair{parse_real(cell(c_var)), parse_real(cell(c_es))});
            }
        } catch (const std::exception& e) {
            throw DataError(fmt::format("{}:{}: {}", path.string(), table.line_numbers[i], e.what()));
        }
        out.path.errors.push_back(c_err == std::string::npos ? std::string() : cell(c_err));
        out.path.parameters.push_back(c_par == std::string::npos ? std::string() : cell(c_par));
    }
    return out;
}

void save_summary_csv(const std::filesystem::path& path, const std::vector<IndexEvaluation>& indices) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    if (indices.empty()) return;
    out << "index,method,days,hit_rate,uc_stat,uc_p,cc_stat,cc_p,dq_stat,dq_p,es_exceedances,es_stat,es_p";
    for (const auto& s : indices.front().specs) {
        const auto name = to_string(s.variant);
        out << ',' << name << "_avg," << name << "_skill," << name << "_in_mcs";
    }
    out << '\n';
    auto opt = [](const std::optional<TestResult>& t, bool stat) {
        return t ? format_real(stat ? t->statistic : t->p_value) : std::string();
    };
    for (const auto& ix : indices) {
        for (const auto& m : ix.methods) {
            out << ix.index << ',' << m.id << ',' << m.days << ',' << format_real(m.hit_rate) << ','
                << format_real(m.uc.statistic) << ',' << format_real(m.uc.p_value) << ','
                << format_real(m.cc.statistic) << ',' << format_real(m.cc.p_value) << ',' << opt(m.dq, true) << ','
                << opt(m.dq, false) << ',' << m.es.exceedances << ',' << opt(m.es.result, true) << ','
                << opt(m.es.result, false);
            for (std::size_t s = 0; s < ix.specs.size(); ++s) {
                const double skill = 100.0 * (1.0 - m.avg_scores[s] / ix.benchmark_avg[s]);
                out << ',' << format_real(m.avg_scores[s]) << ',' << format_real(skill) << ','
                    << (m.in_mcs.empty() ? std::string() : (m.in_mcs[s] ? "1" : "0"));
            }
            out << '\n';
        }
    }
}

std::string format_tables(const std::vector<IndexEvaluation>& indices, const Leaderboard& board) {
    std::ostringstream os;
    const auto& specs = indices.front().specs;
    std::size_t width = 8;
    for (const auto& id : board.ids) width = std::max(width, combiner_display_name(id).size());
    width += 2;

    os << fmt::format("Calibration: number of indices rejected at 5% ({} indices)\n", indices.size());
    os << fmt::format("{:<{}}{:>6}{:>6}{:>6}{:>6}\n", "Method", width, "UC", "CC", "DQ", "ES");
    for (std::size_t m = 0; m < board.ids.size(); ++m) {
        const auto& r = board.rejections[m];
        os << fmt::format("{:<{}}{:>6}{:>6}{:>6}{:>6}\n", combiner_display_name(board.ids[m]), width, r[0], r[1], r[2],
                          r[3]);
    }

    os << "\nSkill score (%) and average rank\n";
    os << fmt::format("{:<{}}", "Method", width);
    for (const auto& s : specs) os << fmt::format("{:>8}", to_string(s.variant));
    os << "  |";
    for (const auto& s : specs) os << fmt::format("{:>8}", to_string(s.variant));
    os << '\n';
    for (std::size_t m = 0; m < board.ids.size(); ++m) {
        os << fmt::format("{:<{}}", combiner_display_name(board.ids[m]), width);
        for (std::size_t s = 0; s < specs.size(); ++s) os << fmt::format("{:>8.1f}", board.skill[m][s]);
        os << "  |";
        for (std::size_t s = 0; s < specs.size(); ++s) os << fmt::format("{:>8.1f}", board.rank[m][s]);
        os << '\n';
    }

    os << "\nModel confidence set: number of indices included\n";
    os << fmt::format("{:<{}}", "Method", width);
    for (const auto& s : specs) os << fmt::format("{:>8}", to_string(s.variant));
    os << '\n';
    for (std::size_t m = 0; m < board.ids.size(); ++m) {
        os << fmt::format("{:<{}}", combiner_display_name(board.ids[m]), width);
        for (std::size_t s = 0; s < specs.size(); ++s) os << fmt::format("{:>8}", board.mcs_count[m][s]);
        os << '\n';
    }
    return os.str();
}

}  // namespace varescomb

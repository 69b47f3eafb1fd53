#include "varescomb/combine_weighted.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "varescomb/optimize.hpp"
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

bool improves(double candidate, double best) {
    if (!std::isfinite(candidate)) return false;
    if (!std::isfinite(best)) return true;
    return candidate < best - 1e-12 * std::abs(best);
}

void check_lengths(const ForecastPool& train, std::span<const double> returns) {
    if (returns.size() != train.num_origins()) {
        throw std::invalid_argument(
            fmt::format("{} returns for {} training columns", returns.size(), train.num_origins()));
    }
}

void check_column(const WeightVector& weights, std::span<const ForecastPair> column) {
    if (weights.size() != column.size()) {
        throw std::invalid_argument(fmt::format("{} weights for {} methods", weights.size(), column.size()));
    }
}

std::vector<double> softmax(std::span<const double> theta) {
    const double top = *std::max_element(theta.begin(), theta.end());
    std::vector<double> w(theta.size());
    double total = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        w[i] = std::exp(theta[i] - top);
        total += w[i];
    }
    for (auto& x : w) x /= total;
    return w;
}

double weighted_lower_median(const std::vector<double>& values, std::span<const double> w) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double cum = 0.0;
    for (auto i : order) {
        cum += w[i];
        if (cum >= 0.5 - 1e-12) return values[i];
    }
    return values[order.back()];
}

// Day-major copies of the inputs to the minimum-score objective.
struct Prepared {
    std::size_t M = 0;
    std::size_t T = 0;
    MinScoreMode mode = MinScoreMode::Spacing;
    std::vector<double> var;     // var[t * M + m]
    std::vector<double> second;  // spacing or ratio
    std::vector<double> returns;
};

Prepared prepare(const ForecastPool& pool, std::span<const double> returns, MinScoreMode mode, std::size_t first,
                 std::size_t count) {
    Prepared p;
    p.M = pool.num_methods();
    p.T = count;
    p.mode = mode;
    p.var.resize(p.M * p.T);
    p.second.resize(p.M * p.T);
    p.returns.assign(returns.begin() + static_cast<std::ptrdiff_t>(first),
                     returns.begin() + static_cast<std::ptrdiff_t>(first + count));
    for (std::size_t t = 0; t < count; ++t) {
        const auto col = pool.column(first + t);
        for (std::size_t m = 0; m < p.M; ++m) {
            const auto& pair = col[m];
            if (mode == MinScoreMode::Ratio && !(pair.var < 0.0)) {
                throw DataError(fmt::format("ratio weighting needs negative VaR forecasts; {} has VaR {} on {}",
                                            pool.method_ids()[m], pair.var, format_date(pool.origins()[first + t])));
            }
            p.var[t * p.M + m] = pair.var;
            p.second[t * p.M + m] = mode == MinScoreMode::Spacing ? pair.var - pair.es : pair.es / pair.var;
        }
    }
    return p;
}

ForecastPair combine_prepared(const Prepared& p, std::size_t t, std::span<const double> w1, std::span<const double> w2) {
    const double* v = p.var.data() + t * p.M;
    const double* s = p.second.data() + t * p.M;
    double var = 0.0, sec = 0.0;
    for (std::size_t m = 0; m < p.M; ++m) {
        var += w1[m] * v[m];
        sec += w2[m] * s[m];
    }
    return {var, p.mode == MinScoreMode::Spacing ? var - sec : var * sec};
}

double objective_prepared(const Prepared& p, const ScoreSpec& spec, std::span<const double> w1,
                          std::span<const double> w2) {
    double total = 0.0;
    for (std::size_t t = 0; t < p.T; ++t) {
        const auto c = combine_prepared(p, t, w1, w2);
        total += score_or_inf(spec, c.var, c.es, p.returns[t]);
        if (!std::isfinite(total)) return kInf;
    }
    return total / static_cast<double>(p.T);
}

double ridge_penalty(std::span<const double> w, double lambda) {
    if (lambda == 0.0) return 0.0;
    const double target = 1.0 / static_cast<double>(w.size());
    double s = 0.0;
    for (double x : w) s += (x - target) * (x - target);
    return lambda * s;
}

// Penalized objective over softmax-coded weights with its gradient.
double coded_objective(const Prepared& p, const ScoreSpec& spec, double lambda1, double lambda2,
                       std::span<const double> theta, std::span<double> grad) {
    const std::size_t M = p.M;
    const auto w1 = softmax(theta.subspan(0, M));
    const auto w2 = softmax(theta.subspan(M, M));
    std::vector<double> g1(M, 0.0), g2(M, 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < p.T; ++t) {
        const double* v = p.var.data() + t * M;
        const double* s = p.second.data() + t * M;
        double var = 0.0, sec = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            var += w1[m] * v[m];
            sec += w2[m] * s[m];
        }
        const double es = p.mode == MinScoreMode::Spacing ? var - sec : var * sec;
        ScoreGradient sg;
        try {
            sg = joint_score_grad(spec, var, es, p.returns[t]);
        } catch (const std::domain_error&) {
            std::fill(grad.begin(), grad.end(), 0.0);
            return kInf;
        }
        total += sg.value;
        // d es / d var is 1 (spacing) or the combined ratio; d es / d second is -1 or var.
        const double des_dvar = p.mode == MinScoreMode::Spacing ? 1.0 : sec;
        const double des_dsec = p.mode == MinScoreMode::Spacing ? -1.0 : var;
        const double dv = sg.d_var + sg.d_es * des_dvar;
        const double ds = sg.d_es * des_dsec;
        for (std::size_t m = 0; m < M; ++m) {
            g1[m] += dv * v[m];
            g2[m] += ds * s[m];
        }
    }
    const double inv_t = 1.0 / static_cast<double>(p.T);
    const double target = 1.0 / static_cast<double>(M);
    for (std::size_t m = 0; m < M; ++m) {
        g1[m] = g1[m] * inv_t + 2.0 * lambda1 * (w1[m] - target);
        g2[m] = g2[m] * inv_t + 2.0 * lambda2 * (w2[m] - target);
    }
    // Softmax chain rule: d/d theta_j = w_j (g_j - sum_k w_k g_k).
    double mean1 = 0.0, mean2 = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        mean1 += w1[m] * g1[m];
        mean2 += w2[m] * g2[m];
    }
    for (std::size_t m = 0; m < M; ++m) {
        grad[m] = w1[m] * (g1[m] - mean1);
        grad[M + m] = w2[m] * (g2[m] - mean2);
    }
    return total * inv_t + ridge_penalty(w1, lambda1) + ridge_penalty(w2, lambda2);
}

std::vector<double> log_weights(const std::vector<double>& w) {
    std::vector<double> theta(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) theta[i] = std::log(std::max(w[i], 1e-12));
    return theta;
}

struct Candidate {
    std::vector<double> w1, w2;
    double penalized = kInf;
};

Candidate run_starts(const Prepared& p, const ScoreSpec& spec, double lambda1, double lambda2,
                     const std::vector<std::vector<double>>& starts, unsigned threads, int max_iter = 300) {
    std::vector<Candidate> results(starts.size());
    const opt::GradObjective f = [&](std::span<const double> x, std::span<double> g) {
        return coded_objective(p, spec, lambda1, lambda2, x, g);
    };
    parallel_for(starts.size(), threads, [&](std::size_t k) {
        opt::BfgsOptions o;
        o.max_iter = max_iter;
        o.grad_tol = 1e-9;
        // The start itself is always a candidate.
        std::vector<double> g(starts[k].size());
        const double at_start = f(starts[k], g);
        auto r = opt::bfgs(f, starts[k], o);
        const auto& x = (std::isfinite(r.value) && r.value <= at_start) ? r.x : starts[k];
        const std::span<const double> xs(x);
        results[k] = {softmax(xs.subspan(0, p.M)), softmax(xs.subspan(p.M, p.M)),
                      std::min(std::isfinite(r.value) ? r.value : kInf, at_start)};
    });
    Candidate best;
    for (auto& c : results) {
        if (improves(c.penalized, best.penalized)) best = std::move(c);
    }
    return best;
}

std::vector<std::vector<double>> start_points(const ForecastPool& train, std::span<const double> returns,
                                              const ScoreSpec& spec, const MinScoreOptions& options) {
    const std::size_t M = train.num_methods();
    std::vector<std::vector<double>> starts;
    starts.emplace_back(2 * M, 0.0);
    if (options.starts >= 2) {
        const auto rel = relative_score_weights(optimize_temperature(train, returns, spec),
                                                summed_scores(train, returns, spec));
        auto theta = log_weights(rel.w);
        theta.insert(theta.end(), theta.begin(), theta.end());
        starts.push_back(std::move(theta));
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> n01;
    while (static_cast<int>(starts.size()) < options.starts) {
        std::vector<double> theta(2 * M);
        for (auto& x : theta) x = n01(rng);
        starts.push_back(std::move(theta));
    }
    return starts;
}

MinScoreFit finish(const Prepared& p, const ScoreSpec& spec, Candidate best, double lambda1, double lambda2) {
    // Equal weights and every one-hot pair are checked directly; softmax
    // coding reaches them only in the limit.
    const std::size_t M = p.M;
    std::vector<double> eq(M, 1.0 / static_cast<double>(M));
    const double eq_value =
        objective_prepared(p, spec, eq, eq) + ridge_penalty(eq, lambda1) + ridge_penalty(eq, lambda2);
    if (!(best.penalized <= eq_value)) best = {eq, eq, eq_value};
    const double target = 1.0 / static_cast<double>(M);
    const double onehot_sq = (1.0 - target) * (1.0 - target) + static_cast<double>(M - 1) * target * target;
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
            double total = 0.0;
            for (std::size_t t = 0; t < p.T && std::isfinite(total); ++t) {
                const double var = p.var[t * M + i];
                const double sec = p.second[t * M + j];
                const double es = p.mode == MinScoreMode::Spacing ? var - sec : var * sec;
                total += score_or_inf(spec, var, es, p.returns[t]);
            }
            const double value = total / static_cast<double>(p.T) + (lambda1 + lambda2) * onehot_sq;
            if (improves(value, best.penalized)) {
                std::vector<double> a(M, 0.0), b(M, 0.0);
                a[i] = 1.0;
                b[j] = 1.0;
                best = {std::move(a), std::move(b), value};
            }
        }
    }
    if (!std::isfinite(best.penalized)) throw NumericalError("minimum-score fit found no finite objective");

    MinScoreFit fit;
    fit.mode = p.mode;
    fit.w_var.w = std::move(best.w1);
    fit.w_second.w = std::move(best.w2);
    fit.w_var.validate();
    fit.w_second.validate();
    fit.objective = objective_prepared(p, spec, fit.w_var.w, fit.w_second.w);
    fit.penalized_objective = best.penalized;
    fit.lambda1 = lambda1;
    fit.lambda2 = lambda2;
    return fit;
}

MinScoreFit fit_prepared(const Prepared& p, const ForecastPool& train, std::span<const double> returns,
                         const ScoreSpec& spec, const MinScoreOptions& options,
                         const std::vector<std::vector<double>>& extra_starts) {
    auto starts = start_points(train, returns, spec, options);
    starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());
    auto best = run_starts(p, spec, options.lambda1, options.lambda2, starts, options.threads);
    return finish(p, spec, std::move(best), options.lambda1, options.lambda2);
}

void check_training(const ForecastPool& train, std::span<const double> returns) {
    check_lengths(train, returns);
    if (train.num_origins() < kMinTrainingDays) {
        throw std::invalid_argument(
            fmt::format("training span of {} days is below the minimum of {}", train.num_origins(), kMinTrainingDays));
    }
    if (train.num_methods() == 0) throw std::invalid_argument("training pool has no methods");
}

}  // namespace

// ---------------------------------------------------------------- weights

WeightVector WeightVector::equal(std::size_t methods) {
    if (methods == 0) throw std::invalid_argument("weight vector needs at least one method");
    return {std::vector<double>(methods, 1.0 / static_cast<double>(methods))};
}

void WeightVector::validate() const {
    if (w.empty()) throw std::invalid_argument("empty weight vector");
    double total = 0.0;
    for (double x : w) {
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(fmt::format("weight {} outside [0, 1]", x));
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument(fmt::format("weights sum to {}", total));
}

void RelScoreConfig::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument(fmt::format("temperature must be finite and nonnegative, got {}", temperature));
    }
}

void RidgeConfig::validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw std::invalid_argument("ridge penalties must be nonnegative");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw std::invalid_argument(fmt::format("holdout fraction {} outside (0, 1)", holdout_fraction));
    }
}

// ---------------------------------------------------------------- relative score

std::vector<double> summed_scores(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec) {
    check_lengths(train, returns);
    std::vector<double> sums(train.num_methods(), 0.0);
    for (std::size_t t = 0; t < train.num_origins(); ++t) {
        const auto col = train.column(t);
        for (std::size_t m = 0; m < col.size(); ++m) sums[m] += score_or_inf(spec, col[m].var, col[m].es, returns[t]);
    }
    return sums;
}

WeightVector relative_score_weights(const RelScoreConfig& cfg, std::span<const double> summed) {
    cfg.validate();
    if (summed.empty()) throw std::invalid_argument("relative-score weights need at least one method");
    const std::size_t M = summed.size();
    if (cfg.temperature == 0.0) return WeightVector::equal(M);
    if (std::none_of(summed.begin(), summed.end(), [](double s) { return std::isfinite(s); })) {
        throw NumericalError("no method has a finite summed score");
    }
    std::vector<double> logits(M);
    for (std::size_t m = 0; m < M; ++m) {
        logits[m] = std::isfinite(summed[m]) ? -cfg.temperature * summed[m] : -kInf;
    }
    WeightVector out{softmax(logits)};
    out.validate();
    return out;
}

ForecastPair relative_score_combine(const WeightVector& weights, std::span<const ForecastPair> column) {
    check_column(weights, column);
    ForecastPair out{0.0, 0.0};
    for (std::size_t m = 0; m < column.size(); ++m) {
        out.var += weights.w[m] * column[m].var;
        out.es += weights.w[m] * column[m].es;
    }
    return out;
}

ForecastPair weighted_median_combine(const WeightVector& weights, std::span<const ForecastPair> column) {
    check_column(weights, column);
    std::vector<double> vars(column.size()), ess(column.size());
    for (std::size_t m = 0; m < column.size(); ++m) {
        vars[m] = column[m].var;
        ess[m] = column[m].es;
    }
    return {weighted_lower_median(vars, weights.w), weighted_lower_median(ess, weights.w)};
}

namespace {

double relative_objective_from(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                               std::span<const double> summed, double temperature, RelScoreAggregate aggregate) {
    const auto w = relative_score_weights({temperature}, summed);
    double total = 0.0;
    for (std::size_t t = 0; t < train.num_origins(); ++t) {
        const auto col = train.column(t);
        const auto c = aggregate == RelScoreAggregate::Mean ? relative_score_combine(w, col)
                                                            : weighted_median_combine(w, col);
        total += score_or_inf(spec, c.var, c.es, returns[t]);
    }
    return total / static_cast<double>(train.num_origins());
}

}  // namespace

double relative_score_objective(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                                double temperature, RelScoreAggregate aggregate) {
    const auto summed = summed_scores(train, returns, spec);
    return relative_objective_from(train, returns, spec, summed, temperature, aggregate);
}

RelScoreConfig optimize_temperature(const ForecastPool& train, std::span<const double> returns,
                                    const ScoreSpec& spec, RelScoreAggregate aggregate) {
    check_lengths(train, returns);
    if (train.num_origins() == 0) throw std::invalid_argument("empty training window");
    const auto summed = summed_scores(train, returns, spec);
    auto objective = [&](double lambda) {
        return relative_objective_from(train, returns, spec, summed, lambda, aggregate);
    };

    std::vector<double> grid{0.0};
    const double lo = std::log(kTemperatureLo), hi = std::log(kTemperatureHi);
    for (int k = 0; k < kTemperatureGridPoints; ++k) {
        grid.push_back(std::exp(lo + (hi - lo) * k / (kTemperatureGridPoints - 1)));
    }
    std::size_t best_k = 0;
    double best = kInf;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double v = objective(grid[k]);
        if (improves(v, best)) {
            best = v;
            best_k = k;
        }
    }
    if (best_k == 0) return {0.0};

    const double left = std::log(grid[best_k == 1 ? 1 : best_k - 1]);
    const double right = std::log(grid[std::min(best_k + 1, grid.size() - 1)]);
    double chosen = grid[best_k];
    if (right > left) {
        const auto r = opt::minimize_scalar([&](double x) { return objective(std::exp(x)); }, left, right);
        if (improves(r.value, best)) chosen = std::exp(r.x[0]);
    }
    return {chosen};
}

// ---------------------------------------------------------------- minimum score

ForecastPair min_score_combine(const MinScoreFit& fit, std::span<const ForecastPair> column) {
    check_column(fit.w_var, column);
    check_column(fit.w_second, column);
    double var = 0.0, sec = 0.0;
    for (std::size_t m = 0; m < column.size(); ++m) {
        var += fit.w_var.w[m] * column[m].var;
        if (fit.mode == MinScoreMode::Spacing) {
            sec += fit.w_second.w[m] * (column[m].var - column[m].es);
        } else {
            if (!(column[m].var < 0.0)) {
                throw DataError(fmt::format("ratio weighting needs negative VaR forecasts, got {}", column[m].var));
            }
            sec += fit.w_second.w[m] * (column[m].es / column[m].var);
        }
    }
    return {var, fit.mode == MinScoreMode::Spacing ? var - sec : var * sec};
}

double min_score_objective(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                           MinScoreMode mode, const WeightVector& w_var, const WeightVector& w_second) {
    check_lengths(train, returns);
    const auto p = prepare(train, returns, mode, 0, train.num_origins());
    return objective_prepared(p, spec, w_var.w, w_second.w);
}

MinScoreFit fit_minimum_score(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                              MinScoreMode mode, const MinScoreOptions& options) {
    check_training(train, returns);
    const auto p = prepare(train, returns, mode, 0, train.num_origins());
    return fit_prepared(p, train, returns, spec, options, {});
}

std::vector<double> default_penalty_grid() {
    std::vector<double> grid{0.0};
    for (int k = 0; k <= 12; ++k) grid.push_back(std::pow(10.0, -4.0 + 0.5 * k));
    return grid;
}

MinScoreFit fit_minimum_score_ridge(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                                    const RidgeConfig& cfg, std::span<const double> grid,
                                    const MinScoreOptions& options) {
    cfg.validate();
    check_training(train, returns);
    if (grid.empty()) throw std::invalid_argument("empty penalty grid");
    for (double g : grid) {
        if (!(g >= 0.0)) throw std::invalid_argument("penalty grid values must be nonnegative");
    }
    const std::size_t T = train.num_origins();
    const auto n_fit = static_cast<std::size_t>(std::llround(static_cast<double>(T) * (1.0 - cfg.holdout_fraction)));
    if (n_fit < 2 || n_fit >= T) throw std::invalid_argument("holdout split leaves an empty part");

    const auto fit_pool = train.slice(0, n_fit);
    const std::span<const double> fit_returns = returns.subspan(0, n_fit);
    const auto fit_part = prepare(train, returns, MinScoreMode::Spacing, 0, n_fit);
    const auto holdout = prepare(train, returns, MinScoreMode::Spacing, n_fit, T - n_fit);

    // Unpenalized fit on the first part seeds every grid cell.
    MinScoreOptions base = options;
    base.lambda1 = base.lambda2 = 0.0;
    const auto unpenalized = fit_prepared(fit_part, fit_pool, fit_returns, spec, base, {});
    auto seed = log_weights(unpenalized.w_var.w);
    const auto seed2 = log_weights(unpenalized.w_second.w);
    seed.insert(seed.end(), seed2.begin(), seed2.end());
    const std::vector<double> equal_start(2 * train.num_methods(), 0.0);

    const std::size_t G = grid.size();
    std::vector<double> holdout_score(G * G, kInf);
    parallel_for(G * G, options.threads, [&](std::size_t cell) {
        const double l1 = grid[cell / G], l2 = grid[cell % G];
        Candidate c;
        if (l1 == 0.0 && l2 == 0.0) {
            c = {unpenalized.w_var.w, unpenalized.w_second.w, unpenalized.penalized_objective};
        } else {
            // One descent per cell from the better of equal weights and the
            // unpenalized solution.
            std::vector<double> g(seed.size());
            const bool from_equal = coded_objective(fit_part, spec, l1, l2, equal_start, g) <
                                    coded_objective(fit_part, spec, l1, l2, seed, g);
            c = run_starts(fit_part, spec, l1, l2, {from_equal ? equal_start : seed}, 1, 100);
        }
        if (!std::isfinite(c.penalized)) return;
        holdout_score[cell] = objective_prepared(holdout, spec, c.w1, c.w2);
    });
    std::size_t best_cell = 0;
    double best = kInf;
    for (std::size_t cell = 0; cell < G * G; ++cell) {
        if (improves(holdout_score[cell], best)) {
            best = holdout_score[cell];
            best_cell = cell;
        }
    }
    if (!std::isfinite(best)) throw NumericalError("ridge holdout selection found no finite score");

    MinScoreOptions full = options;
    full.lambda1 = grid[best_cell / G];
    full.lambda2 = grid[best_cell % G];
    spdlog::debug("ridge penalties ({}, {}) with holdout score {}", full.lambda1, full.lambda2, best);
    const auto p = prepare(train, returns, MinScoreMode::Spacing, 0, T);
    return fit_prepared(p, train, returns, spec, full, {});
}

void save_weight_path(const std::filesystem::path& path, const std::vector<std::string>& method_ids,
                      std::span<const Date> dates, std::span<const WeightVector> weights) {
    if (dates.size() != weights.size()) throw std::invalid_argument("one weight vector per date required");
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << "date";
    for (const auto& id : method_ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (weights[i].size() != method_ids.size()) throw std::invalid_argument("weight vector length mismatch");
        out << format_date(dates[i]);
        for (double w : weights[i].w) out << ',' << format_real(w);
        out << '\n';
    }
}

}  // namespace varescomb

#include "varescomb/combine_central.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "varescomb/optimize.hpp"
#include "varescomb/parallel.hpp"

namespace varescomb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonempty(std::span<const ForecastPair> column) {
    if (column.empty()) throw std::invalid_argument("cannot combine an empty column");
}

void sorted_components(std::span<const ForecastPair> column, std::vector<double>& v, std::vector<double>& e) {
    v.resize(column.size());
    e.resize(column.size());
    for (std::size_t m = 0; m < column.size(); ++m) {
        v[m] = column[m].var;
        e[m] = column[m].es;
    }
    std::sort(v.begin(), v.end());
    std::sort(e.begin(), e.end());
}

double range_mean(const std::vector<double>& sorted, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += sorted[i];
    return s / static_cast<double>(hi - lo);
}

double sorted_median(const std::vector<double>& x) {
    const std::size_t n = x.size();
    return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

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

}  // namespace

ForecastPair simple_average(std::span<const ForecastPair> column) {
    require_nonempty(column);
    std::vector<double> v, e;
    sorted_components(column, v, e);
    return {range_mean(v, 0, v.size()), range_mean(e, 0, e.size())};
}

ForecastPair median_combine(std::span<const ForecastPair> column) {
    require_nonempty(column);
    std::vector<double> v, e;
    sorted_components(column, v, e);
    return {sorted_median(v), sorted_median(e)};
}

// ---------------------------------------------------------------- KDE mode

void KdeSpec::validate() const {
    if (!(bandwidth_var > 0.0) || !(bandwidth_spacing > 0.0) || !std::isfinite(bandwidth_var) ||
        !std::isfinite(bandwidth_spacing)) {
        throw ConfigError("KDE bandwidths must be positive and finite");
    }
}

double silverman_bandwidth(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("silverman_bandwidth: empty input");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double mean = 0.0;
    for (double v : s) mean += v / n;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    const double sd = s.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    auto q = [&](double p) {
        const double h = (n - 1.0) * p;
        const auto lo = static_cast<std::size_t>(h);
        const auto hi = std::min(lo + 1, s.size() - 1);
        return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
    };
    const double iqr = (q(0.75) - q(0.25)) / 1.34;
    double spread = iqr > 0.0 ? std::min(sd, iqr) : sd;
    const double floor = 1e-6 * std::max(1.0, std::abs(mean));
    return std::max(0.9 * spread * std::pow(n, -0.2), floor);
}

double kde_mode(std::span<const double> x, double bandwidth) {
    if (x.empty()) throw std::invalid_argument("kde_mode: empty input");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde_mode: bandwidth must be positive");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (*mn == *mx) return *mn;
    const double lo = *mn - 3.0 * bandwidth, hi = *mx + 3.0 * bandwidth;
    const double inv = 1.0 / bandwidth;
    auto density = [&](double at) {
        double s = 0.0;
        for (double v : x) {
            const double u = (at - v) * inv;
            s += std::exp(-0.5 * u * u);
        }
        return s;
    };
    constexpr int kGrid = 512;
    const double step = (hi - lo) / (kGrid - 1);
    int best = 0;
    double best_d = -1.0;
    for (int i = 0; i < kGrid; ++i) {
        const double d = density(lo + step * i);
        if (d > best_d * (1.0 + 1e-12)) {
            best_d = d;
            best = i;
        }
    }
    const double a = lo + step * std::max(best - 1, 0);
    const double b = lo + step * std::min(best + 1, kGrid - 1);
    const auto refined = opt::minimize_scalar([&](double at) { return -density(at); }, a, b);
    const double grid_x = lo + step * best;
    return -refined.value > best_d ? refined.x[0] : grid_x;
}

ForecastPair mode_combine(std::span<const ForecastPair> column, const KdeSpec& spec) {
    require_nonempty(column);
    spec.validate();
    std::vector<double> v(column.size()), d(column.size());
    for (std::size_t m = 0; m < column.size(); ++m) {
        v[m] = column[m].var;
        d[m] = column[m].spacing();
    }
    const double var = kde_mode(v, spec.bandwidth_var);
    const double spacing = std::max(kde_mode(d, spec.bandwidth_spacing), 0.0);
    return {var, var - spacing};
}

KdeSpec kde_spec_for(std::span<const ForecastPair> column, const KdeMultipliers& mult) {
    require_nonempty(column);
    std::vector<double> v(column.size()), d(column.size());
    for (std::size_t m = 0; m < column.size(); ++m) {
        v[m] = column[m].var;
        d[m] = column[m].spacing();
    }
    return {mult.var * silverman_bandwidth(v), mult.spacing * silverman_bandwidth(d)};
}

KdeMultipliers select_kde_multipliers(const ForecastPool& train, std::span<const double> returns,
                                      const ScoreSpec& spec) {
    const std::size_t T = train.num_origins();
    if (returns.size() != T) throw std::invalid_argument("select_kde_multipliers: returns not aligned");
    constexpr std::size_t K = kKdeMultipliers.size();
    std::vector<std::array<double, K>> var_modes(T), spacing_modes(T);
    parallel_for(T, 0, [&](std::size_t t) {
        const auto column = train.column(t);
        std::vector<double> v(column.size()), d(column.size());
        for (std::size_t m = 0; m < column.size(); ++m) {
            v[m] = column[m].var;
            d[m] = column[m].spacing();
        }
        const double hv = silverman_bandwidth(v), hd = silverman_bandwidth(d);
        for (std::size_t k = 0; k < K; ++k) {
            var_modes[t][k] = kde_mode(v, kKdeMultipliers[k] * hv);
            spacing_modes[t][k] = std::max(kde_mode(d, kKdeMultipliers[k] * hd), 0.0);
        }
    });
    KdeMultipliers best;
    double best_score = kInf;
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
            double total = 0.0;
            for (std::size_t t = 0; t < T && std::isfinite(total); ++t) {
                const double var = var_modes[t][i];
                total += score_or_inf(spec, var, var - spacing_modes[t][j], returns[t]);
            }
            if (improves(total, best_score)) {
                best_score = total;
                best = {kKdeMultipliers[i], kKdeMultipliers[j]};
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------- trimmed means

std::string to_string(TrimKind kind) {
    switch (kind) {
        case TrimKind::Symmetric: return "symmetric";
        case TrimKind::Exterior: return "exterior";
        case TrimKind::Interior: return "interior";
        case TrimKind::Lower: return "lower";
        case TrimKind::Higher: return "higher";
        case TrimKind::Flexible: return "flexible";
    }
    return "?";
}

TrimKind parse_trim_kind(std::string_view name) {
    for (auto k : {TrimKind::Symmetric, TrimKind::Exterior, TrimKind::Interior, TrimKind::Lower, TrimKind::Higher,
                   TrimKind::Flexible}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError(fmt::format("unknown trim kind '{}'", name));
}

TrimSpec TrimSpec::fixed(TrimKind kind, int n) {
    if (kind == TrimKind::Flexible) throw std::invalid_argument("TrimSpec::fixed: use TrimSpec::flexible");
    TrimSpec s;
    s.kind = kind;
    s.n = n;
    return s;
}

TrimSpec TrimSpec::flexible(int n_var, int n_es) {
    TrimSpec s;
    s.kind = TrimKind::Flexible;
    s.n_var = n_var;
    s.n_es = n_es;
    return s;
}

void TrimSpec::validate(std::size_t methods) const {
    const auto M = static_cast<long>(methods);
    if (M < 1) throw ConfigError("trimming needs at least one method");
    auto bad = [&] { return ConfigError(fmt::format("illegal {} trim for {} methods", to_string(kind), methods)); };
    if (kind == TrimKind::Flexible) {
        if (std::abs(n_var) > M - 1 || std::abs(n_es) > M - 1) throw bad();
        return;
    }
    if (n < 0 || n > M - 1) throw bad();
    if (kind == TrimKind::Symmetric && n > 0 && 2 * n > M - 2) throw bad();
}

TrimRanges trim_ranges(const TrimSpec& spec, std::size_t methods) {
    spec.validate(methods);
    const std::size_t M = methods;
    const auto n = static_cast<std::size_t>(std::max(spec.n, 0));
    auto signed_range = [M](int k, std::size_t& lo, std::size_t& hi) {
        lo = k >= 0 ? static_cast<std::size_t>(k) : 0;
        hi = k >= 0 ? M : M - static_cast<std::size_t>(-k);
    };
    TrimRanges r{0, M, 0, M};
    switch (spec.kind) {
        case TrimKind::Symmetric: r = {n, M - n, n, M - n}; break;
        case TrimKind::Exterior: r = {0, M - n, n, M}; break;
        case TrimKind::Interior: r = {n, M, 0, M - n}; break;
        case TrimKind::Lower: r = {n, M, n, M}; break;
        case TrimKind::Higher: r = {0, M - n, 0, M - n}; break;
        case TrimKind::Flexible:
            signed_range(spec.n_var, r.var_lo, r.var_hi);
            signed_range(spec.n_es, r.es_lo, r.es_hi);
            break;
    }
    return r;
}

TrimOutcome trimmed_combine_detail(std::span<const ForecastPair> column, const TrimSpec& spec) {
    require_nonempty(column);
    const auto r = trim_ranges(spec, column.size());
    std::vector<double> v, e;
    sorted_components(column, v, e);
    TrimOutcome out;
    out.pair = {range_mean(v, r.var_lo, r.var_hi), range_mean(e, r.es_lo, r.es_hi)};
    if (out.pair.es > out.pair.var) {
        out.pair.es = out.pair.var;
        out.clamped = true;
    }
    return out;
}

ForecastPair trimmed_combine(std::span<const ForecastPair> column, const TrimSpec& spec) {
    return trimmed_combine_detail(column, spec).pair;
}

std::vector<TrimSpec> trim_candidates(TrimKind kind, std::size_t methods) {
    const int M = static_cast<int>(methods);
    std::vector<TrimSpec> out;
    if (kind == TrimKind::Flexible) {
        // Magnitude-major order; the negative value precedes the positive one.
        auto signed_values = [M] {
            std::vector<int> vals{0};
            for (int k = 1; k <= M - 1; ++k) {
                vals.push_back(-k);
                vals.push_back(k);
            }
            return vals;
        }();
        for (int a : signed_values) {
            for (int b : signed_values) out.push_back(TrimSpec::flexible(a, b));
        }
        return out;
    }
    const int top = kind == TrimKind::Symmetric ? std::max(0, (M - 2) / 2) : M - 1;
    for (int n = 0; n <= top; ++n) out.push_back(TrimSpec::fixed(kind, n));
    return out;
}

TrimSpec optimize_trim(TrimKind kind, const ForecastPool& train, std::span<const double> returns,
                       const ScoreSpec& spec) {
    const std::size_t T = train.num_origins(), M = train.num_methods();
    if (returns.size() != T) throw std::invalid_argument("optimize_trim: returns not aligned");
    if (T == 0 || M == 0) throw std::invalid_argument("optimize_trim: empty training pool");

    // Prefix sums of the sorted VaRs and ESs per day.
    std::vector<double> pv(T * (M + 1)), pe(T * (M + 1));
    std::vector<double> v, e;
    for (std::size_t t = 0; t < T; ++t) {
        sorted_components(train.column(t), v, e);
        double* a = &pv[t * (M + 1)];
        double* b = &pe[t * (M + 1)];
        a[0] = b[0] = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            a[m + 1] = a[m] + v[m];
            b[m + 1] = b[m] + e[m];
        }
    }

    const auto candidates = trim_candidates(kind, M);
    std::vector<double> totals(candidates.size(), kInf);
    parallel_for(candidates.size(), 0, [&](std::size_t c) {
        const auto r = trim_ranges(candidates[c], M);
        const double nv = static_cast<double>(r.var_hi - r.var_lo), ne = static_cast<double>(r.es_hi - r.es_lo);
        double total = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double* a = &pv[t * (M + 1)];
            const double* b = &pe[t * (M + 1)];
            const double var = (a[r.var_hi] - a[r.var_lo]) / nv;
            const double es = (b[r.es_hi] - b[r.es_lo]) / ne;
            if (es > var) return;
            total += score_or_inf(spec, var, es, returns[t]);
            if (!std::isfinite(total)) return;
        }
        totals[c] = total;
    });

    std::size_t best = candidates.size();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (best == candidates.size() ? std::isfinite(totals[c]) : improves(totals[c], totals[best])) best = c;
    }
    if (best == candidates.size()) {
        spdlog::warn("{} trimmed mean: every candidate crosses or fails in-sample; using no trimming",
                     to_string(kind));
        return kind == TrimKind::Flexible ? TrimSpec::flexible(0, 0) : TrimSpec::fixed(kind, 0);
    }
    return candidates[best];
}

}  // namespace varescomb

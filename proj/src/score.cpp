#include "varescomb/score.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace varescomb {

namespace {

constexpr double kDomainGuard = -1e-12;

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_inputs(const ScoreSpec& spec, double var, double es, double r) {
    if (!std::isfinite(var) || !std::isfinite(es) || !std::isfinite(r)) {
        throw std::invalid_argument(fmt::format("non-finite score input var={} es={} r={}", var, es, r));
    }
    if ((spec.variant == ScoreVariant::AL || spec.variant == ScoreVariant::NZ) && es >= kDomainGuard) {
        throw std::domain_error(fmt::format("{} score needs es < 0, got {}", to_string(spec.variant), es));
    }
}

}  // namespace

std::string to_string(ScoreVariant v) {
    switch (v) {
        case ScoreVariant::QS: return "QS";
        case ScoreVariant::AL: return "AL";
        case ScoreVariant::NZ: return "NZ";
        case ScoreVariant::FZG: return "FZG";
        case ScoreVariant::AS: return "AS";
    }
    return "?";
}

ScoreVariant parse_score_variant(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto v : {ScoreVariant::QS, ScoreVariant::AL, ScoreVariant::NZ, ScoreVariant::FZG, ScoreVariant::AS}) {
        if (to_string(v) == upper) return v;
    }
    throw ConfigError(fmt::format("unknown score variant '{}'", name));
}

ScoreSpec::ScoreSpec(ScoreVariant v, Alpha a, double w_as) : variant(v), w(w_as), alpha(a) {
    if (!(w > 0.0)) throw std::invalid_argument("score W constant must be positive");
}

double joint_score(const ScoreSpec& spec, double var, double es, double r) {
    check_inputs(spec, var, es, r);
    const double a = spec.alpha.value();
    const bool hit = r <= var;
    const double ind = hit ? 1.0 : 0.0;
    const double tail = es - var + (hit ? (var - r) / a : 0.0);

    switch (spec.variant) {
        case ScoreVariant::QS:
            return (ind - a) * var - ind * r + a * r;
        case ScoreVariant::AL:
            return -tail / es + std::log(-es) + 1.0 - std::log(1.0 - a);
        case ScoreVariant::NZ: {
            const double root = std::sqrt(-es);
            return 0.5 * tail / root + root;
        }
        case ScoreVariant::FZG:
            return (ind - a) * var - ind * r + logistic(es) * tail - softplus(es) + std::log(2.0);
        case ScoreVariant::AS: {
            const double hw = 0.5 * spec.w;
            return -(ind - a) * hw * var * var + ind * hw * r * r + a * es * tail - 0.5 * a * es * es;
        }
    }
    return 0.0;
}

ScoreGradient joint_score_grad(const ScoreSpec& spec, double var, double es, double r) {
    check_inputs(spec, var, es, r);
    const double a = spec.alpha.value();
    const bool hit = r <= var;
    const double ind = hit ? 1.0 : 0.0;
    const double tail = es - var + (hit ? (var - r) / a : 0.0);
    const double g2_factor = ind / a - 1.0;

    ScoreGradient g;
    switch (spec.variant) {
        case ScoreVariant::QS:
            g.value = (ind - a) * var - ind * r + a * r;
            g.d_var = ind - a;
            g.d_es = 0.0;
            break;
        case ScoreVariant::AL: {
            const double g2 = -1.0 / es;
            g.value = g2 * tail + std::log(-es) + 1.0 - std::log(1.0 - a);
            g.d_var = g2 * g2_factor;
            g.d_es = tail / (es * es);
            break;
        }
        case ScoreVariant::NZ: {
            const double root = std::sqrt(-es);
            const double g2 = 0.5 / root;
            g.value = g2 * tail + root;
            g.d_var = g2 * g2_factor;
            g.d_es = 0.25 * tail / (root * root * root);
            break;
        }
        case ScoreVariant::FZG: {
            const double g2 = logistic(es);
            g.value = (ind - a) * var - ind * r + g2 * tail - softplus(es) + std::log(2.0);
            g.d_var = (ind - a) + g2 * g2_factor;
            g.d_es = g2 * (1.0 - g2) * tail;
            break;
        }
        case ScoreVariant::AS: {
            const double hw = 0.5 * spec.w;
            g.value = -(ind - a) * hw * var * var + ind * hw * r * r + a * es * tail - 0.5 * a * es * es;
            g.d_var = -(ind - a) * spec.w * var + a * es * g2_factor;
            g.d_es = a * tail;
            break;
        }
    }
    return g;
}

double average_score(const ScoreSpec& spec, std::span<const ForecastPair> forecasts, std::span<const double> returns) {
    if (forecasts.size() != returns.size()) {
        throw std::invalid_argument(
            fmt::format("average_score: {} forecasts vs {} returns", forecasts.size(), returns.size()));
    }
    if (forecasts.empty()) throw std::invalid_argument("average_score: empty span");
    double sum = 0.0;
    for (std::size_t t = 0; t < forecasts.size(); ++t) sum += joint_score(spec, forecasts[t].var, forecasts[t].es, returns[t]);
    return sum / static_cast<double>(forecasts.size());
}

ScoreMatrix score_matrix(const ScoreSpec& spec, const ForecastPool& pool, std::span<const double> returns) {
    if (returns.size() != pool.num_origins()) {
        throw DataError(fmt::format("score_matrix: pool has {} dates but {} returns supplied", pool.num_origins(),
                                    returns.size()));
    }
    ScoreMatrix out{pool.num_methods(), pool.num_origins(), {}};
    out.values.resize(out.methods * out.days);
    for (std::size_t t = 0; t < out.days; ++t) {
        const auto col = pool.column(t);
        for (std::size_t m = 0; m < out.methods; ++m) {
            out.values[m * out.days + t] = joint_score(spec, col[m].var, col[m].es, returns[t]);
        }
    }
    return out;
}

void save_score_matrix(const std::filesystem::path& path, const ForecastPool& pool, const ScoreMatrix& scores) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << "method_id,date,score\n";
    for (std::size_t m = 0; m < scores.methods; ++m) {
        for (std::size_t t = 0; t < scores.days; ++t) {
            out << pool.method_ids()[m] << ',' << format_date(pool.origins()[t]) << ',' << format_real(scores(m, t))
                << '\n';
        }
    }
}

}  // namespace varescomb

#include "varescomb/combine_meta.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "varescomb/optimize.hpp"

namespace varescomb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void StcParams::validate() const {
    if (!std::isfinite(beta0) || !std::isfinite(beta1) || !std::isfinite(z_mean)) {
        throw std::invalid_argument("smooth-transition parameters must be finite");
    }
    if (!(z_sd > 0.0) || !std::isfinite(z_sd)) throw std::invalid_argument(fmt::format("z sd must be positive, got {}", z_sd));
}

double stc_weight(const StcParams& params, double z) {
    return logistic(params.beta0 + params.beta1 * params.standardize(z));
}

ForecastPair stc_combine(const StcParams& params, const ForecastPair& first, const ForecastPair& second, double z) {
    const double f = stc_weight(params, z);
    // Blending the ESs equals subtracting the blended spacing from the blended VaR.
    return {f * first.var + (1.0 - f) * second.var, f * first.es + (1.0 - f) * second.es};
}

double transition_variable(std::span<const ForecastPair> column) {
    if (column.empty()) throw std::invalid_argument("transition variable of an empty column");
    double s = 0.0;
    for (const auto& p : column) s += p.var;
    return s / static_cast<double>(column.size());
}

double stc_objective(const StcParams& params, std::span<const ForecastPair> first,
                     std::span<const ForecastPair> second, std::span<const double> transition,
                     std::span<const double> returns, const ScoreSpec& spec) {
    const std::size_t T = returns.size();
    if (first.size() != T || second.size() != T || transition.size() != T) {
        throw std::invalid_argument("smooth-transition inputs must be aligned");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const auto c = stc_combine(params, first[t], second[t], transition[t]);
        try {
            total += joint_score(spec, c.var, c.es, returns[t]);
        } catch (const std::domain_error&) {
            return kInf;
        }
    }
    return total / static_cast<double>(T);
}

StcParams fit_stc(std::span<const ForecastPair> first, std::span<const ForecastPair> second,
                  std::span<const double> transition, std::span<const double> returns, const ScoreSpec& spec) {
    const std::size_t T = returns.size();
    if (T < 100) throw std::invalid_argument(fmt::format("smooth-transition fit needs 100 days, got {}", T));
    StcParams base;
    double mean = 0.0;
    for (double z : transition) mean += z;
    mean /= static_cast<double>(transition.size());
    double ss = 0.0;
    for (double z : transition) ss += (z - mean) * (z - mean);
    const double sd = std::sqrt(ss / static_cast<double>(transition.size() - 1));
    base.z_mean = mean;
    base.z_sd = sd > 0.0 ? sd : 1.0;

    auto objective = [&](std::span<const double> b) {
        StcParams p = base;
        p.beta0 = b[0];
        p.beta1 = b[1];
        return stc_objective(p, first, second, transition, returns, spec);
    };
    const std::vector<std::vector<double>> starts{{0.0, 0.0}, {2.0, 2.0}, {2.0, -2.0}, {-2.0, 2.0}, {-2.0, -2.0}};
    std::vector<double> best_x = starts[0];
    double best = objective(best_x);
    opt::NelderMeadOptions o;
    o.size_tol = 1e-8;
    for (const auto& s : starts) {
        const auto r = opt::nelder_mead(objective, s, o);
        if (std::isfinite(r.value) && (!std::isfinite(best) || r.value < best - 1e-12 * std::abs(best))) {
            best = r.value;
            best_x = r.x;
        }
    }
    if (!std::isfinite(best)) throw NumericalError("smooth-transition fit found no finite objective");
    base.beta0 = best_x[0];
    base.beta1 = best_x[1];
    return base;
}

GrandAverage grand_average(std::span<const std::optional<ForecastPair>> combined) {
    GrandAverage out;
    double var = 0.0, es = 0.0;
    for (const auto& c : combined) {
        if (!c) {
            ++out.excluded;
            continue;
        }
        var += c->var;
        es += c->es;
        ++out.used;
    }
    if (out.used == 0) throw NumericalError("grand average: every combiner failed");
    if (out.excluded > 0) spdlog::debug("grand average over {} combiners, {} excluded", out.used, out.excluded);
    out.pair = {var / static_cast<double>(out.used), es / static_cast<double>(out.used)};
    return out;
}

}  // namespace varescomb

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "varescomb/core.hpp"
#include "varescomb/score.hpp"

namespace varescomb {

struct StcParams {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double z_mean = 0.0;
    double z_sd = 1.0;

    void validate() const;
    double standardize(double z) const { return (z - z_mean) / z_sd; }
};

/// 1 / (1 + exp(-(beta0 + beta1 z_std))).
double stc_weight(const StcParams& params, double z);

/// F = stc_weight(z); var = F var1 + (1 - F) var2 and the spacing blends the
/// same way.
ForecastPair stc_combine(const StcParams& params, const ForecastPair& first, const ForecastPair& second, double z);

/// Average of the method VaRs in one pool column.
double transition_variable(std::span<const ForecastPair> column);

double stc_objective(const StcParams& params, std::span<const ForecastPair> first,
                     std::span<const ForecastPair> second, std::span<const double> transition,
                     std::span<const double> returns, const ScoreSpec& spec);

/// Nelder-Mead from (0, 0) and (+-2, +-2); the transition variable is
/// standardized by its training mean and sd. Earlier starts win ties.
StcParams fit_stc(std::span<const ForecastPair> first, std::span<const ForecastPair> second,
                  std::span<const double> transition, std::span<const double> returns, const ScoreSpec& spec);

struct GrandAverage {
    ForecastPair pair;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

/// Componentwise mean of the combiners that produced a forecast. Throws
/// NumericalError when none did.
GrandAverage grand_average(std::span<const std::optional<ForecastPair>> combined);

}  // namespace varescomb

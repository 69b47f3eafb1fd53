#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "varescomb/core.hpp"
#include "varescomb/score.hpp"

namespace varescomb {

/// Nonnegative weights summing to one.
struct WeightVector {
    std::vector<double> w;

    static WeightVector equal(std::size_t methods);
    /// Throws std::invalid_argument unless every weight is in [0, 1] and the
    /// sum is within 1e-10 of one.
    void validate() const;
    std::size_t size() const noexcept { return w.size(); }
};

// ---------------------------------------------------------------- relative score

struct RelScoreConfig {
    double temperature = 0.0;

    void validate() const;
};

/// Sum of each method's score over the training columns. Days on which a
/// method cannot be scored make its sum +inf.
std::vector<double> summed_scores(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec);

/// Softmax of -temperature * summed score. Temperature zero gives exactly 1/M.
WeightVector relative_score_weights(const RelScoreConfig& cfg, std::span<const double> summed);

/// Weighted mean of the VaRs and of the ESs.
ForecastPair relative_score_combine(const WeightVector& weights, std::span<const ForecastPair> column);

/// Componentwise weighted median: the smallest value whose ascending
/// cumulative weight reaches 0.5.
ForecastPair weighted_median_combine(const WeightVector& weights, std::span<const ForecastPair> column);

enum class RelScoreAggregate { Mean, Median };

inline constexpr int kTemperatureGridPoints = 25;
inline constexpr double kTemperatureLo = 1e-4;
inline constexpr double kTemperatureHi = 1e2;

/// In-sample average score of the relative-score forecasts at `temperature`.
double relative_score_objective(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                                double temperature, RelScoreAggregate aggregate = RelScoreAggregate::Mean);

/// Temperature from {0} and 25 log-spaced points on [1e-4, 1e2], refined by
/// Brent's method between the neighbours of the best grid point.
RelScoreConfig optimize_temperature(const ForecastPool& train, std::span<const double> returns,
                                    const ScoreSpec& spec, RelScoreAggregate aggregate = RelScoreAggregate::Mean);

// ---------------------------------------------------------------- minimum score

/// Spacing: var = sum w1 var_m, es = var - sum w2 (var_m - es_m).
/// Ratio:   var = sum w1 var_m, es = var * sum w2 (es_m / var_m).
enum class MinScoreMode { Spacing, Ratio };

struct MinScoreFit {
    MinScoreMode mode = MinScoreMode::Spacing;
    WeightVector w_var;
    WeightVector w_second;  // spacing or ratio weights
    double objective = 0.0;            // in-sample average score
    double penalized_objective = 0.0;  // objective plus ridge terms
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

ForecastPair min_score_combine(const MinScoreFit& fit, std::span<const ForecastPair> column);

/// In-sample average score of min_score_combine with the given weights.
double min_score_objective(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                           MinScoreMode mode, const WeightVector& w_var, const WeightVector& w_second);

struct MinScoreOptions {
    int starts = 10;
    std::uint64_t seed = 20240601;
    unsigned threads = 0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

inline constexpr std::size_t kMinTrainingDays = 100;

/// Minimizes the in-sample average score (plus lambda1 |w1 - 1/M|^2 +
/// lambda2 |w2 - 1/M|^2) over softmax-coded weights. Starts: equal weights,
/// the relative-score weights, then seeded perturbations. The result is never
/// worse than equal weights or any one-hot pair; earlier candidates win ties.
MinScoreFit fit_minimum_score(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                              MinScoreMode mode, const MinScoreOptions& options = {});

struct RidgeConfig {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double holdout_fraction = 0.25;

    void validate() const;
};

/// {0} and 13 half-decade points from 1e-4 to 1e2.
std::vector<double> default_penalty_grid();

/// Each grid pair is fitted on the first (1 - holdout) share of the window and
/// scored, without penalty, on the rest; the best pair is refitted on the
/// full window.
MinScoreFit fit_minimum_score_ridge(const ForecastPool& train, std::span<const double> returns, const ScoreSpec& spec,
                                    const RidgeConfig& cfg, std::span<const double> grid,
                                    const MinScoreOptions& options = {});

/// Writes `date,<method ids...>` with one weight row per date.
void save_weight_path(const std::filesystem::path& path, const std::vector<std::string>& method_ids,
                      std::span<const Date> dates, std::span<const WeightVector> weights);

}  // namespace varescomb

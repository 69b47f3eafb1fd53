#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varescomb/core.hpp"
#include "varescomb/dist.hpp"
#include "varescomb/score.hpp"

namespace varescomb {

// ---------------------------------------------------------------- combiners

/// Combiner identifiers in reporting order.
inline constexpr std::array<std::string_view, 19> kCombinerIds{
    "simple_average",  "median",         "mode",
    "trim_symmetric",  "trim_exterior",  "trim_interior",
    "trim_lower",      "trim_higher",    "trim_flexible",
    "prob_average",    "depth_halfspace", "depth_simplicial",
    "relative_score",  "relative_score_median", "min_score",
    "min_score_ratio", "min_score_ridge", "stc",
    "grand_average"};

inline constexpr std::string_view kDynamicSelectionId = "dynamic_selection";

/// Row label used in the text tables.
std::string combiner_display_name(std::string_view id);

/// Shared native-CDF matrix, native[t][m] aligned with the pool columns.
using NativeMatrix = std::vector<std::vector<std::optional<ParametricDist>>>;

struct CombinerContext {
    ScoreSpec fit_spec{ScoreVariant::AL, Alpha(0.025)};
    /// Candidate grid for the skew-t fallback; required by prob_average.
    std::shared_ptr<const CandidateGrid> grid;
    bool strict_step_rule = false;
    std::uint64_t seed = 20240601;
};

class Combiner {
public:
    virtual ~Combiner() = default;

    /// Estimates parameters on the training columns and their returns.
    virtual void fit(const ForecastPool& train, std::span<const double> returns) = 0;

    /// `native` is empty or holds one entry per method.
    virtual ForecastPair forecast(std::span<const ForecastPair> column,
                                  std::span<const std::optional<ParametricDist>> native) const = 0;

    /// Short description of the fitted parameters.
    virtual std::string parameters() const { return {}; }
};

/// Every id in kCombinerIds except grand_average. Throws ConfigError for
/// unknown ids.
std::unique_ptr<Combiner> make_combiner(std::string_view id, const CombinerContext& ctx);

// ---------------------------------------------------------------- rolling driver

struct BacktestConfig {
    std::size_t est_window = 1800;
    std::size_t eval_span = 1800;
    Alpha alpha{0.025};
    std::vector<ScoreSpec> score_specs;
    std::string benchmark_method = "HS-250";
    std::size_t refit_every = 1;
    unsigned threads = 0;
    bool strict_step_rule = false;
    std::uint64_t seed = 20240601;

    void validate(std::size_t pool_columns) const;
};

struct ForecastPath {
    std::string id;
    std::vector<std::optional<ForecastPair>> pairs;  // one slot per evaluated day
    std::vector<std::string> errors;                 // empty string where a forecast exists
    std::vector<std::string> parameters;             // fitted parameters in force each day

    std::size_t failures() const;
};

struct BacktestReport {
    std::vector<Date> dates;
    std::vector<double> returns;
    std::vector<ForecastPath> paths;  // dynamic selection first, then combiners

    const ForecastPath& path(std::string_view id) const;
};

/// Column t of the evaluation span (the last eval_span pool columns) is
/// forecast by combiners fitted on columns [t - est_window, t). `returns`
/// must be aligned with the pool columns; `native` may be empty.
BacktestReport run_backtest(const BacktestConfig& cfg, const ForecastPool& pool, std::span<const double> returns,
                            const NativeMatrix& native, std::span<const std::string> combiners,
                            std::shared_ptr<const CandidateGrid> grid = nullptr);

struct SelectionPath {
    std::vector<std::size_t> chosen;  // method index per evaluated day
    ForecastPath path;
};

/// At each evaluated column, the method with the lowest average score over
/// the preceding est_window columns; ties go to the lowest index.
SelectionPath dynamic_selection(const BacktestConfig& cfg, const ForecastPool& pool, std::span<const double> returns,
                                const ScoreSpec& spec);

// ---------------------------------------------------------------- calibration tests

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject_at_5pct = false;
};

/// 1{r <= var}.
std::vector<bool> hit_sequence(std::span<const double> returns, std::span<const double> var);

/// Unconditional coverage likelihood ratio against chi-squared(1).
TestResult uc_test(const std::vector<bool>& hits, Alpha alpha);

/// Unconditional coverage plus first-order Markov independence, chi-squared(2).
TestResult cc_test(const std::vector<bool>& hits, Alpha alpha);

/// Wald test that hit_t - alpha is unpredictable from a constant, `lags`
/// lagged values of hit - alpha and the VaR forecast. Regressors that are
/// constant over the sample are dropped; the degrees of freedom equal the
/// number of regressors kept. Throws NumericalError on a singular design.
TestResult dq_test(const std::vector<bool>& hits, std::span<const double> var, Alpha alpha, int lags = 4);

struct EsTestResult {
    std::size_t exceedances = 0;
    std::optional<TestResult> result;  // empty when exceedances < kMinEsExceedances
};

inline constexpr std::size_t kMinEsExceedances = 5;

/// Residuals u = (r - es) / var on days with r <= var; two-sided bootstrap
/// test of zero mean using the studentized mean of the centred residuals.
EsTestResult es_bootstrap_test(std::span<const double> returns, std::span<const double> var,
                               std::span<const double> es, int n_boot = 10000, std::uint64_t seed = 20240601);

// ---------------------------------------------------------------- ranking

/// 100 (1 - geometric mean over indices of method / benchmark average score).
double skill_score(std::span<const double> method_avg, std::span<const double> benchmark_avg);

/// scores[index][method]; rank 1 is the lowest score, ties share the mean
/// rank. Returns the mean rank of each method over indices.
std::vector<double> average_ranks(const std::vector<std::vector<double>>& scores);

struct McsElimination {
    std::size_t method = 0;
    double p_value = 0.0;  // monotonized
};

struct McsResult {
    std::vector<std::size_t> surviving;
    std::vector<McsElimination> eliminated;  // in elimination order
};

struct McsOptions {
    double confidence = 0.75;
    int n_boot = 5000;
    std::size_t block_len = 21;
    std::uint64_t seed = 20240601;
};

/// Model confidence set with the T_max statistic and a circular moving-block
/// bootstrap. `losses[m]` holds method m's daily losses.
McsResult mcs(const std::vector<std::vector<double>>& losses, const McsOptions& options = {});

// ---------------------------------------------------------------- evaluation

struct MethodEvaluation {
    std::string id;
    std::size_t days = 0;
    double hit_rate = 0.0;
    std::vector<double> avg_scores;  // one per score spec
    TestResult uc, cc;
    std::optional<TestResult> dq;
    EsTestResult es;
    std::vector<bool> in_mcs;  // one per score spec
};

struct IndexEvaluation {
    std::string index;
    std::vector<ScoreSpec> specs;
    std::vector<double> benchmark_avg;  // one per score spec
    std::vector<MethodEvaluation> methods;
    std::size_t common_days = 0;
};

struct EvaluationOptions {
    McsOptions mcs;
    int es_boot = 10000;
    std::uint64_t seed = 20240601;
};

/// Scores every path on the days where all paths and the benchmark have a
/// forecast.
IndexEvaluation evaluate_index(std::string index, std::span<const double> returns,
                               const std::vector<ForecastPath>& paths, const ForecastPath& benchmark,
                               const std::vector<ScoreSpec>& specs, Alpha alpha, const EvaluationOptions& options = {});

/// Per-method skill (geometric mean over indices) and mean rank per score.
struct Leaderboard {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> skill;  // [method][spec]
    std::vector<std::vector<double>> rank;   // [method][spec]
    std::vector<std::vector<int>> mcs_count;  // [method][spec]
    std::vector<std::array<int, 4>> rejections;  // UC, CC, DQ, ES counts at 5%
};

Leaderboard leaderboard(const std::vector<IndexEvaluation>& indices);

// ---------------------------------------------------------------- files

/// `date,return,var,es,error,parameters`.
void save_forecast_path(const std::filesystem::path& path, std::span<const Date> dates,
                        std::span<const double> returns, const ForecastPath& forecasts);

struct LoadedPath {
    std::vector<Date> dates;
    std::vector<double> returns;
    ForecastPath path;
};
LoadedPath load_forecast_path(const std::filesystem::path& path, std::string id);

void save_summary_csv(const std::filesystem::path& path, const std::vector<IndexEvaluation>& indices);

/// Calibration, skill/rank and MCS tables as aligned plain text.
std::string format_tables(const std::vector<IndexEvaluation>& indices, const Leaderboard& board);

}  // namespace varescomb

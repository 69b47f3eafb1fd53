#include <fmt/format.h>

#include "varescomb/backtest.hpp"
#include "varescomb/combine_central.hpp"
#include "varescomb/combine_interval.hpp"
#include "varescomb/combine_meta.hpp"
#include "varescomb/combine_weighted.hpp"

namespace varescomb {

namespace {

class SimpleAverageCombiner final : public Combiner {
public:
    void fit(const ForecastPool&, std::span<const double>) override {}
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return simple_average(column);
    }
};

class MedianCombiner final : public Combiner {
public:
    void fit(const ForecastPool&, std::span<const double>) override {}
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return median_combine(column);
    }
};

class ModeCombiner final : public Combiner {
public:
    explicit ModeCombiner(ScoreSpec spec) : spec_(spec) {}
    void fit(const ForecastPool& train, std::span<const double> returns) override {
        mult_ = select_kde_multipliers(train, returns, spec_);
    }
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return mode_combine(column, kde_spec_for(column, mult_));
    }
    std::string parameters() const override { return fmt::format("h_var={};h_spacing={}", mult_.var, mult_.spacing); }

private:
    ScoreSpec spec_;
    KdeMultipliers mult_;
};

class TrimCombiner final : public Combiner {
public:
    TrimCombiner(TrimKind kind, ScoreSpec spec) : kind_(kind), spec_(spec) {}
    void fit(const ForecastPool& train, std::span<const double> returns) override {
        trim_ = optimize_trim(kind_, train, returns, spec_);
    }
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return trimmed_combine(column, trim_);
    }
    std::string parameters() const override {
        if (kind_ == TrimKind::Flexible) return fmt::format("n_var={};n_es={}", trim_.n_var, trim_.n_es);
        return fmt::format("n={}", trim_.n);
    }

private:
    TrimKind kind_;
    ScoreSpec spec_;
    TrimSpec trim_;
};

class ProbAverageCombiner final : public Combiner {
public:
    ProbAverageCombiner(std::shared_ptr<const CandidateGrid> grid, Alpha alpha, bool strict)
        : grid_(std::move(grid)), alpha_(alpha), strict_(strict) {
        if (!grid_) throw ConfigError("prob_average needs a candidate grid");
    }
    void fit(const ForecastPool&, std::span<const double>) override {}
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>> native) const override {
        std::vector<CdfCurve> curves;
        curves.reserve(column.size());
        for (std::size_t m = 0; m < column.size(); ++m) {
            const auto nat = native.empty() ? std::nullopt : native[m];
            curves.push_back(method_cdf(column[m], nat, *grid_));
        }
        return probability_average(curves, alpha_, strict_);
    }

private:
    std::shared_ptr<const CandidateGrid> grid_;
    Alpha alpha_;
    bool strict_;
};

class DepthCombiner final : public Combiner {
public:
    explicit DepthCombiner(DepthNotion notion) : notion_(notion) {}
    void fit(const ForecastPool&, std::span<const double>) override {}
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return deepest_combine(column, notion_);
    }

private:
    DepthNotion notion_;
};

class RelativeScoreCombiner final : public Combiner {
public:
    RelativeScoreCombiner(ScoreSpec spec, RelScoreAggregate aggregate) : spec_(spec), aggregate_(aggregate) {}
    void fit(const ForecastPool& train, std::span<const double> returns) override {
        cfg_ = optimize_temperature(train, returns, spec_, aggregate_);
        weights_ = relative_score_weights(cfg_, summed_scores(train, returns, spec_));
    }
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return aggregate_ == RelScoreAggregate::Mean ? relative_score_combine(weights_, column)
                                                     : weighted_median_combine(weights_, column);
    }
    std::string parameters() const override { return fmt::format("lambda={}", cfg_.temperature); }
    const WeightVector& weights() const { return weights_; }

private:
    ScoreSpec spec_;
    RelScoreAggregate aggregate_;
    RelScoreConfig cfg_;
    WeightVector weights_;
};

class MinScoreCombiner final : public Combiner {
public:
    MinScoreCombiner(ScoreSpec spec, MinScoreMode mode, bool ridge, std::uint64_t seed)
        : spec_(spec), mode_(mode), ridge_(ridge) {
        options_.seed = seed;
        options_.threads = 1;
    }
    void fit(const ForecastPool& train, std::span<const double> returns) override {
        if (ridge_) {
            const auto grid = default_penalty_grid();
            fit_ = fit_minimum_score_ridge(train, returns, spec_, RidgeConfig{}, grid, options_);
        } else {
            fit_ = fit_minimum_score(train, returns, spec_, mode_, options_);
        }
    }
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return min_score_combine(fit_, column);
    }
    std::string parameters() const override {
        if (ridge_) return fmt::format("lambda1={};lambda2={}", fit_.lambda1, fit_.lambda2);
        return fmt::format("objective={}", fit_.objective);
    }

private:
    ScoreSpec spec_;
    MinScoreMode mode_;
    bool ridge_;
    MinScoreOptions options_;
    MinScoreFit fit_;
};

class StcCombiner final : public Combiner {
public:
    explicit StcCombiner(ScoreSpec spec) : spec_(spec), relative_(spec, RelScoreAggregate::Mean) {}
    void fit(const ForecastPool& train, std::span<const double> returns) override {
        relative_.fit(train, returns);
        const std::size_t T = train.num_origins();
        std::vector<ForecastPair> first(T), second(T);
        std::vector<double> z(T);
        for (std::size_t t = 0; t < T; ++t) {
            const auto col = train.column(t);
            first[t] = simple_average(col);
            second[t] = relative_score_combine(relative_.weights(), col);
            z[t] = transition_variable(col);
        }
        params_ = fit_stc(first, second, z, returns, spec_);
    }
    ForecastPair forecast(std::span<const ForecastPair> column,
                          std::span<const std::optional<ParametricDist>>) const override {
        return stc_combine(params_, simple_average(column), relative_score_combine(relative_.weights(), column),
                           transition_variable(column));
    }
    std::string parameters() const override {
        return fmt::format("beta0={};beta1={};{}", params_.beta0, params_.beta1, relative_.parameters());
    }

private:
    ScoreSpec spec_;
    RelativeScoreCombiner relative_;
    StcParams params_;
};

}  // namespace

std::string combiner_display_name(std::string_view id) {
    static const std::array<std::string_view, 19> names{"Simple average",
                                                        "Median",
                                                        "Mode",
                                                        "Symmetric trimmed mean",
                                                        "Exterior trimmed mean",
                                                        "Interior trimmed mean",
                                                        "Lower trimmed mean",
                                                        "Higher trimmed mean",
                                                        "Flexible trimmed mean",
                                                        "Probability average",
                                                        "Halfspace deepest",
                                                        "Simplicial deepest",
                                                        "Relative score",
                                                        "Relative score with weighted median",
                                                        "Minimum score",
                                                        "Minimum score with ratio",
                                                        "Minimum score with regularisation",
                                                        "Smooth transition combining",
                                                        "Simple average of all combinations"};
    if (id == kDynamicSelectionId) return "Dynamic selection";
    for (std::size_t i = 0; i < kCombinerIds.size(); ++i) {
        if (kCombinerIds[i] == id) return std::string(names[i]);
    }
    return std::string(id);
}

std::unique_ptr<Combiner> make_combiner(std::string_view id, const CombinerContext& ctx) {
    const auto& spec = ctx.fit_spec;
    if (id == "simple_average") return std::make_unique<SimpleAverageCombiner>();
    if (id == "median") return std::make_unique<MedianCombiner>();
    if (id == "mode") return std::make_unique<ModeCombiner>(spec);
    if (id == "trim_symmetric") return std::make_unique<TrimCombiner>(TrimKind::Symmetric, spec);
    if (id == "trim_exterior") return std::make_unique<TrimCombiner>(TrimKind::Exterior, spec);
    if (id == "trim_interior") return std::make_unique<TrimCombiner>(TrimKind::Interior, spec);
    if (id == "trim_lower") return std::make_unique<TrimCombiner>(TrimKind::Lower, spec);
    if (id == "trim_higher") return std::make_unique<TrimCombiner>(TrimKind::Higher, spec);
    if (id == "trim_flexible") return std::make_unique<TrimCombiner>(TrimKind::Flexible, spec);
    if (id == "prob_average") return std::make_unique<ProbAverageCombiner>(ctx.grid, spec.alpha, ctx.strict_step_rule);
    if (id == "depth_halfspace") return std::make_unique<DepthCombiner>(DepthNotion::Halfspace);
    if (id == "depth_simplicial") return std::make_unique<DepthCombiner>(DepthNotion::Simplicial);
    if (id == "relative_score") return std::make_unique<RelativeScoreCombiner>(spec, RelScoreAggregate::Mean);
    if (id == "relative_score_median") return std::make_unique<RelativeScoreCombiner>(spec, RelScoreAggregate::Median);
    if (id == "min_score") return std::make_unique<MinScoreCombiner>(spec, MinScoreMode::Spacing, false, ctx.seed);
    if (id == "min_score_ratio") return std::make_unique<MinScoreCombiner>(spec, MinScoreMode::Ratio, false, ctx.seed);
    if (id == "min_score_ridge") return std::make_unique<MinScoreCombiner>(spec, MinScoreMode::Spacing, true, ctx.seed);
    if (id == "stc") return std::make_unique<StcCombiner>(spec);
    throw ConfigError(fmt::format("unknown combiner '{}'", id));
}

}  // namespace varescomb

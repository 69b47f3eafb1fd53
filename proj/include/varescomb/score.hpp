#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varescomb/core.hpp"

namespace varescomb {

enum class ScoreVariant { QS, AL, NZ, FZG, AS };

std::string to_string(ScoreVariant v);
/// Accepts the short names (case-insensitive). Throws ConfigError.
ScoreVariant parse_score_variant(std::string_view name);

struct ScoreSpec {
    ScoreVariant variant = ScoreVariant::AL;
    double w = 4.0;  // AS variant only
    Alpha alpha{0.025};

    ScoreSpec() = default;
    ScoreSpec(ScoreVariant v, Alpha a, double w_as = 4.0);
};

/// S(var, es, r) = (I - a) G1(var) - I G1(r) + G2(es) (es - var + I (var - r) / a) - Z2(es) + A(r),
/// I = 1{r <= var}.
double joint_score(const ScoreSpec& spec, double var, double es, double r);

struct ScoreGradient {
    double value = 0.0;
    double d_var = 0.0;
    double d_es = 0.0;
};

/// Score and its partial derivatives in (var, es), away from the kink r = var.
ScoreGradient joint_score_grad(const ScoreSpec& spec, double var, double es, double r);

double average_score(const ScoreSpec& spec, std::span<const ForecastPair> forecasts, std::span<const double> returns);

/// Method-major M x T grid: values[m * T + t].
struct ScoreMatrix {
    std::size_t methods = 0;
    std::size_t days = 0;
    std::vector<double> values;

    double operator()(std::size_t m, std::size_t t) const { return values[m * days + t]; }
    std::span<const double> row(std::size_t m) const { return {values.data() + m * days, days}; }
};

/// `returns` must already be aligned with the pool columns.
ScoreMatrix score_matrix(const ScoreSpec& spec, const ForecastPool& pool, std::span<const double> returns);

/// Writes `method_id,date,score`.
void save_score_matrix(const std::filesystem::path& path, const ForecastPool& pool, const ScoreMatrix& scores);

}  // namespace varescomb

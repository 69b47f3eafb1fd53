#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varescomb/core.hpp"
#include "varescomb/dist.hpp"

namespace varescomb {

enum class Family { HS, GaussianWindow, EWMA, GARCH, GJR, CAViaR, CARE };
enum class Driver { Return, Range, RV };
enum class Innovation { Gaussian, T, SkewT };
enum class Tail { Native, EVT, FHS };
enum class CaviarForm { SAV, AS, IG };
enum class EsForm { Multiplicative, Additive };

/// One member of the forecaster pool. Names follow the pattern
/// `GJR-GARCH-Range-skewt-EVT`, `CAViaR-RV-AS-Additive`, `HS-250`.
struct MethodSpec {
    Family family = Family::HS;
    Driver driver = Driver::Return;
    Innovation dist = Innovation::Gaussian;
    Tail tail = Tail::Native;
    CaviarForm form = CaviarForm::SAV;
    EsForm es_form = EsForm::Multiplicative;
    int window = 250;

    std::string name() const;
    static MethodSpec parse(std::string_view name);
    bool needs_range() const noexcept { return driver == Driver::Range; }
    bool needs_rv() const noexcept { return driver == Driver::RV; }
    /// True when the forecast comes with a full parametric CDF.
    bool has_native_cdf() const noexcept;

    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

/// The 90-method cross-product; the longest HS and Gaussian windows equal
/// `est_window`.
std::vector<MethodSpec> standard_method_set(int est_window = 1800);

struct MethodForecast {
    ForecastPair pair;
    std::optional<ParametricDist> native;
};

// ---------------------------------------------------------------- simple families

/// Empirical alpha-quantile (linear interpolation between order statistics)
/// and mean of the returns strictly below it; es = var when none are below.
ForecastPair hs_forecast(std::span<const double> window, double alpha);
ForecastPair gaussian_window_forecast(std::span<const double> window, Alpha alpha);
/// v <- 0.94 v + 0.06 r^2 started from the first squared return; returns the
/// next-day variance.
double ewma_variance(std::span<const double> returns, double lambda = 0.94);
ForecastPair ewma_forecast(std::span<const double> returns, Alpha alpha);

// ---------------------------------------------------------------- GARCH / GJR

struct GarchParams {
    double omega = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    double nu = 0.0;    // t / skew-t only
    double skew = 0.0;  // skew-t only
};

struct GarchFit {
    GarchParams params;
    double loglik = 0.0;
    double kappa = 1.0;  // mean(driver) / mean(r^2) over the window
    bool converged = false;
};

/// Zero-mean GARCH(1,1) or GJR(1,1) with driver x_t:
/// s2_{t+1} = omega + alpha x_t + gamma 1{r_t < 0} r_t^2 + beta s2_t.
struct GarchModel {
    bool gjr = false;
    Driver driver = Driver::Return;
    Innovation dist = Innovation::Gaussian;

    GarchFit fit(const ReturnSeries& window) const;
    /// In-sample conditional sd per day, plus the next-day sd as the last element.
    std::vector<double> sigma_path(const GarchParams& p, const ReturnSeries& window) const;
    double log_likelihood(const GarchParams& p, const ReturnSeries& window) const;
};

/// Tail quantile/ES of the lower tail via a generalized Pareto fit to the
/// largest 10% of the negated standardized residuals.
struct GpdTail {
    double threshold = 0.0;  // u, on the negated scale
    double xi = 0.0;
    double beta = 0.0;
    std::size_t n = 0;
    std::size_t n_exceed = 0;

    /// (VaR, ES) of the standardized residual distribution at level alpha.
    ForecastPair var_es(double alpha) const;
};

GpdTail fit_gpd_tail(std::span<const double> std_residuals, double tail_fraction = 0.10);

MethodForecast garch_forecast(const MethodSpec& spec, const GarchModel& model, const GarchFit& fit,
                              const ReturnSeries& window, Alpha alpha);
MethodForecast garch_fit_forecast(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha);

// ---------------------------------------------------------------- CAViaR / CARE

/// Coefficients are kept in the unconstrained coordinates used by the
/// optimizer (IG coefficients on the log scale). Recursion start values are
/// re-derived from each window, so a fit can be held across origins.
struct QuantileModelFit {
    std::vector<double> beta;   // recursion coefficients
    std::vector<double> gamma;  // ES link (CAViaR only)
    double tau = 0.0;           // expectile level (CARE only)
    double alpha = 0.025;
    double objective = 0.0;
};

struct CaviarPath {
    std::vector<double> var;  // n + 1 entries; last is the next-day forecast
    std::vector<double> es;
};

/// Driver series for the quantile recursion: |r|, R or sqrt(RV) per day.
std::vector<double> quantile_driver(const ReturnSeries& window, Driver driver);

CaviarPath caviar_path(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window);
QuantileModelFit caviar_fit(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha);
MethodForecast caviar_fit_forecast(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha);

/// Sample tau-expectile of x.
double sample_expectile(std::span<const double> x, double tau);
/// Expectile recursion at level fit.tau with the same three forms, started
/// from the sample expectile of the window; n + 1 entries.
std::vector<double> care_path(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window);
/// Asymmetric-least-squares fit at fixed tau. Empty `starts` uses the
/// default moment-based starts.
QuantileModelFit care_fit_at(const MethodSpec& spec, const ReturnSeries& window, double tau,
                             const std::vector<std::vector<double>>& starts = {});
/// Fraction of window days with r_t below the fitted expectile path.
double care_exceedance(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window);
QuantileModelFit care_fit(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha);
double care_es_multiplier(double tau, double alpha);
MethodForecast care_fit_forecast(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha);

// ---------------------------------------------------------------- pool generation

/// Fits `spec` on the window and forecasts the following day.
MethodForecast forecast_method(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha);

struct PoolOptions {
    int est_window = 1800;
    /// Parameters are re-estimated every `refit_every` origins and held in between.
    int refit_every = 1;
    unsigned threads = 0;
};

struct GeneratedPool {
    ForecastPool pool;
    /// native[t][m], present for parametric methods.
    std::vector<std::vector<std::optional<ParametricDist>>> native;
};

/// Column t forecasts day est_window + t of `series` from the est_window days before it.
GeneratedPool generate_pool(const std::vector<MethodSpec>& specs, const ReturnSeries& series, Alpha alpha,
                            const PoolOptions& options);

/// Sidecar `date,method_id,dist,mean,scale,nu,skew` for methods with native CDFs.
void save_native(const std::filesystem::path& path, const GeneratedPool& generated);
std::vector<std::vector<std::optional<ParametricDist>>> load_native(const std::filesystem::path& path,
                                                                    const ForecastPool& pool);
std::filesystem::path native_sidecar_path(const std::filesystem::path& pool_path);

// ---------------------------------------------------------------- synthetic pool

struct DgpConfig {
    double omega = 0.02;
    double alpha = 0.08;
    double beta = 0.90;
    double nu = 6.0;
    /// Per-method VaR bias b_m ~ U(-var_bias, var_bias), spacing bias
    /// c_m ~ U(-spacing_bias, spacing_bias), noise s_m ~ U(noise_min, noise_max).
    double var_bias = 0.15;
    double spacing_bias = 0.25;
    double noise_min = 0.02;
    double noise_max = 0.12;
    std::uint64_t seed = 42;
};

struct SynthResult {
    ForecastPool pool;
    ReturnSeries series;
    std::vector<ForecastPair> truth;  // aligned with series days
    std::vector<double> sigma;
};

/// GARCH-t returns of length T with synthetic range and rv columns. Method m
/// forecasts var = VaR (1 + b_m) exp(s_m e), spacing = D (1 + c_m) exp(s_m h).
/// The pool spans every day of the series.
SynthResult synth_pool(const DgpConfig& cfg, int methods, int days, Alpha alpha);

std::vector<Date> business_days(Date start, std::size_t count);

}  // namespace varescomb

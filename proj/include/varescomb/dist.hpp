#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "varescomb/core.hpp"

namespace varescomb {

ForecastPair gaussian_var_es(double mean, double sd, Alpha alpha);

/// Unit-variance Student-t scaled by `sd`.
ForecastPair student_t_var_es(double sd, double nu, Alpha alpha);

/// Hansen skewed t in standardized form (zero mean, unit variance) times sigma.
struct SkewTParams {
    double sigma = 1.0;
    double nu = 8.0;
    double skew = 0.0;

    void validate() const;
    friend bool operator==(const SkewTParams&, const SkewTParams&) = default;
};

double skewt_pdf(const SkewTParams& p, double x);
double skewt_cdf(const SkewTParams& p, double x);
double skewt_quantile(const SkewTParams& p, double prob);

/// Log density of the standardized form at z; used by likelihood code.
double skewt_log_density(double z, double nu, double skew);

/// VaR is the alpha-quantile; ES is the lower tail mean, evaluated through
/// the partial expectation of the underlying t kernel on each side of the mode.
ForecastPair skewt_var_es(const SkewTParams& p, Alpha alpha);

/// Location-scale distribution with a CDF; what a parametric forecaster exposes.
struct ParametricDist {
    enum class Kind { Gaussian, StudentT, SkewT };
    Kind kind = Kind::Gaussian;
    double mean = 0.0;
    double scale = 1.0;  // standard deviation
    double nu = 0.0;
    double skew = 0.0;

    double cdf(double x) const;
    ForecastPair var_es(Alpha alpha) const;
};

std::string to_string(ParametricDist::Kind kind);
ParametricDist::Kind parse_dist_kind(std::string_view name);

struct GridAxes {
    int n_sigma = 300;
    double sigma_max = 10.0;
    int n_nu = 100;
    double nu_min = 2.0;
    double nu_max = 30.0;
    int n_skew = 200;
};

struct GridCell {
    int i = 0;  // sigma
    int j = 0;  // nu
    int k = 0;  // skew
    friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

/// (sigma, nu, skew) candidates with their (VaR, ES) at level alpha. VaR and ES
/// are linear in sigma, so only the unit-scale pairs per (nu, skew) are
/// computed; `materialize` expands every cell when memory allows.
class CandidateGrid {
public:
    CandidateGrid(Alpha alpha, GridAxes axes = {});

    Alpha alpha() const noexcept { return alpha_; }
    const GridAxes& axes() const noexcept { return axes_; }
    /// Ascending axis values.
    const std::vector<double>& sigmas() const noexcept { return sigmas_; }
    const std::vector<double>& nus() const noexcept { return nus_; }
    const std::vector<double>& skews() const noexcept { return skews_; }

    const ForecastPair& unit(int j, int k) const { return unit_[static_cast<std::size_t>(j) * skews_.size() + k]; }
    ForecastPair pair(const GridCell& c) const;
    SkewTParams params(const GridCell& c) const;

    void materialize();
    bool materialized() const noexcept { return !cells_.empty(); }

    void save(const std::filesystem::path& path) const;
    static CandidateGrid load(const std::filesystem::path& path);

private:
    CandidateGrid(Alpha alpha, GridAxes axes, std::vector<ForecastPair> unit);
    void build_axes();

    Alpha alpha_;
    GridAxes axes_;
    std::vector<double> sigmas_, nus_, skews_;
    std::vector<ForecastPair> unit_;
    std::vector<ForecastPair> cells_;
};

CandidateGrid build_candidate_grid(Alpha alpha, GridAxes axes = {});

/// Loads the cached grid for `alpha` from `cache_dir`, building and saving it
/// when the cache is absent or stale.
CandidateGrid cached_candidate_grid(const std::filesystem::path& cache_dir, Alpha alpha, GridAxes axes = {});

/// Cell minimizing squared distance to `target`; ties go to the smallest
/// (sigma, nu, skew).
GridCell fit_grid_cell(const CandidateGrid& grid, const ForecastPair& target);
SkewTParams fit_skewt_to_var_es(const CandidateGrid& grid, const ForecastPair& target);

}  // namespace varescomb

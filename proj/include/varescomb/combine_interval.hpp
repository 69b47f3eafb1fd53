#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "varescomb/core.hpp"
#include "varescomb/dist.hpp"

namespace varescomb {

// ---------------------------------------------------------------- probability averaging

inline constexpr int kCdfPoints = 1000;
inline constexpr double kCdfLo = -20.0;
inline constexpr double kCdfHi = 20.0;

/// The shared x-grid: kCdfPoints equally spaced values on [kCdfLo, kCdfHi].
const std::vector<double>& cdf_grid();

/// CDF values on cdf_grid().
struct CdfCurve {
    std::vector<double> ps;
};

CdfCurve sample_cdf(const ParametricDist& dist);
CdfCurve sample_cdf(const SkewTParams& params);

/// The native CDF when supplied, otherwise the skew-t fitted to the pair.
CdfCurve method_cdf(const ForecastPair& pair, const std::optional<ParametricDist>& native, const CandidateGrid& grid);

CdfCurve mean_curve(std::span<const CdfCurve> curves);

/// VaR: first grid point where the CDF reaches alpha, linearly interpolated
/// from the previous point (or the raw grid point under `strict_step_rule`).
/// ES: sum of CDF increment times cell midpoint over the cells below VaR,
/// divided by alpha; the cell holding VaR contributes its partial mass.
/// Throws NumericalError when alpha is not reached inside the grid.
ForecastPair curve_var_es(const CdfCurve& curve, Alpha alpha, bool strict_step_rule = false);

ForecastPair probability_average(std::span<const CdfCurve> curves, Alpha alpha, bool strict_step_rule = false);

// ---------------------------------------------------------------- depth

/// Number of points in the least-populated closed halfplane whose boundary
/// passes through p. Depth is this count over the number of points.
std::size_t halfspace_depth_count(std::span<const ForecastPair> points, const ForecastPair& p);
double halfspace_depth(std::span<const ForecastPair> points, const ForecastPair& p);

/// Number of closed triangles, over all triples of points, that contain p.
std::uint64_t simplicial_depth_count(std::span<const ForecastPair> points, const ForecastPair& p);
double simplicial_depth(std::span<const ForecastPair> points, const ForecastPair& p);

enum class DepthNotion { Halfspace, Simplicial };

/// Index of the deepest data point; ties go to the point nearest the
/// componentwise median, then the lowest index.
std::size_t deepest_index(std::span<const ForecastPair> column, DepthNotion notion);
ForecastPair deepest_combine(std::span<const ForecastPair> column, DepthNotion notion);

}  // namespace varescomb

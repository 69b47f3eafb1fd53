#include "varescomb/combine_interval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "varescomb/combine_central.hpp"

namespace varescomb {

const std::vector<double>& cdf_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> x(kCdfPoints);
        const double step = (kCdfHi - kCdfLo) / (kCdfPoints - 1);
        for (int i = 0; i < kCdfPoints; ++i) x[i] = kCdfLo + step * i;
        x.back() = kCdfHi;
        return x;
    }();
    return grid;
}

CdfCurve sample_cdf(const ParametricDist& dist) {
    const auto& xs = cdf_grid();
    CdfCurve c;
    c.ps.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) c.ps[i] = dist.cdf(xs[i]);
    return c;
}

CdfCurve sample_cdf(const SkewTParams& params) {
    const auto& xs = cdf_grid();
    CdfCurve c;
    c.ps.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) c.ps[i] = skewt_cdf(params, xs[i]);
    return c;
}

CdfCurve method_cdf(const ForecastPair& pair, const std::optional<ParametricDist>& native, const CandidateGrid& grid) {
    if (native) return sample_cdf(*native);
    return sample_cdf(fit_skewt_to_var_es(grid, pair));
}

CdfCurve mean_curve(std::span<const CdfCurve> curves) {
    if (curves.empty()) throw std::invalid_argument("mean_curve: no curves");
    CdfCurve out;
    out.ps.assign(cdf_grid().size(), 0.0);
    for (const auto& c : curves) {
        if (c.ps.size() != out.ps.size()) throw std::invalid_argument("mean_curve: curves on different grids");
        for (std::size_t i = 0; i < c.ps.size(); ++i) out.ps[i] += c.ps[i];
    }
    const double n = static_cast<double>(curves.size());
    for (auto& p : out.ps) p /= n;
    return out;
}

ForecastPair curve_var_es(const CdfCurve& curve, Alpha alpha, bool strict_step_rule) {
    const auto& xs = cdf_grid();
    const auto& ps = curve.ps;
    if (ps.size() != xs.size()) throw std::invalid_argument("curve_var_es: curve not on the shared grid");
    const double a = alpha.value();
    const auto it = std::find_if(ps.begin(), ps.end(), [a](double p) { return p >= a; });
    if (it == ps.end()) {
        throw NumericalError(fmt::format("combined CDF never reaches {} on [{}, {}]", a, kCdfLo, kCdfHi));
    }
    const auto i = static_cast<std::size_t>(it - ps.begin());
    if (i == 0) {
        throw NumericalError(fmt::format("combined CDF already exceeds {} at the grid start {}", a, kCdfLo));
    }

    double var;
    double mass_sum = ps[0] * xs[0];
    std::size_t last_full;  // cells (j-1, j] for j <= last_full are summed whole
    if (strict_step_rule) {
        var = xs[i];
        last_full = i;
    } else {
        const double w = (a - ps[i - 1]) / (ps[i] - ps[i - 1]);
        var = xs[i - 1] + w * (xs[i] - xs[i - 1]);
        last_full = i - 1;
        mass_sum += (a - ps[i - 1]) * 0.5 * (xs[i - 1] + var);
    }
    for (std::size_t j = 1; j <= last_full; ++j) mass_sum += (ps[j] - ps[j - 1]) * 0.5 * (xs[j - 1] + xs[j]);
    const double es = std::min(mass_sum / a, var);
    return {var, es};
}

ForecastPair probability_average(std::span<const CdfCurve> curves, Alpha alpha, bool strict_step_rule) {
    return curve_var_es(mean_curve(curves), alpha, strict_step_rule);
}

// ---------------------------------------------------------------- depth

namespace {

struct Vec {
    double x, y;
};

double cross(const Vec& a, const Vec& b) { return a.x * b.y - a.y * b.x; }
double dot(const Vec& a, const Vec& b) { return a.x * b.x + a.y * b.y; }

// Directions from p to every point not equal to p; `at_p` counts the rest.
std::vector<Vec> directions(std::span<const ForecastPair> points, const ForecastPair& p, std::size_t& at_p) {
    std::vector<Vec> d;
    d.reserve(points.size());
    at_p = 0;
    for (const auto& q : points) {
        const Vec v{q.var - p.var, q.es - p.es};
        if (v.x == 0.0 && v.y == 0.0) ++at_p;
        else d.push_back(v);
    }
    return d;
}

}  // namespace

std::size_t halfspace_depth_count(std::span<const ForecastPair> points, const ForecastPair& p) {
    if (points.empty()) throw std::invalid_argument("halfspace depth needs at least one point");
    std::size_t at_p = 0;
    const auto d = directions(points, p, at_p);
    // The sparsest closed halfplane is the complement of the fullest open one;
    // an optimal open halfplane can be rotated until a point sits on its
    // trailing edge, so it holds the directions in [theta_i, theta_i + pi).
    std::size_t best_open = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            const double c = cross(d[i], d[j]);
            if (c > 0.0 || (c == 0.0 && dot(d[i], d[j]) > 0.0)) ++count;
        }
        best_open = std::max(best_open, count);
    }
    return at_p + d.size() - best_open;
}

double halfspace_depth(std::span<const ForecastPair> points, const ForecastPair& p) {
    return static_cast<double>(halfspace_depth_count(points, p)) / static_cast<double>(points.size());
}

std::uint64_t simplicial_depth_count(std::span<const ForecastPair> points, const ForecastPair& p) {
    const std::uint64_t M = points.size();
    if (M < 3) throw std::invalid_argument("simplicial depth needs at least three points");
    auto choose3 = [](std::uint64_t n) { return n < 3 ? 0 : n * (n - 1) * (n - 2) / 6; };
    std::size_t at_p = 0;
    const auto d = directions(points, p, at_p);
    // Triangles with three vertices away from p miss p exactly when their
    // directions fit in an open halfplane; count each such triple once from
    // its most clockwise vertex (equal directions ordered by index).
    std::uint64_t outside = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::uint64_t k = 0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (j == i) continue;
            const double c = cross(d[i], d[j]);
            if (c > 0.0 || (c == 0.0 && dot(d[i], d[j]) > 0.0 && j > i)) ++k;
        }
        outside += k * (k - 1) / 2;
    }
    return choose3(M) - outside;
}

double simplicial_depth(std::span<const ForecastPair> points, const ForecastPair& p) {
    const double M = static_cast<double>(points.size());
    return static_cast<double>(simplicial_depth_count(points, p)) / (M * (M - 1.0) * (M - 2.0) / 6.0);
}

std::size_t deepest_index(std::span<const ForecastPair> column, DepthNotion notion) {
    if (column.size() < 3) throw std::invalid_argument("deepest_combine needs at least three points");
    std::vector<std::uint64_t> depth(column.size());
    for (std::size_t m = 0; m < column.size(); ++m) {
        depth[m] = notion == DepthNotion::Halfspace ? halfspace_depth_count(column, column[m])
                                                    : simplicial_depth_count(column, column[m]);
    }
    const auto top = *std::max_element(depth.begin(), depth.end());
    const auto med = median_combine(column);
    std::size_t best = column.size();
    double best_dist = 0.0;
    for (std::size_t m = 0; m < column.size(); ++m) {
        if (depth[m] != top) continue;
        const double dist = std::hypot(column[m].var - med.var, column[m].es - med.es);
        if (best == column.size() || dist < best_dist) {
            best = m;
            best_dist = dist;
        }
    }
    return best;
}

ForecastPair deepest_combine(std::span<const ForecastPair> column, DepthNotion notion) {
    return column[deepest_index(column, notion)];
}

}  // namespace varescomb

#include "varescomb/dist.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace varescomb {

namespace {

static_assert(std::endian::native == std::endian::little, "grid cache assumes a little-endian host");

constexpr char kGridMagic[8] = {'V', 'C', 'G', 'R', 'I', 'D', '0', '1'};
constexpr std::uint32_t kGridVersion = 1;
constexpr std::uint32_t kEndpointRightClosed = 1;

// Shape constants of the standardized skewed t.
struct SkewTShape {
    double nu, lambda, a, b, s;  // s = sqrt(nu / (nu - 2))
    boost::math::students_t_distribution<double> t;

    SkewTShape(double nu_, double lambda_) : nu(nu_), lambda(lambda_), t(nu_) {
        const double c = std::exp(boost::math::lgamma((nu + 1.0) / 2.0) - boost::math::lgamma(nu / 2.0)) /
                         std::sqrt(M_PI * (nu - 2.0));
        a = 4.0 * lambda * c * (nu - 2.0) / (nu - 1.0);
        b = std::sqrt(1.0 + 3.0 * lambda * lambda - a * a);
        s = std::sqrt(nu / (nu - 2.0));
    }

    double threshold() const { return -a / b; }
    double side(double z) const { return z < threshold() ? 1.0 - lambda : 1.0 + lambda; }
    double t_of(double z) const { return s * (b * z + a) / side(z); }

    double pdf(double z) const { return b * s * boost::math::pdf(t, t_of(z)); }

    double cdf(double z) const {
        const double tv = t_of(z);
        if (z < threshold()) return (1.0 - lambda) * boost::math::cdf(t, tv);
        return 0.5 * (1.0 - lambda) + (1.0 + lambda) * (boost::math::cdf(t, tv) - 0.5);
    }

    double quantile(double p) const {
        const double split = 0.5 * (1.0 - lambda);
        if (p < split) {
            const double tv = boost::math::quantile(t, p / (1.0 - lambda));
            return ((1.0 - lambda) * tv / s - a) / b;
        }
        const double tv = boost::math::quantile(t, std::min(0.5 + (p - split) / (1.0 + lambda), 1.0));
        return ((1.0 + lambda) * tv / s - a) / b;
    }

    // Integral of x f_nu(x) over (-inf, tv].
    double t_partial(double tv) const { return -(nu + tv * tv) / (nu - 1.0) * boost::math::pdf(t, tv); }

    // Integral of z dF(z) over (-inf, q].
    double partial_expectation(double q) const {
        const double z0 = std::min(q, threshold());
        const double l = 1.0 - lambda;
        const double t0 = s * (b * z0 + a) / l;
        double total = l / b * (l / s * t_partial(t0) - a * boost::math::cdf(t, t0));
        if (q > threshold()) {
            const double r = 1.0 + lambda;
            const double t1 = s * (b * q + a) / r;
            total += r / b * (r / s * (t_partial(t1) - t_partial(0.0)) - a * (boost::math::cdf(t, t1) - 0.5));
        }
        return total;
    }
};

template <class T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("truncated grid cache");
    return v;
}

// b - k (b - a) / n for k = 0..n-1, returned ascending.
std::vector<double> right_closed_axis(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int k = 0; k < n; ++k) v[n - 1 - k] = hi - k * (hi - lo) / n;
    return v;
}

}  // namespace

ForecastPair gaussian_var_es(double mean, double sd, Alpha alpha) {
    if (!(sd > 0.0) || !std::isfinite(sd)) throw std::invalid_argument(fmt::format("gaussian sd must be positive, got {}", sd));
    const boost::math::normal_distribution<double> n01;
    const double z = boost::math::quantile(n01, alpha.value());
    return {mean + sd * z, mean - sd * boost::math::pdf(n01, z) / alpha.value()};
}

ForecastPair student_t_var_es(double sd, double nu, Alpha alpha) { return skewt_var_es({sd, nu, 0.0}, alpha); }

void SkewTParams::validate() const {
    if (!(sigma > 0.0) || !(nu > 2.0) || !(skew > -1.0 && skew < 1.0) || !std::isfinite(sigma) || !std::isfinite(nu)) {
        throw std::invalid_argument(fmt::format("invalid skew-t parameters sigma={} nu={} skew={}", sigma, nu, skew));
    }
}

double skewt_pdf(const SkewTParams& p, double x) {
    p.validate();
    return SkewTShape(p.nu, p.skew).pdf(x / p.sigma) / p.sigma;
}

double skewt_cdf(const SkewTParams& p, double x) {
    p.validate();
    return SkewTShape(p.nu, p.skew).cdf(x / p.sigma);
}

double skewt_quantile(const SkewTParams& p, double prob) {
    p.validate();
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("skewt_quantile: probability outside (0, 1)");
    return p.sigma * SkewTShape(p.nu, p.skew).quantile(prob);
}

double skewt_log_density(double z, double nu, double skew) {
    const SkewTShape shape(nu, skew);
    const double u = (shape.b * z + shape.a) / shape.side(z);
    const double c = std::exp(boost::math::lgamma((nu + 1.0) / 2.0) - boost::math::lgamma(nu / 2.0)) /
                     std::sqrt(M_PI * (nu - 2.0));
    return std::log(shape.b * c) - 0.5 * (nu + 1.0) * std::log1p(u * u / (nu - 2.0));
}

ForecastPair skewt_var_es(const SkewTParams& p, Alpha alpha) {
    p.validate();
    const SkewTShape shape(p.nu, p.skew);
    const double q = shape.quantile(alpha.value());
    const double es = shape.partial_expectation(q) / alpha.value();
    if (!std::isfinite(q) || !std::isfinite(es)) {
        throw NumericalError(fmt::format("skew-t VaR/ES not finite for nu={} skew={}", p.nu, p.skew));
    }
    return {p.sigma * q, p.sigma * std::min(es, q)};
}

// ---------------------------------------------------------------- ParametricDist

double ParametricDist::cdf(double x) const {
    switch (kind) {
        case Kind::Gaussian:
            return boost::math::cdf(boost::math::normal_distribution<double>(mean, scale), x);
        case Kind::StudentT:
            return skewt_cdf({scale, nu, 0.0}, x - mean);
        case Kind::SkewT:
            return skewt_cdf({scale, nu, skew}, x - mean);
    }
    return 0.0;
}

ForecastPair ParametricDist::var_es(Alpha alpha) const {
    ForecastPair p;
    switch (kind) {
        case Kind::Gaussian: return gaussian_var_es(mean, scale, alpha);
        case Kind::StudentT: p = skewt_var_es({scale, nu, 0.0}, alpha); break;
        case Kind::SkewT: p = skewt_var_es({scale, nu, skew}, alpha); break;
    }
    return {p.var + mean, p.es + mean};
}

std::string to_string(ParametricDist::Kind kind) {
    switch (kind) {
        case ParametricDist::Kind::Gaussian: return "gaussian";
        case ParametricDist::Kind::StudentT: return "t";
        case ParametricDist::Kind::SkewT: return "skewt";
    }
    return "?";
}

ParametricDist::Kind parse_dist_kind(std::string_view name) {
    if (name == "gaussian") return ParametricDist::Kind::Gaussian;
    if (name == "t") return ParametricDist::Kind::StudentT;
    if (name == "skewt") return ParametricDist::Kind::SkewT;
    throw ConfigError(fmt::format("unknown distribution '{}'", name));
}

// ---------------------------------------------------------------- CandidateGrid

CandidateGrid::CandidateGrid(Alpha alpha, GridAxes axes) : alpha_(alpha), axes_(axes) {
    build_axes();
    unit_.resize(nus_.size() * skews_.size());
    for (std::size_t j = 0; j < nus_.size(); ++j) {
        for (std::size_t k = 0; k < skews_.size(); ++k) {
            unit_[j * skews_.size() + k] = skewt_var_es({1.0, nus_[j], skews_[k]}, alpha_);
        }
    }
}

CandidateGrid::CandidateGrid(Alpha alpha, GridAxes axes, std::vector<ForecastPair> unit)
    : alpha_(alpha), axes_(axes), unit_(std::move(unit)) {
    build_axes();
    if (unit_.size() != nus_.size() * skews_.size()) throw DataError("grid cache has inconsistent dimensions");
}

void CandidateGrid::build_axes() {
    if (axes_.n_sigma < 1 || axes_.n_nu < 1 || axes_.n_skew < 1 || !(axes_.sigma_max > 0.0) ||
        !(axes_.nu_min >= 2.0 && axes_.nu_max > axes_.nu_min)) {
        throw ConfigError("invalid candidate grid axes");
    }
    sigmas_ = right_closed_axis(0.0, axes_.sigma_max, axes_.n_sigma);
    nus_ = right_closed_axis(axes_.nu_min, axes_.nu_max, axes_.n_nu);
    skews_.resize(axes_.n_skew);
    for (int k = 0; k < axes_.n_skew; ++k) skews_[k] = -1.0 + 2.0 * (k + 1) / (axes_.n_skew + 1);
}

ForecastPair CandidateGrid::pair(const GridCell& c) const {
    if (!cells_.empty()) {
        return cells_[(static_cast<std::size_t>(c.i) * nus_.size() + c.j) * skews_.size() + c.k];
    }
    const auto& u = unit(c.j, c.k);
    const double s = sigmas_[c.i];
    return {s * u.var, s * u.es};
}

SkewTParams CandidateGrid::params(const GridCell& c) const { return {sigmas_[c.i], nus_[c.j], skews_[c.k]}; }

void CandidateGrid::materialize() {
    if (!cells_.empty()) return;
    cells_.resize(sigmas_.size() * unit_.size());
    for (std::size_t i = 0; i < sigmas_.size(); ++i) {
        for (std::size_t u = 0; u < unit_.size(); ++u) {
            cells_[i * unit_.size() + u] = {sigmas_[i] * unit_[u].var, sigmas_[i] * unit_[u].es};
        }
    }
}

void CandidateGrid::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write grid cache '{}'", path.string()));
    out.write(kGridMagic, sizeof kGridMagic);
    write_raw(out, kGridVersion);
    write_raw(out, kEndpointRightClosed);
    write_raw(out, alpha_.value());
    write_raw(out, static_cast<std::int32_t>(axes_.n_sigma));
    write_raw(out, static_cast<std::int32_t>(axes_.n_nu));
    write_raw(out, static_cast<std::int32_t>(axes_.n_skew));
    write_raw(out, axes_.sigma_max);
    write_raw(out, axes_.nu_min);
    write_raw(out, axes_.nu_max);
    for (const auto& p : unit_) {
        write_raw(out, p.var);
        write_raw(out, p.es);
    }
}

CandidateGrid CandidateGrid::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open grid cache '{}'", path.string()));
    char magic[sizeof kGridMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kGridMagic, sizeof magic) != 0) throw DataError("not a grid cache file");
    if (read_raw<std::uint32_t>(in) != kGridVersion) throw DataError("unsupported grid cache version");
    if (read_raw<std::uint32_t>(in) != kEndpointRightClosed) throw DataError("unsupported grid endpoint convention");
    const Alpha alpha(read_raw<double>(in));
    GridAxes axes;
    axes.n_sigma = read_raw<std::int32_t>(in);
    axes.n_nu = read_raw<std::int32_t>(in);
    axes.n_skew = read_raw<std::int32_t>(in);
    axes.sigma_max = read_raw<double>(in);
    axes.nu_min = read_raw<double>(in);
    axes.nu_max = read_raw<double>(in);
    if (axes.n_nu <= 0 || axes.n_skew <= 0) throw DataError("grid cache has invalid dimensions");
    std::vector<ForecastPair> unit(static_cast<std::size_t>(axes.n_nu) * axes.n_skew);
    for (auto& p : unit) {
        p.var = read_raw<double>(in);
        p.es = read_raw<double>(in);
    }
    return CandidateGrid(alpha, axes, std::move(unit));
}

CandidateGrid build_candidate_grid(Alpha alpha, GridAxes axes) { return CandidateGrid(alpha, axes); }

CandidateGrid cached_candidate_grid(const std::filesystem::path& cache_dir, Alpha alpha, GridAxes axes) {
    const auto path = cache_dir / fmt::format("skewt_grid_a{:.6f}_{}x{}x{}.bin", alpha.value(), axes.n_sigma,
                                              axes.n_nu, axes.n_skew);
    if (std::filesystem::exists(path)) {
        try {
            auto grid = CandidateGrid::load(path);
            const auto& g = grid.axes();
            if (grid.alpha().value() == alpha.value() && g.n_sigma == axes.n_sigma && g.n_nu == axes.n_nu &&
                g.n_skew == axes.n_skew && g.sigma_max == axes.sigma_max && g.nu_min == axes.nu_min &&
                g.nu_max == axes.nu_max) {
                return grid;
            }
        } catch (const DataError& e) {
            spdlog::warn("ignoring grid cache {}: {}", path.string(), e.what());
        }
    }
    auto grid = build_candidate_grid(alpha, axes);
    std::filesystem::create_directories(cache_dir);
    grid.save(path);
    return grid;
}

GridCell fit_grid_cell(const CandidateGrid& grid, const ForecastPair& target) {
    const auto& sig = grid.sigmas();
    const int n_sigma = static_cast<int>(sig.size());
    const int n_nu = static_cast<int>(grid.nus().size());
    const int n_skew = static_cast<int>(grid.skews().size());
    const double step = grid.axes().sigma_max / n_sigma;

    GridCell best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_nu; ++j) {
        for (int k = 0; k < n_skew; ++k) {
            const auto& u = grid.unit(j, k);
            // Distance is a parabola in sigma, so only the grid sigmas next to
            // its vertex can win.
            const double vertex = (target.var * u.var + target.es * u.es) / (u.var * u.var + u.es * u.es);
            const double pos = std::clamp(vertex / step, -2.0, static_cast<double>(n_sigma) + 2.0);
            const int centre = std::clamp(static_cast<int>(std::floor(pos)) - 1, 0, n_sigma - 1);
            const int lo = std::max(0, centre - 1);
            const int hi = std::min(n_sigma - 1, centre + 2);
            for (int i = lo; i <= hi; ++i) {
                const double dv = target.var - sig[i] * u.var;
                const double de = target.es - sig[i] * u.es;
                const double d = dv * dv + de * de;
                const GridCell cell{i, j, k};
                if (d < best_d || (d == best_d && cell < best)) {
                    best_d = d;
                    best = cell;
                }
            }
        }
    }
    return best;
}

SkewTParams fit_skewt_to_var_es(const CandidateGrid& grid, const ForecastPair& target) {
    return grid.params(fit_grid_cell(grid, target));
}

}  // namespace varescomb

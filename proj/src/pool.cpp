#include "varescomb/pool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "varescomb/csv.hpp"
#include "varescomb/optimize.hpp"
#include "varescomb/parallel.hpp"
#include "varescomb/score.hpp"

namespace varescomb {

namespace {

constexpr double kHuge = 1e300;
constexpr int kMinParametricWindow = 250;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mean_square(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s / static_cast<double>(v.size());
}

std::string driver_token(Driver d) {
    switch (d) {
        case Driver::Return: return "";
        case Driver::Range: return "-Range";
        case Driver::RV: return "-RV";
    }
    return "";
}

std::string dist_token(Innovation d) {
    switch (d) {
        case Innovation::Gaussian: return "Gaussian";
        case Innovation::T: return "t";
        case Innovation::SkewT: return "skewt";
    }
    return "";
}

std::string form_token(CaviarForm f) {
    switch (f) {
        case CaviarForm::SAV: return "SAV";
        case CaviarForm::AS: return "AS";
        case CaviarForm::IG: return "IG";
    }
    return "";
}

void require_window(const MethodSpec& spec, const ReturnSeries& window) {
    if (window.size() < static_cast<std::size_t>(kMinParametricWindow)) {
        throw DataError(fmt::format("{} needs at least {} days, got {}", spec.name(), kMinParametricWindow,
                                    window.size()));
    }
    if (spec.needs_range() && !window.has_range()) {
        throw DataError(fmt::format("{} needs a range column (high/low) that the data lacks", spec.name()));
    }
    if (spec.needs_rv() && !window.has_rv()) {
        throw DataError(fmt::format("{} needs an rv column that the data lacks", spec.name()));
    }
}

}  // namespace

// ---------------------------------------------------------------- MethodSpec

std::string MethodSpec::name() const {
    switch (family) {
        case Family::HS: return fmt::format("HS-{}", window);
        case Family::GaussianWindow: return fmt::format("Gaussian-{}", window);
        case Family::EWMA: return "EWMA";
        case Family::GARCH:
        case Family::GJR: {
            std::string s = family == Family::GJR ? "GJR-GARCH" : "GARCH";
            s += driver_token(driver) + "-" + dist_token(dist);
            if (tail == Tail::EVT) s += "-EVT";
            if (tail == Tail::FHS) s += "-FHS";
            return s;
        }
        case Family::CAViaR:
            return "CAViaR" + driver_token(driver) + "-" + form_token(form) +
                   (es_form == EsForm::Multiplicative ? "-Multiplicative" : "-Additive");
        case Family::CARE:
            return "CARE" + driver_token(driver) + "-" + form_token(form);
    }
    return "?";
}

MethodSpec MethodSpec::parse(std::string_view name) {
    auto parts = csv::split(name, '-');
    auto fail = [&] { return ConfigError(fmt::format("unrecognized method name '{}'", name)); };
    if (parts.empty()) throw fail();
    MethodSpec s;
    std::size_t i = 0;
    auto parse_window = [&](const std::string& text) {
        try {
            std::size_t used = 0;
            const int w = std::stoi(text, &used);
            if (used != text.size() || w < 1) throw fail();
            return w;
        } catch (const std::logic_error&) {
            throw fail();
        }
    };
    auto take_driver = [&] {
        if (i < parts.size() && parts[i] == "Range") {
            s.driver = Driver::Range;
            ++i;
        } else if (i < parts.size() && parts[i] == "RV") {
            s.driver = Driver::RV;
            ++i;
        }
    };
    auto take_form = [&] {
        if (i >= parts.size()) throw fail();
        if (parts[i] == "SAV") s.form = CaviarForm::SAV;
        else if (parts[i] == "AS") s.form = CaviarForm::AS;
        else if (parts[i] == "IG") s.form = CaviarForm::IG;
        else throw fail();
        ++i;
    };

    const auto& head = parts[i++];
    if (head == "HS" || head == "Gaussian") {
        if (parts.size() != 2) throw fail();
        s.family = head == "HS" ? Family::HS : Family::GaussianWindow;
        s.window = parse_window(parts[1]);
        return s;
    }
    if (head == "EWMA") {
        if (parts.size() != 1) throw fail();
        s.family = Family::EWMA;
        return s;
    }
    if (head == "GARCH" || (head == "GJR" && i < parts.size() && parts[i] == "GARCH")) {
        if (head == "GJR") ++i;
        s.family = head == "GJR" ? Family::GJR : Family::GARCH;
        take_driver();
        if (i >= parts.size()) throw fail();
        if (parts[i] == "Gaussian") s.dist = Innovation::Gaussian;
        else if (parts[i] == "t") s.dist = Innovation::T;
        else if (parts[i] == "skewt") s.dist = Innovation::SkewT;
        else throw fail();
        ++i;
        if (i < parts.size()) {
            if (parts[i] == "EVT") s.tail = Tail::EVT;
            else if (parts[i] == "FHS") s.tail = Tail::FHS;
            else throw fail();
            ++i;
        }
    } else if (head == "CAViaR") {
        s.family = Family::CAViaR;
        take_driver();
        take_form();
        if (i >= parts.size()) throw fail();
        if (parts[i] == "Multiplicative" || parts[i] == "Multplicative") s.es_form = EsForm::Multiplicative;
        else if (parts[i] == "Additive") s.es_form = EsForm::Additive;
        else throw fail();
        ++i;
    } else if (head == "CARE") {
        s.family = Family::CARE;
        take_driver();
        take_form();
    } else {
        throw fail();
    }
    if (i != parts.size()) throw fail();
    return s;
}

bool MethodSpec::has_native_cdf() const noexcept {
    return family == Family::GaussianWindow || family == Family::EWMA ||
           ((family == Family::GARCH || family == Family::GJR) && tail == Tail::Native);
}

std::vector<MethodSpec> standard_method_set(int est_window) {
    std::vector<MethodSpec> out;
    for (auto fam : {Family::HS, Family::GaussianWindow}) {
        for (int w : {100, 250, 500, est_window}) {
            MethodSpec s;
            s.family = fam;
            s.window = w;
            out.push_back(s);
        }
    }
    MethodSpec ewma;
    ewma.family = Family::EWMA;
    out.push_back(ewma);
    for (auto fam : {Family::GARCH, Family::GJR}) {
        for (auto drv : {Driver::Return, Driver::Range, Driver::RV}) {
            for (auto tail : {Tail::Native, Tail::EVT, Tail::FHS}) {
                for (auto dist : {Innovation::Gaussian, Innovation::T, Innovation::SkewT}) {
                    MethodSpec s;
                    s.family = fam;
                    s.driver = drv;
                    s.dist = dist;
                    s.tail = tail;
                    out.push_back(s);
                }
            }
        }
    }
    for (auto drv : {Driver::Return, Driver::Range, Driver::RV}) {
        for (auto form : {CaviarForm::SAV, CaviarForm::AS, CaviarForm::IG}) {
            for (auto es : {EsForm::Multiplicative, EsForm::Additive}) {
                MethodSpec s;
                s.family = Family::CAViaR;
                s.driver = drv;
                s.form = form;
                s.es_form = es;
                out.push_back(s);
            }
        }
    }
    for (auto drv : {Driver::Return, Driver::Range, Driver::RV}) {
        for (auto form : {CaviarForm::SAV, CaviarForm::AS, CaviarForm::IG}) {
            MethodSpec s;
            s.family = Family::CARE;
            s.driver = drv;
            s.form = form;
            out.push_back(s);
        }
    }
    return out;
}

// ---------------------------------------------------------------- simple families

ForecastPair hs_forecast(std::span<const double> window, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("hs_forecast: alpha outside (0, 1)");
    const auto needed = static_cast<std::size_t>(std::ceil(1.0 / alpha - 1e-9));
    if (window.size() < needed) {
        throw DataError(fmt::format("historical simulation needs at least {} returns, got {}", needed, window.size()));
    }
    std::vector<double> x(window.begin(), window.end());
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * alpha;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    const double var = lo + 1 < x.size() ? x[lo] + frac * (x[lo + 1] - x[lo]) : x[lo];
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : x) {
        if (!(v < var)) break;
        sum += v;
        ++count;
    }
    if (count == 0) {
        spdlog::debug("historical simulation window has no return below the quantile; es set to var");
        return {var, var};
    }
    return {var, std::min(var, sum / static_cast<double>(count))};
}

ForecastPair gaussian_window_forecast(std::span<const double> window, Alpha alpha) {
    if (window.size() < 2) throw DataError("Gaussian window needs at least 2 returns");
    const double m = mean_of(window);
    double ss = 0.0;
    for (double v : window) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(window.size() - 1));
    return gaussian_var_es(0.0, std::max(sd, 1e-6), alpha);
}

double ewma_variance(std::span<const double> returns, double lambda) {
    if (returns.empty()) throw DataError("EWMA needs at least one return");
    double v = returns.front() * returns.front();
    for (double r : returns) v = lambda * v + (1.0 - lambda) * r * r;
    return std::max(v, 1e-12);
}

ForecastPair ewma_forecast(std::span<const double> returns, Alpha alpha) {
    if (returns.size() < 2) throw DataError("EWMA needs at least 2 returns");
    return gaussian_var_es(0.0, std::sqrt(ewma_variance(returns)), alpha);
}

// ---------------------------------------------------------------- GARCH / GJR

namespace {

std::vector<double> garch_driver(const ReturnSeries& w, Driver driver) {
    std::vector<double> x(w.size());
    for (std::size_t t = 0; t < w.size(); ++t) {
        switch (driver) {
            case Driver::Return: x[t] = w.returns()[t] * w.returns()[t]; break;
            case Driver::Range: x[t] = w.range()[t] * w.range()[t]; break;
            case Driver::RV: x[t] = w.rv()[t]; break;
        }
    }
    return x;
}

// Unconstrained coordinates: [log omega, logit persistence, share logits..., dist params...].
struct GarchCoding {
    bool gjr;
    Innovation dist;
    double kappa;

    std::size_t dim() const { return (gjr ? 4 : 3) + (dist == Innovation::Gaussian ? 0 : 1) + (dist == Innovation::SkewT ? 1 : 0); }

    GarchParams decode(std::span<const double> th) const {
        GarchParams p;
        p.omega = std::exp(th[0]);
        const double persistence = 0.9999 * logistic(th[1]);
        std::size_t k = 2;
        const double ea = std::exp(th[k++]);
        const double eg = gjr ? std::exp(th[k++]) : 0.0;
        const double total = ea + eg + 1.0;
        p.alpha = persistence * ea / total / kappa;
        p.gamma = 2.0 * persistence * eg / total;
        p.beta = persistence / total;
        if (dist != Innovation::Gaussian) p.nu = 2.1 + 97.9 * logistic(th[k++]);
        if (dist == Innovation::SkewT) p.skew = 0.99 * std::tanh(th[k++]);
        return p;
    }

    std::vector<double> encode(double omega, double persistence, double a_share, double g_share, double nu,
                               double skew) const {
        std::vector<double> th;
        th.push_back(std::log(omega));
        th.push_back(logit(persistence / 0.9999));
        const double b_share = 1.0 - a_share - g_share;
        th.push_back(std::log(a_share / b_share));
        if (gjr) th.push_back(std::log(g_share / b_share));
        if (dist != Innovation::Gaussian) th.push_back(logit((nu - 2.1) / 97.9));
        if (dist == Innovation::SkewT) th.push_back(std::atanh(skew / 0.99));
        return th;
    }
};

double innovation_loglik(Innovation dist, const GarchParams& p, std::span<const double> r, std::span<const double> sigma) {
    const std::size_t n = r.size();
    double ll = 0.0;
    switch (dist) {
        case Innovation::Gaussian: {
            const double c = -0.5 * std::log(2.0 * M_PI);
            for (std::size_t t = 0; t < n; ++t) {
                const double z = r[t] / sigma[t];
                ll += c - std::log(sigma[t]) - 0.5 * z * z;
            }
            break;
        }
        case Innovation::T: {
            const double nu = p.nu;
            const double c = boost::math::lgamma((nu + 1.0) / 2.0) - boost::math::lgamma(nu / 2.0) -
                             0.5 * std::log(M_PI * (nu - 2.0));
            for (std::size_t t = 0; t < n; ++t) {
                const double z = r[t] / sigma[t];
                ll += c - std::log(sigma[t]) - 0.5 * (nu + 1.0) * std::log1p(z * z / (nu - 2.0));
            }
            break;
        }
        case Innovation::SkewT: {
            const double nu = p.nu, lam = p.skew;
            const double c = std::exp(boost::math::lgamma((nu + 1.0) / 2.0) - boost::math::lgamma(nu / 2.0)) /
                             std::sqrt(M_PI * (nu - 2.0));
            const double a = 4.0 * lam * c * (nu - 2.0) / (nu - 1.0);
            const double b = std::sqrt(1.0 + 3.0 * lam * lam - a * a);
            const double lbc = std::log(b * c);
            const double kink = -a / b;
            for (std::size_t t = 0; t < n; ++t) {
                const double z = r[t] / sigma[t];
                const double u = (b * z + a) / (z < kink ? 1.0 - lam : 1.0 + lam);
                ll += lbc - std::log(sigma[t]) - 0.5 * (nu + 1.0) * std::log1p(u * u / (nu - 2.0));
            }
            break;
        }
    }
    return ll;
}

}  // namespace

std::vector<double> GarchModel::sigma_path(const GarchParams& p, const ReturnSeries& window) const {
    const auto x = garch_driver(window, driver);
    const auto& r = window.returns();
    const std::size_t n = r.size();
    std::vector<double> sigma(n + 1);
    double s2 = mean_square(r);
    for (std::size_t t = 0; t < n; ++t) {
        sigma[t] = std::sqrt(s2);
        s2 = p.omega + p.alpha * x[t] + (gjr && r[t] < 0.0 ? p.gamma * r[t] * r[t] : 0.0) + p.beta * s2;
    }
    sigma[n] = std::sqrt(s2);
    return sigma;
}

double GarchModel::log_likelihood(const GarchParams& p, const ReturnSeries& window) const {
    const auto sigma = sigma_path(p, window);
    return innovation_loglik(dist, p, window.returns(), std::span<const double>(sigma).first(window.size()));
}

GarchFit GarchModel::fit(const ReturnSeries& window) const {
    const auto& r = window.returns();
    const double m2 = std::max(mean_square(r), 1e-8);
    const auto xs = garch_driver(window, driver);
    const double kappa = std::max(mean_of(xs), 1e-12) / m2;
    const auto x = xs;

    auto run = [&](Innovation d, const std::vector<std::vector<double>>& starts) {
        const GarchCoding coding{gjr, d, kappa};
        std::vector<double> sigma(r.size());
        auto objective = [&](std::span<const double> th) {
            const auto p = coding.decode(th);
            double s2 = m2;
            for (std::size_t t = 0; t < r.size(); ++t) {
                sigma[t] = std::sqrt(s2);
                s2 = p.omega + p.alpha * x[t] + (gjr && r[t] < 0.0 ? p.gamma * r[t] * r[t] : 0.0) + p.beta * s2;
            }
            const double ll = innovation_loglik(d, p, r, sigma);
            return std::isfinite(ll) ? -ll / static_cast<double>(r.size()) : kHuge;
        };
        opt::NelderMeadOptions nm;
        nm.step = 0.4;
        nm.size_tol = 1e-6;
        nm.max_iter = 3000;
        auto best = opt::nelder_mead_multistart(objective, starts, nm);
        GarchFit out;
        out.params = coding.decode(best.x);
        out.loglik = -best.value * static_cast<double>(r.size());
        out.kappa = kappa;
        out.converged = best.converged && best.value < kHuge;
        return std::pair{out, best.x};
    };

    // Moment-based starts: (persistence, alpha share, gamma share).
    const double starts_table[5][3] = {
        {0.95, 0.08, 0.04}, {0.98, 0.05, 0.03}, {0.90, 0.12, 0.05}, {0.97, 0.15, 0.02}, {0.93, 0.04, 0.08}};
    auto vol_starts = [&](Innovation d, double nu, double skew) {
        const GarchCoding coding{gjr, d, kappa};
        std::vector<std::vector<double>> starts;
        for (const auto& row : starts_table) {
            const double g = gjr ? row[2] : 0.0;
            starts.push_back(coding.encode(m2 * (1.0 - row[0]), row[0], row[1] / row[0], g / row[0], nu, skew));
        }
        return starts;
    };

    GarchFit result;
    if (dist == Innovation::SkewT) {
        const auto [gauss, gauss_x] = run(Innovation::Gaussian, vol_starts(Innovation::Gaussian, 0.0, 0.0));
        std::vector<double> from_gauss(gauss_x.begin(), gauss_x.end());
        from_gauss.push_back(logit((8.0 - 2.1) / 97.9));
        from_gauss.push_back(0.0);
        std::vector<std::vector<double>> starts{from_gauss};
        auto alt = from_gauss;
        alt[alt.size() - 2] = logit((5.0 - 2.1) / 97.9);
        alt.back() = std::atanh(-0.1 / 0.99);
        starts.push_back(alt);
        result = run(Innovation::SkewT, starts).first;
    } else {
        result = run(dist, vol_starts(dist, 8.0, 0.0)).first;
    }
    if (!result.converged) {
        spdlog::debug("GARCH likelihood search stopped before the simplex tolerance was met");
    }
    if (!std::isfinite(result.loglik)) throw NumericalError("GARCH likelihood maximization failed on every start");
    return result;
}

ForecastPair GpdTail::var_es(double alpha) const {
    const double ratio = alpha * static_cast<double>(n) / static_cast<double>(n_exceed);
    if (!(ratio < 1.0)) throw NumericalError("GPD tail level lies above the threshold");
    const double lq = std::abs(xi) < 1e-9 ? threshold - beta * std::log(ratio)
                                          : threshold + beta / xi * (std::pow(ratio, -xi) - 1.0);
    const double les = (lq + beta - xi * threshold) / (1.0 - xi);
    return {-lq, -std::max(les, lq)};
}

GpdTail fit_gpd_tail(std::span<const double> std_residuals, double tail_fraction) {
    std::vector<double> y(std_residuals.size());
    std::transform(std_residuals.begin(), std_residuals.end(), y.begin(), [](double z) { return -z; });
    std::sort(y.begin(), y.end(), std::greater<>());
    const auto k = static_cast<std::size_t>(std::llround(tail_fraction * static_cast<double>(y.size())));
    if (k < 10 || k >= y.size()) throw DataError("too few residuals for a GPD tail fit");

    GpdTail tail;
    tail.threshold = y[k];
    tail.n = y.size();
    tail.n_exceed = k;
    std::vector<double> e(k);
    for (std::size_t i = 0; i < k; ++i) e[i] = y[i] - tail.threshold;
    const double mean_e = std::max(mean_of(e), 1e-8);

    auto decode = [](std::span<const double> th) { return std::pair{std::exp(th[0]), -0.5 + 1.4 * logistic(th[1])}; };
    auto objective = [&](std::span<const double> th) {
        const auto [beta, xi] = decode(th);
        double ll = -static_cast<double>(k) * std::log(beta);
        if (std::abs(xi) < 1e-9) {
            for (double v : e) ll -= v / beta;
        } else {
            for (double v : e) {
                const double arg = 1.0 + xi * v / beta;
                if (arg <= 0.0) return kHuge;
                ll -= (1.0 + 1.0 / xi) * std::log(arg);
            }
        }
        return -ll / static_cast<double>(k);
    };
    std::vector<std::vector<double>> starts;
    for (double xi0 : {0.1, 0.3, -0.1, 0.0, 0.5}) {
        const double beta0 = std::max(mean_e * (1.0 - xi0), 1e-6);
        starts.push_back({std::log(beta0), logit((xi0 + 0.5) / 1.4)});
    }
    opt::NelderMeadOptions nm;
    nm.size_tol = 1e-8;
    const auto best = opt::nelder_mead_multistart(objective, starts, nm);
    if (!(best.value < kHuge)) throw NumericalError("GPD likelihood maximization failed on every start");
    std::tie(tail.beta, tail.xi) = decode(best.x);
    return tail;
}

MethodForecast garch_forecast(const MethodSpec& spec, const GarchModel& model, const GarchFit& fit,
                              const ReturnSeries& window, Alpha alpha) {
    const auto sigma = model.sigma_path(fit.params, window);
    const double s_next = sigma.back();
    if (!(s_next > 0.0) || !std::isfinite(s_next)) throw NumericalError(fmt::format("{}: degenerate variance forecast", spec.name()));
    const auto& p = fit.params;
    MethodForecast out;
    if (spec.tail == Tail::Native) {
        ParametricDist d;
        d.scale = s_next;
        switch (model.dist) {
            case Innovation::Gaussian: d.kind = ParametricDist::Kind::Gaussian; break;
            case Innovation::T:
                d.kind = ParametricDist::Kind::StudentT;
                d.nu = p.nu;
                break;
            case Innovation::SkewT:
                d.kind = ParametricDist::Kind::SkewT;
                d.nu = p.nu;
                d.skew = p.skew;
                break;
        }
        out.pair = d.var_es(alpha);
        out.native = d;
        return out;
    }
    std::vector<double> z(window.size());
    for (std::size_t t = 0; t < z.size(); ++t) z[t] = window.returns()[t] / sigma[t];
    const ForecastPair unit = spec.tail == Tail::EVT ? fit_gpd_tail(z).var_es(alpha.value()) : hs_forecast(z, alpha.value());
    out.pair = {s_next * unit.var, s_next * unit.es};
    return out;
}

MethodForecast garch_fit_forecast(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha) {
    if (spec.family != Family::GARCH && spec.family != Family::GJR) throw std::invalid_argument("not a GARCH spec");
    require_window(spec, window);
    const GarchModel model{spec.family == Family::GJR, spec.driver, spec.dist};
    return garch_forecast(spec, model, model.fit(window), window, alpha);
}

// ---------------------------------------------------------------- CAViaR

std::vector<double> quantile_driver(const ReturnSeries& window, Driver driver) {
    std::vector<double> d(window.size());
    for (std::size_t t = 0; t < d.size(); ++t) {
        switch (driver) {
            case Driver::Return: d[t] = std::abs(window.returns()[t]); break;
            case Driver::Range: d[t] = window.range()[t]; break;
            case Driver::RV: d[t] = std::sqrt(window.rv()[t]); break;
        }
    }
    return d;
}

namespace {

// One step of the SAV / AS / IG recursion for a quantile or expectile path.
struct Recursion {
    CaviarForm form;
    bool return_driver;

    std::size_t dim() const { return form == CaviarForm::AS ? 4 : 3; }

    double step(std::span<const double> b, double prev, double r, double d) const {
        switch (form) {
            case CaviarForm::SAV: return b[0] + b[1] * prev + b[2] * d;
            case CaviarForm::AS: {
                const double up = return_driver ? std::max(r, 0.0) : d;
                return b[0] + b[1] * prev + b[2] * up + b[3] * std::max(-r, 0.0);
            }
            case CaviarForm::IG: {
                const double arg = b[0] + b[1] * prev * prev + b[2] * d * d;
                return arg > 0.0 ? -std::sqrt(arg) : std::numeric_limits<double>::quiet_NaN();
            }
        }
        return 0.0;
    }

    // IG coefficients live on the log scale so they stay positive.
    std::vector<double> coefficients(std::span<const double> th) const {
        std::vector<double> b(th.begin(), th.begin() + dim());
        if (form == CaviarForm::IG) {
            for (auto& v : b) v = std::exp(v);
        }
        return b;
    }

    // Starting coefficients with unconditional level `level` (< 0), in the
    // unconstrained coordinates.
    std::vector<std::vector<double>> starts(double level, const std::vector<double>& d, std::span<const double> r,
                                            int count) const {
        const double d_mean = std::max(mean_of(d), 1e-8);
        double neg = 0.0;
        for (double v : r) neg += std::max(-v, 0.0);
        neg = std::max(neg / static_cast<double>(r.size()), 1e-8);
        double up_mean = d_mean;
        if (return_driver) {
            double s = 0.0;
            for (double v : r) s += std::max(v, 0.0);
            up_mean = std::max(s / static_cast<double>(r.size()), 1e-8);
        }
        const double persistence[] = {0.7, 0.8, 0.85, 0.9, 0.95};
        const double shares[] = {0.4, 0.8};
        std::vector<std::vector<double>> out;
        for (double c : shares) {
            for (double b1 : persistence) {
                if (static_cast<int>(out.size()) >= count) return out;
                const double base = (1.0 - c) * (1.0 - b1);
                switch (form) {
                    case CaviarForm::SAV:
                        out.push_back({base * level, b1, c * (1.0 - b1) * level / d_mean});
                        break;
                    case CaviarForm::AS:
                        out.push_back({base * level, b1, 0.5 * c * (1.0 - b1) * level / up_mean,
                                       0.5 * c * (1.0 - b1) * level / neg});
                        break;
                    case CaviarForm::IG: {
                        double g = 0.0;
                        for (double v : d) g += v * v;
                        g = std::max(g / static_cast<double>(d.size()), 1e-8);
                        const double l2 = level * level;
                        out.push_back({std::log(base * l2), std::log(b1), std::log(c * (1.0 - b1) * l2 / g)});
                        break;
                    }
                }
            }
        }
        return out;
    }
};

Recursion recursion_for(const MethodSpec& spec) { return {spec.form, spec.driver == Driver::Return}; }

struct EsLink {
    EsForm form;
    std::size_t dim() const { return form == EsForm::Multiplicative ? 1 : 3; }
};

// Quantile path and ES path for unconstrained CAViaR coordinates.
bool caviar_paths(const MethodSpec& spec, std::span<const double> beta, std::span<const double> gamma,
                  const ReturnSeries& window, double q0, double w0, std::vector<double>& var, std::vector<double>& es) {
    const auto rec = recursion_for(spec);
    const auto d = quantile_driver(window, spec.driver);
    const auto& r = window.returns();
    const std::size_t n = r.size();
    var.resize(n + 1);
    es.resize(n + 1);
    var[0] = q0;
    for (std::size_t t = 1; t <= n; ++t) {
        var[t] = rec.step(beta, var[t - 1], r[t - 1], d[t - 1]);
        if (!std::isfinite(var[t])) return false;
    }
    if (spec.es_form == EsForm::Multiplicative) {
        const double k = 1.0 + std::exp(gamma[0]);
        for (std::size_t t = 0; t <= n; ++t) es[t] = k * var[t];
    } else {
        const double g0 = std::exp(gamma[0]), g1 = std::exp(gamma[1]), g2 = logistic(gamma[2]);
        double w = w0;
        es[0] = var[0] - w;
        for (std::size_t t = 1; t <= n; ++t) {
            const double excess = r[t - 1] <= var[t - 1] ? var[t - 1] - r[t - 1] : 0.0;
            w = g0 + g1 * excess + g2 * w;
            es[t] = var[t] - w;
        }
    }
    return true;
}

struct StartValues {
    double q0;
    double w0;
    double ratio;
};

StartValues caviar_start_values(const ReturnSeries& window, double alpha) {
    const auto hs = hs_forecast(window.returns(), alpha);
    const double q0 = std::min(hs.var, -1e-3);
    const double w0 = std::max(hs.var - hs.es, 1e-3);
    return {q0, w0, std::max((q0 - w0) / q0, 1.05)};
}

opt::NelderMeadOptions quantile_nm_options() {
    opt::NelderMeadOptions nm;
    nm.step = 0.1;
    nm.size_tol = 1e-6;
    nm.max_iter = 3000;
    return nm;
}

}  // namespace

CaviarPath caviar_path(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window) {
    const auto sv = caviar_start_values(window, fit.alpha);
    const auto beta = recursion_for(spec).coefficients(fit.beta);
    CaviarPath path;
    if (!caviar_paths(spec, beta, fit.gamma, window, sv.q0, sv.w0, path.var, path.es)) {
        throw NumericalError(fmt::format("{}: quantile recursion diverged", spec.name()));
    }
    return path;
}

QuantileModelFit caviar_fit(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha) {
    if (spec.family != Family::CAViaR) throw std::invalid_argument("not a CAViaR spec");
    require_window(spec, window);
    const auto rec = recursion_for(spec);
    const auto sv = caviar_start_values(window, alpha.value());
    const auto d = quantile_driver(window, spec.driver);
    const auto& r = window.returns();
    const std::size_t nb = rec.dim();
    const double a = alpha.value();
    const double c = 1.0 - std::log(1.0 - a);

    std::vector<double> var, es;
    auto objective = [&](std::span<const double> th) {
        const auto beta = rec.coefficients(th);
        if (!caviar_paths(spec, beta, th.subspan(nb), window, sv.q0, sv.w0, var, es)) return kHuge;
        double sum = 0.0;
        for (std::size_t t = 0; t < r.size(); ++t) {
            const double e = es[t];
            if (!(e < -1e-12)) return kHuge;
            const double v = var[t];
            const double tail = e - v + (r[t] <= v ? (v - r[t]) / a : 0.0);
            sum += -tail / e + std::log(-e) + c;
        }
        return sum / static_cast<double>(r.size());
    };

    std::vector<double> es_start;
    if (spec.es_form == EsForm::Multiplicative) {
        es_start = {std::log(sv.ratio - 1.0)};
    } else {
        const double g2 = 0.5;
        es_start = {std::log(0.5 * sv.w0 * (1.0 - g2)), std::log(0.5 * (1.0 - g2) / a), logit(g2)};
    }
    auto starts = rec.starts(sv.q0, d, r, 10);
    for (auto& s : starts) s.insert(s.end(), es_start.begin(), es_start.end());

    const auto best = opt::nelder_mead_multistart(objective, starts, quantile_nm_options());
    if (!(best.value < kHuge)) {
        throw NumericalError(fmt::format("{}: AL score minimization failed on every start", spec.name()));
    }
    QuantileModelFit fit;
    fit.beta.assign(best.x.begin(), best.x.begin() + static_cast<std::ptrdiff_t>(nb));
    fit.gamma.assign(best.x.begin() + static_cast<std::ptrdiff_t>(nb), best.x.end());
    fit.alpha = a;
    fit.objective = best.value;
    return fit;
}

namespace {

ForecastPair caviar_pair(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window) {
    const auto path = caviar_path(spec, fit, window);
    const double v = path.var.back();
    return {v, std::min(path.es.back(), v)};
}

}  // namespace

MethodForecast caviar_fit_forecast(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha) {
    return {caviar_pair(spec, caviar_fit(spec, window, alpha), window), std::nullopt};
}

// ---------------------------------------------------------------- CARE

double sample_expectile(std::span<const double> x, double tau) {
    if (x.empty()) throw std::invalid_argument("sample_expectile: empty input");
    double mu = mean_of(x);
    for (int it = 0; it < 200; ++it) {
        double sw = 0.0, swx = 0.0;
        for (double v : x) {
            const double w = v < mu ? 1.0 - tau : tau;
            sw += w;
            swx += w * v;
        }
        const double next = swx / sw;
        if (next == mu) break;
        mu = next;
    }
    return mu;
}

namespace {

bool expectile_path(const MethodSpec& spec, std::span<const double> beta, double mu0, const ReturnSeries& window,
                    const std::vector<double>& d, std::vector<double>& mu) {
    const auto rec = recursion_for(spec);
    const auto& r = window.returns();
    mu.resize(r.size() + 1);
    mu[0] = mu0;
    for (std::size_t t = 1; t <= r.size(); ++t) {
        mu[t] = rec.step(beta, mu[t - 1], r[t - 1], d[t - 1]);
        if (!std::isfinite(mu[t])) return false;
    }
    return true;
}

}  // namespace

std::vector<double> care_path(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window) {
    const auto d = quantile_driver(window, spec.driver);
    std::vector<double> mu;
    const auto beta = recursion_for(spec).coefficients(fit.beta);
    if (!expectile_path(spec, beta, sample_expectile(window.returns(), fit.tau), window, d, mu)) {
        throw NumericalError(fmt::format("{}: expectile recursion diverged", spec.name()));
    }
    return mu;
}

QuantileModelFit care_fit_at(const MethodSpec& spec, const ReturnSeries& window, double tau,
                             const std::vector<std::vector<double>>& starts) {
    if (spec.family != Family::CARE) throw std::invalid_argument("not a CARE spec");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("care_fit_at: tau outside (0, 1)");
    const auto rec = recursion_for(spec);
    const auto& r = window.returns();
    const auto d = quantile_driver(window, spec.driver);
    const double mu0 = sample_expectile(r, tau);

    std::vector<double> mu;
    auto objective = [&](std::span<const double> th) {
        if (!expectile_path(spec, rec.coefficients(th), mu0, window, d, mu)) return kHuge;
        double sum = 0.0;
        for (std::size_t t = 0; t < r.size(); ++t) {
            const double u = r[t] - mu[t];
            sum += (u < 0.0 ? 1.0 - tau : tau) * u * u;
        }
        return sum / static_cast<double>(r.size());
    };
    const double level = std::abs(mu0) > 1e-3 ? mu0 : -1e-3;
    const auto& use = starts.empty() ? rec.starts(level, d, r, 5) : starts;
    const auto best = opt::nelder_mead_multistart(objective, use, quantile_nm_options());
    if (!(best.value < kHuge)) {
        throw NumericalError(fmt::format("{}: asymmetric least squares failed on every start", spec.name()));
    }
    QuantileModelFit fit;
    fit.beta = best.x;
    fit.tau = tau;
    fit.objective = best.value;
    return fit;
}

double care_exceedance(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window) {
    const auto mu = care_path(spec, fit, window);
    const auto& r = window.returns();
    std::size_t hits = 0;
    for (std::size_t t = 0; t < r.size(); ++t) hits += r[t] < mu[t] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(r.size());
}

QuantileModelFit care_fit(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha) {
    if (spec.family != Family::CARE) throw std::invalid_argument("not a CARE spec");
    require_window(spec, window);
    const double a = alpha.value();
    double lo = std::log(1e-5), hi = std::log(0.5);

    auto first = care_fit_at(spec, window, a / 4.0);
    first.alpha = a;
    auto best = first;
    double best_gap = std::abs(care_exceedance(spec, first, window) - a);

    auto evaluate = [&](double log_tau, const QuantileModelFit& warm) {
        auto f = care_fit_at(spec, window, std::exp(log_tau), {warm.beta});
        f.alpha = a;
        const double p = care_exceedance(spec, f, window);
        if (std::abs(p - a) < best_gap) {
            best_gap = std::abs(p - a);
            best = f;
        }
        return std::pair{f, p};
    };

    const auto [low_fit, p_low] = evaluate(lo, first);
    if (p_low > a) {
        throw NumericalError(fmt::format("{}: expectile level search cannot bracket an exceedance rate of {}",
                                         spec.name(), a));
    }
    const double p_first = care_exceedance(spec, first, window);
    if (p_first >= a) hi = std::log(first.tau);
    else lo = std::log(first.tau);

    for (int it = 0; it < 14 && best_gap > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto [f, p] = evaluate(mid, best);
        if (p >= a) hi = mid;
        else lo = mid;
    }
    return best;
}

double care_es_multiplier(double tau, double alpha) { return 1.0 + tau / ((1.0 - 2.0 * tau) * alpha); }

namespace {

ForecastPair care_pair(const MethodSpec& spec, const QuantileModelFit& fit, const ReturnSeries& window) {
    const double mu = care_path(spec, fit, window).back();
    return {mu, mu < 0.0 ? mu * care_es_multiplier(fit.tau, fit.alpha) : mu};
}

}  // namespace

MethodForecast care_fit_forecast(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha) {
    return {care_pair(spec, care_fit(spec, window, alpha), window), std::nullopt};
}

// ---------------------------------------------------------------- pool generation

namespace {

MethodForecast simple_forecast(const MethodSpec& spec, std::span<const double> returns, Alpha alpha) {
    switch (spec.family) {
        case Family::HS:
        case Family::GaussianWindow: {
            if (returns.size() < static_cast<std::size_t>(spec.window)) {
                throw DataError(fmt::format("{} needs {} days, the estimation window has {}", spec.name(),
                                            spec.window, returns.size()));
            }
            const auto tail = returns.last(static_cast<std::size_t>(spec.window));
            if (spec.family == Family::HS) return {hs_forecast(tail, alpha.value()), std::nullopt};
            const auto pair = gaussian_window_forecast(tail, alpha);
            ParametricDist d;
            d.scale = (pair.var) / gaussian_var_es(0.0, 1.0, alpha).var;
            return {pair, d};
        }
        case Family::EWMA: {
            if (returns.size() < 2) throw DataError("EWMA needs at least 2 returns");
            ParametricDist d;
            d.scale = std::sqrt(ewma_variance(returns));
            return {gaussian_var_es(0.0, d.scale, alpha), d};
        }
        default: throw std::invalid_argument("simple_forecast: parametric family");
    }
}

}  // namespace

MethodForecast forecast_method(const MethodSpec& spec, const ReturnSeries& window, Alpha alpha) {
    switch (spec.family) {
        case Family::HS:
        case Family::GaussianWindow:
        case Family::EWMA: return simple_forecast(spec, window.returns(), alpha);
        case Family::GARCH:
        case Family::GJR: return garch_fit_forecast(spec, window, alpha);
        case Family::CAViaR: return caviar_fit_forecast(spec, window, alpha);
        case Family::CARE: return care_fit_forecast(spec, window, alpha);
    }
    throw std::invalid_argument("unknown family");
}

GeneratedPool generate_pool(const std::vector<MethodSpec>& specs, const ReturnSeries& series, Alpha alpha,
                            const PoolOptions& options) {
    const int W = options.est_window;
    if (specs.empty()) throw ConfigError("the method list is empty");
    if (W < 2) throw ConfigError("est_window must be at least 2");
    if (options.refit_every < 1) throw ConfigError("refit_every must be at least 1");
    if (series.size() < static_cast<std::size_t>(W) + 1) {
        throw DataError(fmt::format("{} returns leave no forecast origin for an estimation window of {}",
                                    series.size(), W));
    }
    for (const auto& s : specs) {
        if (s.needs_range() && !series.has_range()) {
            throw DataError(fmt::format("{} needs a range column (high/low) that the data lacks", s.name()));
        }
        if (s.needs_rv() && !series.has_rv()) {
            throw DataError(fmt::format("{} needs an rv column that the data lacks", s.name()));
        }
        if ((s.family == Family::HS || s.family == Family::GaussianWindow) && s.window > W) {
            throw ConfigError(fmt::format("{} window exceeds est_window {}", s.name(), W));
        }
    }

    const std::size_t M = specs.size();
    const std::size_t T = series.size() - static_cast<std::size_t>(W);

    // GARCH-type methods sharing (family, driver, dist) share one likelihood fit.
    std::vector<std::vector<std::size_t>> units;
    std::map<std::tuple<int, int, int>, std::size_t> garch_unit;
    for (std::size_t m = 0; m < M; ++m) {
        const auto& s = specs[m];
        if (s.family == Family::GARCH || s.family == Family::GJR) {
            const auto key = std::tuple{static_cast<int>(s.family), static_cast<int>(s.driver), static_cast<int>(s.dist)};
            auto [it, inserted] = garch_unit.try_emplace(key, units.size());
            if (inserted) units.emplace_back();
            units[it->second].push_back(m);
        } else {
            units.push_back({m});
        }
    }

    std::vector<ForecastPair> entries(T * M);
    std::vector<std::vector<std::optional<ParametricDist>>> native(T, std::vector<std::optional<ParametricDist>>(M));
    const auto& r = series.returns();

    parallel_for(units.size(), options.threads, [&](std::size_t u) {
        const auto& members = units[u];
        const auto& lead = specs[members.front()];
        const GarchModel model{lead.family == Family::GJR, lead.driver, lead.dist};
        GarchFit garch;
        QuantileModelFit qfit;
        for (std::size_t t = 0; t < T; ++t) {
            const bool refit = t % static_cast<std::size_t>(options.refit_every) == 0;
            try {
                if (lead.family == Family::HS || lead.family == Family::GaussianWindow || lead.family == Family::EWMA) {
                    const auto f = simple_forecast(lead, std::span<const double>(r).subspan(t, W), alpha);
                    entries[t * M + members.front()] = f.pair;
                    native[t][members.front()] = f.native;
                    continue;
                }
                const auto window = series.slice(t, static_cast<std::size_t>(W));
                switch (lead.family) {
                    case Family::GARCH:
                    case Family::GJR:
                        if (refit) {
                            require_window(lead, window);
                            garch = model.fit(window);
                        }
                        for (auto m : members) {
                            const auto f = garch_forecast(specs[m], model, garch, window, alpha);
                            entries[t * M + m] = f.pair;
                            native[t][m] = f.native;
                        }
                        break;
                    case Family::CAViaR:
                        if (refit) qfit = caviar_fit(lead, window, alpha);
                        entries[t * M + members.front()] = caviar_pair(lead, qfit, window);
                        break;
                    case Family::CARE:
                        if (refit) qfit = care_fit(lead, window, alpha);
                        entries[t * M + members.front()] = care_pair(lead, qfit, window);
                        break;
                    default: break;
                }
            } catch (const NumericalError& e) {
                throw NumericalError(fmt::format("{} at origin {}: {}", lead.name(),
                                                 format_date(series.dates()[W - 1 + t]), e.what()));
            } catch (const DataError& e) {
                throw DataError(fmt::format("{} at origin {}: {}", lead.name(),
                                            format_date(series.dates()[W - 1 + t]), e.what()));
            }
        }
        spdlog::debug("pool: finished {}", lead.name());
    });

    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& p = entries[i];
        if (!p.valid()) {
            throw NumericalError(fmt::format("{} produced an invalid forecast on {}", specs[i % M].name(),
                                             format_date(series.dates()[W + i / M])));
        }
    }

    std::vector<std::string> ids;
    for (const auto& s : specs) ids.push_back(s.name());
    std::vector<Date> dates(series.dates().begin() + W, series.dates().end());
    return {ForecastPool(std::move(ids), std::move(dates), std::move(entries)), std::move(native)};
}

std::filesystem::path native_sidecar_path(const std::filesystem::path& pool_path) {
    auto p = pool_path;
    p.replace_extension(".native.csv");
    return p;
}

void save_native(const std::filesystem::path& path, const GeneratedPool& generated) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    out << "date,method_id,dist,mean,scale,nu,skew\n";
    const auto& pool = generated.pool;
    for (std::size_t t = 0; t < pool.num_origins(); ++t) {
        for (std::size_t m = 0; m < pool.num_methods(); ++m) {
            const auto& d = generated.native[t][m];
            if (!d) continue;
            out << format_date(pool.origins()[t]) << ',' << pool.method_ids()[m] << ',' << to_string(d->kind) << ','
                << format_real(d->mean) << ',' << format_real(d->scale) << ',' << format_real(d->nu) << ','
                << format_real(d->skew) << '\n';
        }
    }
}

std::vector<std::vector<std::optional<ParametricDist>>> load_native(const std::filesystem::path& path,
                                                                    const ForecastPool& pool) {
    std::vector<std::vector<std::optional<ParametricDist>>> out(
        pool.num_origins(), std::vector<std::optional<ParametricDist>>(pool.num_methods()));
    if (!std::filesystem::exists(path)) return out;
    const auto table = csv::read(path);
    const auto c_date = table.require("date", path), c_id = table.require("method_id", path), c_dist = table.require("dist", path),
               c_mean = table.require("mean", path), c_scale = table.require("scale", path), c_nu = table.require("nu", path),
               c_skew = table.require("skew", path);
    std::map<Date, std::size_t> day;
    for (std::size_t t = 0; t < pool.num_origins(); ++t) day[pool.origins()[t]] = t;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto where = fmt::format("{}:{}", path.string(), table.line_numbers[i]);
        try {
            const auto it = day.find(parse_date(row[c_date]));
            const auto m = pool.method_index(row[c_id]);
            if (it == day.end() || !m) continue;
            ParametricDist d;
            d.kind = parse_dist_kind(row[c_dist]);
            d.mean = parse_real(row[c_mean]);
            d.scale = parse_real(row[c_scale]);
            d.nu = parse_real(row[c_nu]);
            d.skew = parse_real(row[c_skew]);
            out[it->second][*m] = d;
        } catch (const Error& e) {
            throw DataError(fmt::format("{}: {}", where, e.what()));
        }
    }
    return out;
}

// ---------------------------------------------------------------- synthetic pool

std::vector<Date> business_days(Date start, std::size_t count) {
    std::vector<Date> out;
    out.reserve(count);
    Date d = start;
    while (out.size() < count) {
        const std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
        d += std::chrono::days(1);
    }
    return out;
}

SynthResult synth_pool(const DgpConfig& cfg, int methods, int days, Alpha alpha) {
    if (methods < 1 || days < 1) throw ConfigError("synth needs at least one method and one day");
    if (!(cfg.alpha + cfg.beta < 1.0) || cfg.omega <= 0.0 || cfg.nu <= 2.0) {
        throw ConfigError("synth GARCH parameters are not covariance stationary");
    }
    if (cfg.noise_min < 0.0 || cfg.noise_max < cfg.noise_min) throw ConfigError("synth noise range is invalid");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::student_t_distribution<double> student(cfg.nu);

    std::vector<double> b(methods), c(methods), s(methods);
    for (int m = 0; m < methods; ++m) {
        b[m] = cfg.var_bias * (2.0 * unit(rng) - 1.0);
        c[m] = cfg.spacing_bias * (2.0 * unit(rng) - 1.0);
        s[m] = cfg.noise_min + (cfg.noise_max - cfg.noise_min) * unit(rng);
    }

    const auto n = static_cast<std::size_t>(days);
    const double t_scale = std::sqrt((cfg.nu - 2.0) / cfg.nu);
    const ForecastPair unit_pair = student_t_var_es(1.0, cfg.nu, alpha);
    const double range_scale = std::sqrt(4.0 * std::log(2.0));

    SynthResult out;
    std::vector<double> r(n), range(n), rv(n);
    out.sigma.resize(n);
    out.truth.resize(n);
    double s2 = cfg.omega / (1.0 - cfg.alpha - cfg.beta);
    for (std::size_t t = 0; t < n; ++t) {
        const double sigma = std::sqrt(s2);
        out.sigma[t] = sigma;
        out.truth[t] = {sigma * unit_pair.var, sigma * unit_pair.es};
        r[t] = sigma * t_scale * student(rng);
        range[t] = sigma * range_scale * std::exp(0.2 * normal(rng) - 0.02);
        rv[t] = s2 * std::exp(0.3 * normal(rng) - 0.045);
        s2 = cfg.omega + cfg.alpha * r[t] * r[t] + cfg.beta * s2;
    }

    std::vector<ForecastPair> entries(n * static_cast<std::size_t>(methods));
    for (std::size_t t = 0; t < n; ++t) {
        const auto& truth = out.truth[t];
        const double spacing = truth.var - truth.es;
        for (int m = 0; m < methods; ++m) {
            const double var = truth.var * (1.0 + b[m]) * std::exp(s[m] * normal(rng));
            const double sp = spacing * (1.0 + c[m]) * std::exp(s[m] * normal(rng));
            entries[t * static_cast<std::size_t>(methods) + static_cast<std::size_t>(m)] = {var, var - sp};
        }
    }

    std::vector<std::string> ids;
    for (int m = 0; m < methods; ++m) ids.push_back(fmt::format("F{:02d}", m + 1));
    auto dates = business_days(parse_date("2000-01-03"), n);
    out.series = ReturnSeries(dates, std::move(r), std::move(range), std::move(rv));
    out.pool = ForecastPool(std::move(ids), std::move(dates), std::move(entries));
    return out;
}

}  // namespace varescomb

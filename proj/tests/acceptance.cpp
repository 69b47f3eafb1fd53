// Acceptance checks, one line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "varescomb/backtest.hpp"
#include "varescomb/combine_central.hpp"
#include "varescomb/combine_interval.hpp"
#include "varescomb/combine_weighted.hpp"
#include "varescomb/dist.hpp"
#include "varescomb/pool.hpp"
#include "varescomb/score.hpp"

using namespace varescomb;

namespace {

const Alpha kAlpha(0.025);

struct Outcome {
    enum class Status { Pass, Fail, Skip } status = Status::Fail;
    std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
    return {ok ? Outcome::Status::Pass : Outcome::Status::Fail, std::move(detail)};
}

// Collects failed sub-checks so the summary line can name them.
struct Checks {
    std::vector<std::string> failed;
    int total = 0;
    void expect(bool ok, const std::string& what) {
        ++total;
        if (!ok) failed.push_back(what);
    }
    Outcome outcome(const std::string& extra = {}) const {
        std::string d = fmt::format("{}/{} checks", total - static_cast<int>(failed.size()), total);
        if (!extra.empty()) d += "; " + extra;
        for (const auto& f : failed) d += "; FAILED " + f;
        return pass_if(failed.empty(), d);
    }
};

// ---------------------------------------------------------------- 1

Outcome criterion_scores() {
    Checks c;
    const ScoreSpec al(ScoreVariant::AL, kAlpha), qs(ScoreVariant::QS, kAlpha);
    const double base = std::log(3.0) + 1.0 - std::log(0.975);
    c.expect(std::abs(joint_score(al, -2.0, -3.0, 0.0) - (-1.0 / 3.0 + base)) < 1e-6, "AL no-hit 1.7906");
    c.expect(std::abs(joint_score(al, -2.0, -3.0, 0.0) - 1.7906) < 5e-5, "AL no-hit printed value");
    c.expect(std::abs(joint_score(al, -2.0, -3.0, -4.0) - ((-1.0 + 2.0 / 0.025) / 3.0 + base)) < 1e-6, "AL hit 28.4573");
    c.expect(std::abs(joint_score(al, -2.0, -3.0, -4.0) - 28.4573) < 5e-5, "AL hit printed value");
    c.expect(std::abs(joint_score(qs, -2.0, -3.0, 0.0) - 0.05) < 1e-6, "QS 0.05");
    c.expect(std::abs(joint_score(qs, -2.0, -3.0, -4.0) - 1.95) < 1e-6, "QS 1.95");

    const auto truth = gaussian_var_es(0.0, 1.0, kAlpha);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n01;
    std::vector<double> draws(100000);
    for (auto& r : draws) r = n01(rng);
    std::string margins;
    for (auto v : {ScoreVariant::AL, ScoreVariant::NZ, ScoreVariant::FZG}) {
        const ScoreSpec spec(v, kAlpha);
        for (double f : {1.2, 0.8}) {
            double s = 0.0, s2 = 0.0;
            for (double r : draws) {
                const double d = joint_score(spec, truth.var * f, truth.es * f, r) - joint_score(spec, truth.var, truth.es, r);
                s += d;
                s2 += d * d;
            }
            const double n = static_cast<double>(draws.size());
            const double mean = s / n;
            const double se = std::sqrt((s2 / n - mean * mean) / (n - 1.0));
            margins += fmt::format(" {}x{}:{:.1f}se", to_string(v), f, mean / se);
            c.expect(mean > 2.0 * se, fmt::format("{} distortion {}", to_string(v), f));
        }
    }
    return c.outcome("MC margins" + margins);
}

// ---------------------------------------------------------------- 2

std::vector<ForecastPair> random_column(std::mt19937_64& rng, std::size_t M) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ForecastPair> col(M);
    for (auto& p : col) {
        p.var = -0.5 - 2.5 * u(rng);
        p.es = p.var - 2.0 * u(rng);
    }
    return col;
}

double enumerate_trim(std::vector<double> x, int drop_low, int drop_high) {
    for (int i = 0; i < drop_low; ++i) x.erase(std::min_element(x.begin(), x.end()));
    for (int i = 0; i < drop_high; ++i) x.erase(std::max_element(x.begin(), x.end()));
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

ForecastPair oracle_trim(const std::vector<ForecastPair>& col, const TrimSpec& spec) {
    std::vector<double> v, e;
    for (const auto& p : col) {
        v.push_back(p.var);
        e.push_back(p.es);
    }
    int vl = 0, vh = 0, el = 0, eh = 0;
    const int n = spec.n;
    switch (spec.kind) {
        case TrimKind::Symmetric: vl = vh = el = eh = n; break;
        case TrimKind::Exterior: vh = n; el = n; break;
        case TrimKind::Interior: vl = n; eh = n; break;
        case TrimKind::Lower: vl = el = n; break;
        case TrimKind::Higher: vh = eh = n; break;
        case TrimKind::Flexible:
            (spec.n_var >= 0 ? vl : vh) = std::abs(spec.n_var);
            (spec.n_es >= 0 ? el : eh) = std::abs(spec.n_es);
            break;
    }
    ForecastPair out{enumerate_trim(v, vl, vh), enumerate_trim(e, el, eh)};
    if (out.es > out.var) out.es = out.var;
    return out;
}

Outcome criterion_trims() {
    Checks c;
    const std::vector<TrimKind> fixed{TrimKind::Symmetric, TrimKind::Exterior, TrimKind::Interior, TrimKind::Lower,
                                      TrimKind::Higher};
    std::mt19937_64 rng(3);
    bool zero_ok = true;
    for (int rep = 0; rep < 200; ++rep) {
        const auto col = random_column(rng, 5 + rep % 86);
        const auto avg = simple_average(col);
        for (auto k : fixed) zero_ok = zero_ok && trimmed_combine(col, TrimSpec::fixed(k, 0)) == avg;
        zero_ok = zero_ok && trimmed_combine(col, TrimSpec::flexible(0, 0)) == avg;
    }
    c.expect(zero_ok, "n = 0 equals simple average");

    bool flex_ok = true;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t M = 5 + rep % 30;
        const auto col = random_column(rng, M);
        const int n = static_cast<int>(rep % M);
        flex_ok = flex_ok &&
                  trimmed_combine(col, TrimSpec::flexible(-n, n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Exterior, n)) &&
                  trimmed_combine(col, TrimSpec::flexible(n, -n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Interior, n)) &&
                  trimmed_combine(col, TrimSpec::flexible(n, n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Lower, n)) &&
                  trimmed_combine(col, TrimSpec::flexible(-n, -n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Higher, n));
    }
    c.expect(flex_ok, "flexible reproduces exterior/interior/lower/higher on 1000 columns");

    std::size_t compared = 0;
    double worst = 0.0;
    for (std::size_t M : {5u, 10u, 90u}) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto col = random_column(rng, M);
            std::vector<TrimSpec> specs;
            for (auto k : fixed) {
                const auto cand = trim_candidates(k, M);
                specs.insert(specs.end(), cand.begin(), cand.end());
            }
            const auto flex = trim_candidates(TrimKind::Flexible, M);
            specs.insert(specs.end(), flex.begin(), flex.end());
            for (const auto& s : specs) {
                const auto a = trimmed_combine(col, s);
                const auto b = oracle_trim(col, s);
                worst = std::max({worst, std::abs(a.var - b.var), std::abs(a.es - b.es)});
                ++compared;
            }
        }
    }
    c.expect(worst <= 1e-12, fmt::format("enumerate-sort oracle (max diff {:.2e})", worst));
    return c.outcome(fmt::format("{} trims vs oracle, max diff {:.1e}", compared, worst));
}

// ---------------------------------------------------------------- 3

ParametricDist gaussian(double mean, double sd) {
    ParametricDist d;
    d.kind = ParametricDist::Kind::Gaussian;
    d.mean = mean;
    d.scale = sd;
    return d;
}

Outcome criterion_grid() {
    Checks c;
    auto grid = build_candidate_grid(kAlpha);
    c.expect(grid.sigmas().size() == 300 && grid.nus().size() == 100 && grid.skews().size() == 200, "300x100x200");
    c.expect(grid.sigmas().back() == 10.0 && std::abs(grid.sigmas().front() - 10.0 / 300) < 1e-12, "sigma endpoints");
    c.expect(grid.nus().back() == 30.0 && std::abs(grid.nus().front() - (2.0 + 28.0 / 100)) < 1e-12, "nu endpoints");
    c.expect(grid.skews().front() > -1.0 && grid.skews().back() < 1.0 &&
                 std::abs(grid.skews()[1] - grid.skews()[0] - 2.0 / 201) < 1e-12,
             "skew endpoints");

    // Round trip: the fitted pair is at least as close as the cell nearest the true parameters.
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto nearest = [](const std::vector<double>& axis, double v) {
        return static_cast<int>(std::min_element(axis.begin(), axis.end(),
                                                 [v](double a, double b) { return std::abs(a - v) < std::abs(b - v); }) -
                                axis.begin());
    };
    int within = 0;
    double worst_err = 0.0;
    for (int s = 0; s < 50; ++s) {
        const SkewTParams truth{0.3 + 3 * u(rng), 3 + 20 * u(rng), -0.8 + 1.2 * u(rng)};
        const auto target = skewt_var_es(truth, kAlpha);
        const auto fitted = skewt_var_es(fit_skewt_to_var_es(grid, target), kAlpha);
        const auto local = grid.pair({nearest(grid.sigmas(), truth.sigma), nearest(grid.nus(), truth.nu),
                                      nearest(grid.skews(), truth.skew)});
        const double err = std::hypot(fitted.var - target.var, fitted.es - target.es);
        const double bound = std::hypot(local.var - target.var, local.es - target.es);
        worst_err = std::max(worst_err, err);
        within += err <= bound + 1e-12 ? 1 : 0;
    }
    c.expect(within == 50, fmt::format("round trip within one grid step ({}/50)", within));

    const double step = 40.0 / 999.0;
    const auto truth = gaussian_var_es(0.0, 1.0, kAlpha);
    const std::vector<CdfCurve> one{sample_cdf(gaussian(0.0, 1.0))};
    const auto pa = probability_average(one, kAlpha);
    c.expect(std::abs(pa.var - truth.var) <= step && std::abs(pa.es - truth.es) <= step,
             fmt::format("single Gaussian ({:.4f}, {:.4f})", pa.var - truth.var, pa.es - truth.es));

    const std::vector<CdfCurve> mix{sample_cdf(gaussian(0.0, 1.0)), sample_cdf(gaussian(0.0, 3.0))};
    const auto pm = probability_average(mix, kAlpha);
    const boost::math::normal n01;
    auto f = [&](double x) { return 0.5 * boost::math::cdf(n01, x) + 0.5 * boost::math::cdf(n01, x / 3.0) - 0.025; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(f, -20.0, 0.0, tol, iters);
    const double q = 0.5 * (lo + hi);
    const double qavg = 0.5 * (boost::math::quantile(n01, 0.025) + 3.0 * boost::math::quantile(n01, 0.025));
    c.expect(pm.var <= qavg, fmt::format("widening {:.3f} <= {:.3f}", pm.var, qavg));
    c.expect(std::abs(pm.var - q) <= step, "mixture VaR vs root");
    return c.outcome(fmt::format("round-trip worst error {:.4f}", worst_err));
}

// ---------------------------------------------------------------- 4

std::size_t brute_halfspace(const std::vector<ForecastPair>& pts, const ForecastPair& p) {
    std::vector<double> crit;
    for (const auto& q : pts) {
        const double dx = q.var - p.var, dy = q.es - p.es;
        if (dx == 0 && dy == 0) continue;
        const double th = std::atan2(dy, dx);
        crit.push_back(std::remainder(th + M_PI / 2, 2 * M_PI));
        crit.push_back(std::remainder(th - M_PI / 2, 2 * M_PI));
    }
    std::size_t best = pts.size();
    if (crit.empty()) return best;
    std::sort(crit.begin(), crit.end());
    for (std::size_t i = 0; i < crit.size(); ++i) {
        const double a = crit[i];
        const double b = i + 1 < crit.size() ? crit[i + 1] : crit[0] + 2 * M_PI;
        if (b - a < 1e-12) continue;
        const double th = 0.5 * (a + b);
        std::size_t count = 0;
        for (const auto& q : pts) {
            count += std::cos(th) * (q.var - p.var) + std::sin(th) * (q.es - p.es) >= -1e-15 ? 1 : 0;
        }
        best = std::min(best, count);
    }
    return best;
}

double orient(const ForecastPair& a, const ForecastPair& b, const ForecastPair& c) {
    return (b.var - a.var) * (c.es - a.es) - (b.es - a.es) * (c.var - a.var);
}

std::uint64_t brute_simplicial(const std::vector<ForecastPair>& pts, const ForecastPair& p) {
    std::uint64_t count = 0;
    const std::size_t M = pts.size();
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = i + 1; j < M; ++j) {
            for (std::size_t k = j + 1; k < M; ++k) {
                if (orient(pts[i], pts[j], pts[k]) == 0.0) {
                    const bool on_line = orient(pts[i], pts[j], p) == 0.0 && orient(pts[j], pts[k], p) == 0.0 &&
                                         orient(pts[i], pts[k], p) == 0.0;
                    const double lo = std::min({pts[i].var, pts[j].var, pts[k].var});
                    const double hi = std::max({pts[i].var, pts[j].var, pts[k].var});
                    count += on_line && p.var >= lo && p.var <= hi ? 1 : 0;
                    continue;
                }
                const double s1 = orient(pts[i], pts[j], p), s2 = orient(pts[j], pts[k], p), s3 = orient(pts[k], pts[i], p);
                count += (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0) ? 1 : 0;
            }
        }
    }
    return count;
}

Outcome criterion_depth() {
    Checks c;
    const std::vector<ForecastPair> sq{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}};
    c.expect(halfspace_depth(sq, {0.5, 0.5}) == 3.0 / 5.0, "halfspace center 3/5");
    c.expect(halfspace_depth(sq, {0.0, 0.0}) == 1.0 / 5.0, "halfspace corner 1/5");
    c.expect(simplicial_depth(sq, {0.5, 0.5}) == 1.0, "simplicial center 1");
    c.expect(simplicial_depth(sq, {0.0, 0.0}) == 6.0 / 10.0, "simplicial corner 6/10");

    std::mt19937_64 rng(21);
    std::normal_distribution<double> n01;
    int mismatches = 0, probes_total = 0;
    for (int cloud = 0; cloud < 100; ++cloud) {
        const std::size_t M = 3 + cloud % 28;
        std::vector<ForecastPair> pts(M);
        for (auto& p : pts) {
            p.var = n01(rng);
            p.es = p.var - std::abs(n01(rng));
        }
        std::vector<ForecastPair> probes = pts;
        for (int k = 0; k < 3; ++k) probes.push_back({n01(rng), n01(rng) - 1.0});
        for (const auto& p : probes) {
            ++probes_total;
            if (halfspace_depth_count(pts, p) != brute_halfspace(pts, p)) ++mismatches;
            if (simplicial_depth_count(pts, p) != brute_simplicial(pts, p)) ++mismatches;
        }
    }
    c.expect(mismatches == 0, fmt::format("{} brute-force mismatches", mismatches));
    return c.outcome(fmt::format("100 clouds, {} probes", probes_total));
}

// ---------------------------------------------------------------- 5

ForecastPool scaled_pool(const SynthResult& s, const std::vector<std::pair<double, double>>& scales) {
    std::vector<std::string> ids;
    for (std::size_t m = 0; m < scales.size(); ++m) ids.push_back("M" + std::to_string(m));
    std::vector<ForecastPair> entries;
    for (const auto& tp : s.truth) {
        for (const auto& [sv, sd] : scales) {
            const double var = tp.var * sv;
            entries.push_back({var, var - (tp.var - tp.es) * sd});
        }
    }
    return ForecastPool(ids, s.series.dates(), entries);
}

double deviation_from_uniform(const WeightVector& w) {
    double worst = 0.0;
    for (double x : w.w) worst = std::max(worst, std::abs(x - 1.0 / static_cast<double>(w.size())));
    return worst;
}

Outcome criterion_weights() {
    Checks c;
    DgpConfig cfg;
    cfg.seed = 17;
    const auto s = synth_pool(cfg, 1, 600, kAlpha);
    const auto pool = scaled_pool(s, {{1.0, 1.0}, {1.4, 0.6}, {0.7, 1.3}, {1.2, 1.2}});
    const auto& r = s.series.returns();
    const ScoreSpec al(ScoreVariant::AL, kAlpha);

    const auto sums = summed_scores(pool, r, al);
    const auto flat = relative_score_weights({0.0}, sums);
    c.expect(std::all_of(flat.w.begin(), flat.w.end(), [&](double w) { return w == 1.0 / 4.0; }), "lambda 0 uniform");
    const auto sharp = relative_score_weights({1e6}, sums);
    const auto best = static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
    c.expect(sharp.w[best] >= 0.999, fmt::format("lambda 1e6 best weight {:.6f}", sharp.w[best]));

    const auto plain = fit_minimum_score(pool, r, al, MinScoreMode::Spacing);
    MinScoreOptions zero;
    zero.lambda1 = zero.lambda2 = 0.0;
    const auto z = fit_minimum_score(pool, r, al, MinScoreMode::Spacing, zero);
    c.expect(std::abs(z.penalized_objective - plain.objective) <= 1e-8, "ridge 0 objective");
    MinScoreOptions heavy;
    heavy.lambda1 = heavy.lambda2 = 1e6;
    const auto h = fit_minimum_score(pool, r, al, MinScoreMode::Spacing, heavy);
    const double dev = std::max(deviation_from_uniform(h.w_var), deviation_from_uniform(h.w_second));
    c.expect(dev < 1e-3, fmt::format("ridge 1e6 deviation {:.2e}", dev));
    return c.outcome(fmt::format("ridge 1e6 max deviation from uniform {:.1e}", dev));
}

// ---------------------------------------------------------------- 6

Outcome criterion_calibration() {
    Checks c;
    std::mt19937_64 rng(11);
    std::bernoulli_distribution hit(0.025);
    std::uniform_real_distribution<double> vd(-3.0, -1.0);
    int uc = 0, cc = 0, dq = 0;
    const int reps = 1000;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<bool> h(1800);
        std::vector<double> var(1800);
        for (std::size_t t = 0; t < h.size(); ++t) {
            h[t] = hit(rng);
            var[t] = vd(rng);
        }
        uc += uc_test(h, kAlpha).reject_at_5pct;
        cc += cc_test(h, kAlpha).reject_at_5pct;
        dq += dq_test(h, var, kAlpha).reject_at_5pct;
    }
    auto in_band = [&](int k) { return k >= 30 && k <= 70; };
    c.expect(in_band(uc), fmt::format("UC size {:.1f}%", uc / 10.0));
    c.expect(in_band(cc), fmt::format("CC size {:.1f}%", cc / 10.0));
    c.expect(in_band(dq), fmt::format("DQ size {:.1f}%", dq / 10.0));

    int power = 0;
    const int es_reps = 100;
    for (int rep = 0; rep < es_reps; ++rep) {
        DgpConfig cfg;
        cfg.seed = 1000 + static_cast<std::uint64_t>(rep);
        const auto s = synth_pool(cfg, 1, 1800, kAlpha);
        const auto& ret = s.series.returns();
        std::vector<double> var(ret.size()), es(ret.size());
        for (std::size_t t = 0; t < ret.size(); ++t) {
            var[t] = s.truth[t].var;
            es[t] = 0.8 * s.truth[t].es;
        }
        const auto res = es_bootstrap_test(ret, var, es, 10000, static_cast<std::uint64_t>(rep));
        power += res.result && res.result->reject_at_5pct;
    }
    c.expect(power > 0.8 * es_reps, fmt::format("ES power {}%", power));
    return c.outcome(fmt::format("size UC {:.1f}% CC {:.1f}% DQ {:.1f}%, ES power {}/{}", uc / 10.0, cc / 10.0,
                                 dq / 10.0, power, es_reps));
}

// ---------------------------------------------------------------- 7

Outcome criterion_pipeline(std::size_t refit_every) {
    Checks c;
    DgpConfig dgp;
    dgp.seed = 42;
    const auto s = synth_pool(dgp, 30, 4000, kAlpha);
    const auto& ret = s.series.returns();

    BacktestConfig cfg;
    cfg.est_window = 900;
    cfg.eval_span = 1000;
    cfg.refit_every = refit_every;
    cfg.alpha = kAlpha;
    const std::vector<std::string> ids(kCombinerIds.begin(), kCombinerIds.end());
    const auto grid = std::make_shared<const CandidateGrid>(build_candidate_grid(kAlpha));
    const auto report = run_backtest(cfg, s.pool, ret, {}, ids, grid);

    const std::size_t first = s.pool.num_origins() - cfg.eval_span;
    const ScoreSpec al(ScoreVariant::AL, kAlpha);
    double true_avg = 0.0;
    for (std::size_t d = 0; d < cfg.eval_span; ++d) true_avg += joint_score(al, s.truth[first + d].var, s.truth[first + d].es, ret[first + d]);
    true_avg /= static_cast<double>(cfg.eval_span);

    const boost::math::binomial bin(static_cast<double>(cfg.eval_span), 0.025);
    const double lo = boost::math::quantile(bin, 0.005), hi = boost::math::quantile(boost::math::complement(bin, 0.005));

    auto avg_al = [&](const ForecastPath& p, int& hits, std::size_t& failed) {
        double total = 0.0;
        hits = 0;
        failed = 0;
        for (std::size_t d = 0; d < cfg.eval_span; ++d) {
            if (!p.pairs[d]) {
                ++failed;
                continue;
            }
            total += joint_score(al, p.pairs[d]->var, p.pairs[d]->es, report.returns[d]);
            hits += report.returns[d] <= p.pairs[d]->var ? 1 : 0;
        }
        return total / static_cast<double>(cfg.eval_span - failed);
    };
    int hits = 0;
    std::size_t failed = 0;
    const double dyn = avg_al(report.path(kDynamicSelectionId), hits, failed);
    int beat = 0;
    std::string hit_out, scores;
    for (const auto& id : ids) {
        const double a = avg_al(report.path(id), hits, failed);
        c.expect(failed == 0, fmt::format("{} failed on {} days", id, failed));
        const bool hit_ok = hits >= lo && hits <= hi;
        c.expect(hit_ok, fmt::format("{} hit count {} outside [{}, {}]", id, hits, lo, hi));
        beat += a <= dyn ? 1 : 0;
        if (id == "min_score" || id == "min_score_ratio" || id == "min_score_ridge" || id == "prob_average") {
            const double rel = a / true_avg - 1.0;
            c.expect(std::abs(rel) <= 0.05, fmt::format("{} AL {:.4f} vs truth {:.4f}", id, a, true_avg));
            scores += fmt::format(" {} {:+.2f}%", id, 100.0 * rel);
        }
    }
    c.expect(beat >= 10, fmt::format("{} of 19 beat dynamic selection", beat));
    return c.outcome(fmt::format("hit band [{}, {}]; {} of 19 beat dynamic selection; vs truth:{}; refit every {} days",
                                 lo, hi, beat, scores, refit_every));
}

// ---------------------------------------------------------------- 8

Outcome criterion_mcs() {
    Checks c;
    int eliminated = 0, nested = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 rng(500 + static_cast<std::uint64_t>(rep));
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<std::vector<double>> losses(8, std::vector<double>(1000));
        for (std::size_t m = 0; m < losses.size(); ++m) {
            for (auto& v : losses[m]) v = 10.0 + 0.02 * static_cast<double>(m) + z(rng);
        }
        std::vector<std::vector<double>> shifted = losses;
        for (auto& v : shifted[5]) v += 5.0;
        const McsOptions opt{0.75, 5000, 21, static_cast<std::uint64_t>(rep)};
        const auto res = mcs(shifted, opt);
        const bool out = std::find(res.surviving.begin(), res.surviving.end(), 5) == res.surviving.end() &&
                         !res.eliminated.empty() && res.eliminated.front().method == 5;
        eliminated += out ? 1 : 0;

        bool ok = true;
        std::vector<std::size_t> previous;
        for (double conf : {0.5, 0.75, 0.9, 0.95}) {
            auto r = mcs(losses, {conf, 5000, 21, static_cast<std::uint64_t>(rep)});
            std::sort(r.surviving.begin(), r.surviving.end());
            ok = ok && std::includes(r.surviving.begin(), r.surviving.end(), previous.begin(), previous.end());
            previous = r.surviving;
        }
        nested += ok ? 1 : 0;
    }
    c.expect(eliminated == reps, fmt::format("dominated method eliminated first {}/{}", eliminated, reps));
    c.expect(nested == reps, fmt::format("nesting {}/{}", nested, reps));
    return c.outcome(fmt::format("+5 sigma eliminated {}/{}, nested across 50/75/90/95% in {}/{}", eliminated, reps,
                                 nested, reps));
}

// ---------------------------------------------------------------- 9

Outcome criterion_describe() {
    const char* path = std::getenv("VARESCOMB_FTSE_RETURNS");
    if (path == nullptr || *path == '\0') {
        return {Outcome::Status::Skip, "conditional: set VARESCOMB_FTSE_RETURNS to a FTSE 100 returns CSV to run"};
    }
    const auto s = describe(load_returns(path));
    auto round_to = [](double x, int dp) {
        const double f = std::pow(10.0, dp);
        return std::round(x * f) / f;
    };
    Checks c;
    c.expect(round_to(s.mean, 4) == 0.0024, fmt::format("mean {:.4f}", s.mean));
    c.expect(round_to(s.min, 3) == -10.137, fmt::format("min {:.3f}", s.min));
    c.expect(round_to(s.max, 3) == 9.485, fmt::format("max {:.3f}", s.max));
    c.expect(round_to(s.kurtosis, 3) == 10.471, fmt::format("kurtosis {:.3f}", s.kurtosis));
    return c.outcome(fmt::format("mean {:.4f} min {:.3f} max {:.3f} kurtosis {:.3f}", s.mean, s.min, s.max, s.kurtosis));
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    std::size_t refit_every = 10;
    if (argc > 1) refit_every = static_cast<std::size_t>(std::stoul(argv[1]));

    const std::vector<std::function<Outcome()>> criteria{
        criterion_scores, criterion_trims,       criterion_grid,
        criterion_depth,  criterion_weights,     criterion_calibration,
        [refit_every] { return criterion_pipeline(refit_every); },
        criterion_mcs,    criterion_describe};

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i]();
        } catch (const std::exception& e) {
            out = {Outcome::Status::Fail, fmt::format("exception: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = out.status == Outcome::Status::Pass ? "PASS" : out.status == Outcome::Status::Fail ? "FAIL" : "SKIP";
        failures += out.status == Outcome::Status::Fail ? 1 : 0;
        std::cout << fmt::format("criterion {}: {} ({:.1f}s) {}", i + 1, tag, secs, out.detail) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}

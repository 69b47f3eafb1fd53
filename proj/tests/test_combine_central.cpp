#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "varescomb/combine_central.hpp"

using namespace varescomb;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<ForecastPair> random_column(std::mt19937_64& rng, std::size_t M) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ForecastPair> col(M);
    for (auto& p : col) {
        p.var = -0.5 - 2.5 * u(rng);
        p.es = p.var - 2.0 * u(rng);
    }
    return col;
}

// Removes elements one at a time from a multiset, then averages the rest.
double enumerate_trim(std::vector<double> x, int drop_low, int drop_high) {
    for (int i = 0; i < drop_low; ++i) x.erase(std::min_element(x.begin(), x.end()));
    for (int i = 0; i < drop_high; ++i) x.erase(std::max_element(x.begin(), x.end()));
    double s = 0.0;
    for (double v : x) s += v;
    return s / x.size();
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

const std::vector<TrimKind> kFixedKinds{TrimKind::Symmetric, TrimKind::Exterior, TrimKind::Interior, TrimKind::Lower,
                                        TrimKind::Higher};

ForecastPool pool_from(const std::vector<std::vector<ForecastPair>>& columns) {
    std::vector<Date> dates;
    std::vector<ForecastPair> entries;
    std::vector<std::string> ids;
    for (std::size_t m = 0; m < columns.front().size(); ++m) ids.push_back("m" + std::to_string(m));
    for (std::size_t t = 0; t < columns.size(); ++t) {
        dates.push_back(parse_date("2010-01-01") + std::chrono::days(t));
        entries.insert(entries.end(), columns[t].begin(), columns[t].end());
    }
    return ForecastPool(ids, dates, entries);
}

}  // namespace

TEST_CASE("simple average and median basics") {
    const std::vector<ForecastPair> two{{-1, -2}, {-3, -4}};
    CHECK(simple_average(two) == ForecastPair{-2, -3});
    const std::vector<ForecastPair> one{{-1.25, -1.5}};
    CHECK(simple_average(one) == one[0]);
    CHECK(median_combine(one) == one[0]);
    const std::vector<ForecastPair> three{{-1, -5}, {-2, -3}, {-3, -4}};
    CHECK(median_combine(three).var == -2.0);
    CHECK(median_combine(three).es == -4.0);
    const std::vector<ForecastPair> four{{-1, -5}, {-2, -3}, {-3, -4}, {-4, -6}};
    CHECK(median_combine(four).var == -2.5);
    CHECK_THROWS(simple_average(std::span<const ForecastPair>{}));
    CHECK_THROWS(median_combine(std::span<const ForecastPair>{}));
}

TEST_CASE("simple average matches a loop oracle and medians never cross") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto col = random_column(rng, rep % 2 == 0 ? 90 : 37);
        double sv = 0.0, se = 0.0;
        for (const auto& p : col) {
            sv += p.var;
            se += p.es;
        }
        const auto avg = simple_average(col);
        CHECK_THAT(avg.var, WithinAbs(sv / col.size(), 1e-12));
        CHECK_THAT(avg.es, WithinAbs(se / col.size(), 1e-12));
        const auto med = median_combine(col);
        CHECK(med.es <= med.var);
    }
}

TEST_CASE("central combiners are permutation invariant") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep) {
        auto col = random_column(rng, 21);
        auto shuffled = col;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(simple_average(col) == simple_average(shuffled));
        CHECK(median_combine(col) == median_combine(shuffled));
        for (auto kind : kFixedKinds) {
            CHECK(trimmed_combine(col, TrimSpec::fixed(kind, 3)) == trimmed_combine(shuffled, TrimSpec::fixed(kind, 3)));
        }
        CHECK(trimmed_combine(col, TrimSpec::flexible(-4, 2)) == trimmed_combine(shuffled, TrimSpec::flexible(-4, 2)));
    }
}

TEST_CASE("KDE mode on degenerate and bimodal samples") {
    const std::vector<double> same(10, -1.7);
    CHECK_THAT(kde_mode(same, 0.3), WithinAbs(-1.7, 1e-9));

    std::vector<double> bimodal(45, -1.0);
    bimodal.insert(bimodal.end(), 45, -3.0);
    CHECK_THAT(kde_mode(bimodal, 0.1), WithinAbs(-3.0, 1e-6));
    CHECK(kde_mode(bimodal, 0.1) < -2.0);

    std::vector<ForecastPair> col;
    for (int i = 0; i < 5; ++i) col.push_back({-2.0, -2.5});
    const auto m = mode_combine(col, KdeSpec{0.2, 0.2});
    CHECK_THAT(m.var, WithinAbs(-2.0, 1e-9));
    CHECK_THAT(m.es, WithinAbs(-2.5, 1e-9));
    CHECK_THROWS_AS(mode_combine(col, KdeSpec{0.0, 1.0}), ConfigError);
}

TEST_CASE("KDE mode agrees with a dense-grid argmax") {
    std::mt19937_64 rng(5);
    std::gamma_distribution<double> g(3.0, 0.5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(90);
        for (auto& v : x) v = -g(rng);
        const double h = silverman_bandwidth(x);
        auto density = [&](double at) {
            double s = 0.0;
            for (double v : x) s += std::exp(-0.5 * std::pow((at - v) / h, 2));
            return s;
        };
        double best = 0.0, best_d = -1.0;
        const double lo = *std::min_element(x.begin(), x.end()) - 3 * h;
        const double hi = *std::max_element(x.begin(), x.end()) + 3 * h;
        for (int i = 0; i <= 200000; ++i) {
            const double at = lo + (hi - lo) * i / 200000.0;
            const double d = density(at);
            if (d > best_d) {
                best_d = d;
                best = at;
            }
        }
        CHECK(density(kde_mode(x, h)) >= best_d * (1.0 - 1e-9));
        CHECK_THAT(kde_mode(x, h), WithinAbs(best, 1e-3));
    }
}

TEST_CASE("KDE mode locates the mode of a unimodal density") {
    // Gaussian draws with mode -2; Silverman bandwidth.
    int within = 0;
    const int seeds = 200;
    for (int seed = 0; seed < seeds; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        std::normal_distribution<double> n(-2.0, 0.5);
        std::vector<double> x(90);
        for (auto& v : x) v = n(rng);
        const double h = silverman_bandwidth(x);
        within += std::abs(kde_mode(x, h) + 2.0) <= 2.0 * h ? 1 : 0;
    }
    INFO("fraction within two bandwidths: " << static_cast<double>(within) / seeds);
    CHECK(within >= 0.95 * seeds);
}

TEST_CASE("silverman bandwidth follows the rule of thumb") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
    double mean = 4.5, ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / 7.0);
    const double iqr = (6.25 - 2.75) / 1.34;
    CHECK_THAT(silverman_bandwidth(x), WithinAbs(0.9 * std::min(sd, iqr) * std::pow(8.0, -0.2), 1e-12));
}

TEST_CASE("every trim with n = 0 equals the simple average exactly") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        const auto col = random_column(rng, 5 + rep % 40);
        const auto avg = simple_average(col);
        for (auto kind : kFixedKinds) CHECK(trimmed_combine(col, TrimSpec::fixed(kind, 0)) == avg);
        CHECK(trimmed_combine(col, TrimSpec::flexible(0, 0)) == avg);
    }
}

TEST_CASE("symmetric trim hand example") {
    const std::vector<ForecastPair> col{{-1.0, -2.0}, {-1.2, -2.2}, {-1.4, -2.4}, {-1.6, -2.6}, {-1.8, -2.8}};
    const auto out = trimmed_combine(col, TrimSpec::fixed(TrimKind::Symmetric, 1));
    CHECK_THAT(out.var, WithinAbs(-1.4, 1e-15));
    CHECK_THAT(out.es, WithinAbs(-2.4, 1e-15));
    CHECK_THROWS_AS(trimmed_combine(col, TrimSpec::fixed(TrimKind::Symmetric, 2)), ConfigError);
    CHECK_THROWS_AS(trimmed_combine(col, TrimSpec::fixed(TrimKind::Lower, 5)), ConfigError);
    CHECK_THROWS_AS(trimmed_combine(col, TrimSpec::flexible(-5, 0)), ConfigError);
}

TEST_CASE("exterior trim drops the highest VaR and the lowest ES") {
    const std::vector<ForecastPair> col{{-1.0, -1.5}, {-1.3, -2.5}, {-1.1, -1.9}, {-2.0, -2.2}, {-1.5, -3.0}};
    const auto out = trimmed_combine(col, TrimSpec::fixed(TrimKind::Exterior, 1));
    CHECK_THAT(out.var, WithinAbs((-1.3 - 1.1 - 2.0 - 1.5) / 4, 1e-15));
    CHECK_THAT(out.es, WithinAbs((-1.5 - 2.5 - 1.9 - 2.2) / 4, 1e-15));
}

TEST_CASE("trimmed means match the enumerate-sort oracle for every legal n") {
    std::mt19937_64 rng(4);
    for (std::size_t M : {5u, 10u, 90u}) {
        const int reps = M == 90 ? 3 : 30;
        for (int rep = 0; rep < reps; ++rep) {
            const auto col = random_column(rng, M);
            for (auto kind : kFixedKinds) {
                for (const auto& spec : trim_candidates(kind, M)) {
                    const auto a = trimmed_combine(col, spec);
                    const auto b = oracle_trim(col, spec);
                    REQUIRE_THAT(a.var, WithinAbs(b.var, 1e-12));
                    REQUIRE_THAT(a.es, WithinAbs(b.es, 1e-12));
                }
            }
            const auto flex = trim_candidates(TrimKind::Flexible, M);
            const std::size_t stride = M == 90 ? 97 : 1;
            for (std::size_t c = 0; c < flex.size(); c += stride) {
                const auto a = trimmed_combine(col, flex[c]);
                const auto b = oracle_trim(col, flex[c]);
                REQUIRE_THAT(a.var, WithinAbs(b.var, 1e-12));
                REQUIRE_THAT(a.es, WithinAbs(b.es, 1e-12));
            }
        }
    }
}

TEST_CASE("flexible trimming reproduces the exterior, interior, lower and higher kinds") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t M = 5 + rep % 30;
        const auto col = random_column(rng, M);
        const int n = static_cast<int>(rep % M);
        CHECK(trimmed_combine(col, TrimSpec::flexible(-n, n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Exterior, n)));
        CHECK(trimmed_combine(col, TrimSpec::flexible(n, -n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Interior, n)));
        CHECK(trimmed_combine(col, TrimSpec::flexible(n, n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Lower, n)));
        CHECK(trimmed_combine(col, TrimSpec::flexible(-n, -n)) == trimmed_combine(col, TrimSpec::fixed(TrimKind::Higher, n)));
    }
}

TEST_CASE("symmetric trimming with n >= 1 lies outside the flexible family") {
    std::mt19937_64 rng(7);
    const auto col = random_column(rng, 9);
    const auto target = trimmed_combine(col, TrimSpec::fixed(TrimKind::Symmetric, 1));
    int matches = 0;
    for (const auto& spec : trim_candidates(TrimKind::Flexible, 9)) {
        const auto p = trimmed_combine(col, spec);
        matches += std::abs(p.var - target.var) < 1e-12 && std::abs(p.es - target.es) < 1e-12 ? 1 : 0;
    }
    CHECK(matches == 0);
}

TEST_CASE("symmetric, lower and higher trims never need clamping") {
    std::mt19937_64 rng(8);
    int clamped_safe = 0;
    for (int rep = 0; rep < 10000; ++rep) {
        const std::size_t M = 3 + rep % 40;
        const auto col = random_column(rng, M);
        const int n = static_cast<int>(rep % M);
        for (auto kind : {TrimKind::Lower, TrimKind::Higher}) {
            clamped_safe += trimmed_combine_detail(col, TrimSpec::fixed(kind, n)).clamped ? 1 : 0;
        }
        const int ns = std::min<int>(n, (static_cast<int>(M) - 2) / 2);
        clamped_safe += trimmed_combine_detail(col, TrimSpec::fixed(TrimKind::Symmetric, std::max(ns, 0))).clamped;
    }
    CHECK(clamped_safe == 0);

    const std::vector<ForecastPair> col{{-1.0, -1.1}, {-3.0, -3.1}};
    const auto ext = trimmed_combine_detail(col, TrimSpec::fixed(TrimKind::Exterior, 1));
    CHECK(ext.clamped);
    CHECK(ext.pair == ForecastPair{-3.0, -3.0});
}

TEST_CASE("candidate counts and ordering") {
    CHECK(trim_candidates(TrimKind::Flexible, 90).size() == 32041);
    CHECK(trim_candidates(TrimKind::Symmetric, 90).size() == 45);
    CHECK(trim_candidates(TrimKind::Higher, 90).size() == 90);
    const auto flex = trim_candidates(TrimKind::Flexible, 4);
    CHECK(flex.front() == TrimSpec::flexible(0, 0));
    CHECK(flex[1] == TrimSpec::flexible(0, -1));
    for (const auto& s : flex) CHECK_NOTHROW(s.validate(4));
}

TEST_CASE("optimize_trim picks n = 0 when all methods agree") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    std::vector<std::vector<ForecastPair>> cols;
    std::vector<double> r;
    for (int t = 0; t < 120; ++t) {
        cols.push_back(std::vector<ForecastPair>(7, {-1.9, -2.4}));
        r.push_back(n01(rng));
    }
    const auto pool = pool_from(cols);
    const ScoreSpec spec;
    for (auto kind : kFixedKinds) CHECK(optimize_trim(kind, pool, r, spec).n == 0);
    CHECK(optimize_trim(TrimKind::Flexible, pool, r, spec) == TrimSpec::flexible(0, 0));
}

TEST_CASE("optimize_trim removes a wild outlier") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> n01;
    std::vector<std::vector<ForecastPair>> cols;
    std::vector<double> r;
    const ForecastPair truth{-1.959963984540054, -2.337802212678477};
    for (int t = 0; t < 400; ++t) {
        std::vector<ForecastPair> col;
        for (int m = 0; m < 8; ++m) {
            const double k = 1.0 + 0.05 * n01(rng);
            col.push_back({truth.var * k, truth.es * k});
        }
        col.push_back({-25.0, -40.0});
        cols.push_back(col);
        r.push_back(n01(rng));
    }
    const auto pool = pool_from(cols);
    const ScoreSpec spec;
    const auto chosen = optimize_trim(TrimKind::Symmetric, pool, r, spec);
    CHECK(chosen.n >= 1);
    std::vector<ForecastPair> at_chosen, at_zero;
    for (std::size_t t = 0; t < cols.size(); ++t) {
        at_chosen.push_back(trimmed_combine(cols[t], chosen));
        at_zero.push_back(simple_average(cols[t]));
    }
    CHECK(average_score(spec, at_chosen, r) < average_score(spec, at_zero, r));
}

TEST_CASE("optimize_trim agrees with a direct search and excludes crossing candidates") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    std::vector<std::vector<ForecastPair>> cols;
    std::vector<double> r;
    for (int t = 0; t < 150; ++t) {
        auto col = random_column(rng, 6);
        cols.push_back(col);
        r.push_back(1.5 * n01(rng));
    }
    const auto pool = pool_from(cols);
    const ScoreSpec spec;
    for (auto kind : {TrimKind::Exterior, TrimKind::Flexible, TrimKind::Higher}) {
        double best = std::numeric_limits<double>::infinity();
        TrimSpec best_spec;
        for (const auto& c : trim_candidates(kind, 6)) {
            std::vector<ForecastPair> out;
            bool crossed = false;
            for (const auto& col : cols) {
                const auto d = trimmed_combine_detail(col, c);
                crossed = crossed || d.clamped;
                out.push_back(d.pair);
            }
            if (crossed) continue;
            const double s = average_score(spec, out, r);
            if (s < best - 1e-9) {
                best = s;
                best_spec = c;
            }
        }
        CHECK(optimize_trim(kind, pool, r, spec) == best_spec);
    }
}

TEST_CASE("KDE multiplier selection returns a grid pair") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n01;
    std::vector<std::vector<ForecastPair>> cols;
    std::vector<double> r;
    for (int t = 0; t < 60; ++t) {
        cols.push_back(random_column(rng, 12));
        r.push_back(n01(rng));
    }
    const auto pool = pool_from(cols);
    const auto mult = select_kde_multipliers(pool, r, ScoreSpec{});
    CHECK(std::find(kKdeMultipliers.begin(), kKdeMultipliers.end(), mult.var) != kKdeMultipliers.end());
    CHECK(std::find(kKdeMultipliers.begin(), kKdeMultipliers.end(), mult.spacing) != kKdeMultipliers.end());
    const auto spec = kde_spec_for(cols[0], mult);
    CHECK(spec.bandwidth_var > 0.0);
    const auto out = mode_combine(cols[0], spec);
    CHECK(out.valid());
}

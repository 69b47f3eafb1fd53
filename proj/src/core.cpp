#include "varescomb/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <utility>

#include <fmt/format.h>

#include "varescomb/csv.hpp"

namespace varescomb {

namespace {

int parse_int(std::string_view s, bool& ok) {
    int value = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    ok = ok && res.ec == std::errc{} && res.ptr == s.data() + s.size();
    return value;
}

void check_same_length(std::size_t expected, const std::optional<std::vector<double>>& col, const char* name) {
    if (col && col->size() != expected) {
        throw DataError(fmt::format("column '{}' has {} rows, expected {}", name, col->size(), expected));
    }
}

}  // namespace

Date parse_date(std::string_view text) {
    bool ok = text.size() == 10 && text[4] == '-' && text[7] == '-';
    if (ok) {
        const int y = parse_int(text.substr(0, 4), ok);
        const int m = parse_int(text.substr(5, 2), ok);
        const int d = parse_int(text.substr(8, 2), ok);
        if (ok) {
            const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                                  std::chrono::day{static_cast<unsigned>(d)}};
            if (ymd.ok()) return Date{ymd};
        }
    }
    throw DataError(fmt::format("unparseable date '{}'", text));
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()));
}

std::string format_real(double x) { return fmt::format("{:.17g}", x); }

double parse_real(std::string_view text) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError(fmt::format("unparseable number '{}'", text));
    }
    return value;
}

Alpha::Alpha(double level) : level_(level) {
    if (!(level > 0.0 && level < 0.5)) {
        throw std::invalid_argument(fmt::format("alpha must lie in (0, 0.5), got {}", level));
    }
}

bool ForecastPair::valid() const noexcept { return std::isfinite(var) && std::isfinite(es) && es <= var; }

Spacing::Spacing(double value) : value_(value) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw std::invalid_argument(fmt::format("spacing must be finite and nonnegative, got {}", value));
    }
}

// ---------------------------------------------------------------- ReturnSeries

ReturnSeries::ReturnSeries(std::vector<Date> dates, std::vector<double> returns,
                           std::optional<std::vector<double>> range, std::optional<std::vector<double>> rv)
    : dates_(std::move(dates)), returns_(std::move(returns)), range_(std::move(range)), rv_(std::move(rv)) {
    if (dates_.size() != returns_.size()) {
        throw DataError(fmt::format("{} dates but {} returns", dates_.size(), returns_.size()));
    }
    check_same_length(returns_.size(), range_, "range");
    check_same_length(returns_.size(), rv_, "rv");
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (!(dates_[i - 1] < dates_[i])) {
            throw DataError(fmt::format("non-monotone dates at {}", format_date(dates_[i])));
        }
    }
    for (std::size_t i = 0; i < returns_.size(); ++i) {
        if (!std::isfinite(returns_[i])) {
            throw DataError(fmt::format("non-finite return on {}", format_date(dates_[i])));
        }
        if (range_ && !((*range_)[i] >= 0.0)) {
            throw DataError(fmt::format("negative or missing range on {}", format_date(dates_[i])));
        }
        if (rv_ && !((*rv_)[i] >= 0.0)) {
            throw DataError(fmt::format("negative or missing rv on {}", format_date(dates_[i])));
        }
    }
}

const std::vector<double>& ReturnSeries::range() const {
    if (!range_) throw DataError("return series has no range column");
    return *range_;
}

const std::vector<double>& ReturnSeries::rv() const {
    if (!rv_) throw DataError("return series has no rv column");
    return *rv_;
}

ReturnSeries ReturnSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > size()) throw std::out_of_range("ReturnSeries::slice beyond end");
    auto cut = [&](const auto& v) { return std::vector(v.begin() + first, v.begin() + first + count); };
    std::optional<std::vector<double>> range;
    std::optional<std::vector<double>> rv;
    if (range_) range = cut(*range_);
    if (rv_) rv = cut(*rv_);
    return ReturnSeries(cut(dates_), cut(returns_), std::move(range), std::move(rv));
}

std::optional<std::size_t> ReturnSeries::index_of(Date d) const {
    const auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
}

ReturnSeries load_returns(const std::filesystem::path& path, const ColumnMapping& schema) {
    if (!std::filesystem::exists(path)) throw DataError(fmt::format("missing file '{}'", path.string()));
    const auto table = csv::read(path);
    const auto date_col = table.require(schema.date, path);
    const auto ret_col = table.require(schema.ret, path);
    const auto high_col = table.find(schema.high);
    const auto low_col = table.find(schema.low);
    const auto rv_col = table.find(schema.rv);
    const auto npos = static_cast<std::size_t>(-1);
    if ((high_col == npos) != (low_col == npos)) {
        throw DataError(fmt::format("{}: high and low columns must appear together", path.string()));
    }

    std::vector<Date> dates;
    std::vector<double> returns;
    std::optional<std::vector<double>> range;
    std::optional<std::vector<double>> rv;
    if (high_col != npos) range.emplace();
    if (rv_col != npos) rv.emplace();

    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        try {
            dates.push_back(parse_date(row[date_col]));
            returns.push_back(parse_real(row[ret_col]));
            if (range) {
                const double high = parse_real(row[high_col]);
                const double low = parse_real(row[low_col]);
                if (!(high > 0.0 && low > 0.0)) throw DataError("high/low prices must be positive");
                range->push_back(100.0 * (std::log(high) - std::log(low)));
            }
            if (rv) rv->push_back(parse_real(row[rv_col]));
        } catch (const DataError& e) {
            throw DataError(fmt::format("{}:{}: {}", path.string(), table.line_numbers[i], e.what()));
        }
    }
    return ReturnSeries(std::move(dates), std::move(returns), std::move(range), std::move(rv));
}

void save_returns(const std::filesystem::path& path, const ReturnSeries& series) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << "date,return";
    if (series.has_range()) out << ",high,low";
    if (series.has_rv()) out << ",rv";
    out << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_date(series.dates()[i]) << ',' << format_real(series.returns()[i]);
        if (series.has_range()) {
            out << ',' << format_real(100.0 * std::exp(series.range()[i] / 100.0)) << ',' << format_real(100.0);
        }
        if (series.has_rv()) out << ',' << format_real(series.rv()[i]);
        out << '\n';
    }
}

// ---------------------------------------------------------------- describe

Summary describe(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("describe needs at least 2 observations");
    // Sorting first makes every sum independent of the input order.
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());

    Summary s;
    s.n = v.size();
    s.min = v.front();
    s.max = v.back();
    const std::size_t h = v.size() / 2;
    s.median = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d = x - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    s.std = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
    } else {
        s.skewness = 0.0;
        s.kurtosis = 0.0;
    }
    return s;
}

Summary describe(const ReturnSeries& series) { return describe(series.returns()); }

// ---------------------------------------------------------------- ForecastPool

ForecastPool::ForecastPool(std::vector<std::string> method_ids, std::vector<Date> origins,
                           std::vector<ForecastPair> entries)
    : method_ids_(std::move(method_ids)), origins_(std::move(origins)), entries_(std::move(entries)) {
    if (method_ids_.empty() || origins_.empty()) throw DataError("forecast pool needs M >= 1 and T >= 1");
    if (entries_.size() != method_ids_.size() * origins_.size()) {
        throw DataError(fmt::format("pool has {} entries, expected {} x {}", entries_.size(), method_ids_.size(),
                                    origins_.size()));
    }
    for (std::size_t t = 1; t < origins_.size(); ++t) {
        if (!(origins_[t - 1] < origins_[t])) {
            throw DataError(fmt::format("non-monotone dates at {}", format_date(origins_[t])));
        }
    }
    for (std::size_t t = 0; t < origins_.size(); ++t) {
        for (std::size_t m = 0; m < method_ids_.size(); ++m) {
            const auto& p = at(m, t);
            if (!p.valid()) {
                throw DataError(fmt::format("invalid forecast for method '{}' on {}: var={} es={} (need finite, es <= var)",
                                            method_ids_[m], format_date(origins_[t]), p.var, p.es));
            }
        }
    }
}

std::vector<ForecastPair> ForecastPool::row(std::size_t method) const {
    std::vector<ForecastPair> out(num_origins());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = at(method, t);
    return out;
}

ForecastPool ForecastPool::slice(std::size_t first, std::size_t count) const {
    if (first + count > num_origins() || count == 0) throw std::out_of_range("ForecastPool::slice out of range");
    const std::size_t m = num_methods();
    return ForecastPool(method_ids_, std::vector(origins_.begin() + first, origins_.begin() + first + count),
                        std::vector(entries_.begin() + first * m, entries_.begin() + (first + count) * m));
}

ForecastPool ForecastPool::select_methods(std::span<const std::size_t> methods) const {
    std::vector<std::string> ids;
    for (auto m : methods) ids.push_back(method_ids_.at(m));
    std::vector<ForecastPair> entries;
    entries.reserve(methods.size() * num_origins());
    for (std::size_t t = 0; t < num_origins(); ++t) {
        for (auto m : methods) entries.push_back(at(m, t));
    }
    return ForecastPool(std::move(ids), origins_, std::move(entries));
}

std::optional<std::size_t> ForecastPool::method_index(std::string_view id) const {
    for (std::size_t m = 0; m < method_ids_.size(); ++m) {
        if (method_ids_[m] == id) return m;
    }
    return std::nullopt;
}

ForecastPool load_pool(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError(fmt::format("missing file '{}'", path.string()));
    const auto table = csv::read(path);
    const auto date_col = table.require("date", path);
    const auto id_col = table.require("method_id", path);
    const auto var_col = table.require("var", path);
    const auto es_col = table.require("es", path);

    std::vector<std::string> ids;
    std::map<std::string, std::size_t> id_index;
    std::map<Date, std::map<std::size_t, ForecastPair>> cells;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto where = [&] { return fmt::format("{}:{}", path.string(), table.line_numbers[i]); };
        Date d;
        ForecastPair p;
        try {
            d = parse_date(row[date_col]);
            p = ForecastPair{parse_real(row[var_col]), parse_real(row[es_col])};
        } catch (const DataError& e) {
            throw DataError(fmt::format("{}: {}", where(), e.what()));
        }
        const auto& id = row[id_col];
        if (!p.valid()) {
            throw DataError(fmt::format("{}: invalid forecast for method '{}' on {}: var={} es={} (need es <= var)",
                                        where(), id, row[date_col], row[var_col], row[es_col]));
        }
        auto [it, inserted] = id_index.try_emplace(id, ids.size());
        if (inserted) ids.push_back(id);
        if (!cells[d].emplace(it->second, p).second) {
            throw DataError(fmt::format("{}: duplicate (method, date) = ('{}', {})", where(), id, row[date_col]));
        }
    }
    if (ids.empty()) throw DataError(fmt::format("{}: pool has no rows", path.string()));

    std::vector<Date> origins;
    std::vector<ForecastPair> entries;
    entries.reserve(ids.size() * cells.size());
    for (const auto& [d, row] : cells) {
        if (row.size() != ids.size()) {
            for (std::size_t m = 0; m < ids.size(); ++m) {
                if (!row.contains(m)) {
                    throw DataError(fmt::format("{}: ragged panel, method '{}' missing on {}", path.string(), ids[m],
                                                format_date(d)));
                }
            }
        }
        origins.push_back(d);
        for (const auto& [m, p] : row) entries.push_back(p);
    }
    return ForecastPool(std::move(ids), std::move(origins), std::move(entries));
}

void save_pool(const std::filesystem::path& path, const ForecastPool& pool) {
    std::ofstream out(path);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << "date,method_id,var,es\n";
    for (std::size_t t = 0; t < pool.num_origins(); ++t) {
        const auto date = format_date(pool.origins()[t]);
        for (std::size_t m = 0; m < pool.num_methods(); ++m) {
            const auto& p = pool.at(m, t);
            out << date << ',' << pool.method_ids()[m] << ',' << format_real(p.var) << ',' << format_real(p.es) << '\n';
        }
    }
}

std::vector<std::vector<Spacing>> spacing_of(const ForecastPool& pool) {
    std::vector<std::vector<Spacing>> out(pool.num_methods());
    for (std::size_t m = 0; m < pool.num_methods(); ++m) {
        out[m].reserve(pool.num_origins());
        for (std::size_t t = 0; t < pool.num_origins(); ++t) out[m].emplace_back(pool.at(m, t).spacing());
    }
    return out;
}

std::size_t align(const ForecastPool& pool, const ReturnSeries& series) {
    const auto first = series.index_of(pool.origins().front());
    if (!first) {
        throw DataError(fmt::format("pool date {} not found in return series", format_date(pool.origins().front())));
    }
    if (*first + pool.num_origins() > series.size()) {
        throw DataError("pool extends beyond the end of the return series");
    }
    for (std::size_t t = 0; t < pool.num_origins(); ++t) {
        if (series.dates()[*first + t] != pool.origins()[t]) {
            throw DataError(fmt::format("pool date {} does not align with return series date {}",
                                        format_date(pool.origins()[t]), format_date(series.dates()[*first + t])));
        }
    }
    return *first;
}

std::vector<double> aligned_returns(const ForecastPool& pool, const ReturnSeries& series) {
    const auto offset = align(pool, series);
    return {series.returns().begin() + offset, series.returns().begin() + offset + pool.num_origins()};
}

}  // namespace varescomb

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace varescomb {

// Error classes map onto the CLI exit codes (config, data, numerical).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Throws DataError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Probability level of the lower tail, strictly inside (0, 0.5).
class Alpha {
public:
    explicit Alpha(double level);
    double value() const noexcept { return level_; }

private:
    double level_;
};

/// One-day-ahead (VaR, ES) forecast; ES lies at or below VaR.
struct ForecastPair {
    double var = 0.0;
    double es = 0.0;

    bool valid() const noexcept;
    double spacing() const noexcept { return var - es; }
    friend bool operator==(const ForecastPair&, const ForecastPair&) = default;
};

/// Nonnegative gap between VaR and ES.
class Spacing {
public:
    explicit Spacing(double value);
    double value() const noexcept { return value_; }

private:
    double value_;
};

/// Daily log returns scaled by 100, with optional range and realized variance.
class ReturnSeries {
public:
    ReturnSeries() = default;
    ReturnSeries(std::vector<Date> dates, std::vector<double> returns,
                 std::optional<std::vector<double>> range = std::nullopt,
                 std::optional<std::vector<double>> rv = std::nullopt);

    std::size_t size() const noexcept { return returns_.size(); }
    const std::vector<Date>& dates() const noexcept { return dates_; }
    const std::vector<double>& returns() const noexcept { return returns_; }
    bool has_range() const noexcept { return range_.has_value(); }
    bool has_rv() const noexcept { return rv_.has_value(); }
    const std::vector<double>& range() const;
    const std::vector<double>& rv() const;

    /// Rows [first, first + count).
    ReturnSeries slice(std::size_t first, std::size_t count) const;
    /// Index of `d`, or nullopt.
    std::optional<std::size_t> index_of(Date d) const;

private:
    std::vector<Date> dates_;
    std::vector<double> returns_;
    std::optional<std::vector<double>> range_;
    std::optional<std::vector<double>> rv_;
};

struct ColumnMapping {
    std::string date = "date";
    std::string ret = "return";
    std::string high = "high";
    std::string low = "low";
    std::string rv = "rv";
};

ReturnSeries load_returns(const std::filesystem::path& path, const ColumnMapping& schema = {});

/// Writes `date,return[,high,low][,rv]`. High/low are synthesized as
/// low = 100, high = 100 * exp(range / 100) so the range column reloads.
void save_returns(const std::filesystem::path& path, const ReturnSeries& series);

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    double std = 0.0;       // sample (n - 1) denominator
    double skewness = 0.0;  // m3 / m2^1.5
    double kurtosis = 0.0;  // m4 / m2^2, not excess
};

Summary describe(std::span<const double> values);
Summary describe(const ReturnSeries& series);

/// M methods x T forecast dates. Dates are the days the forecasts apply to,
/// so column t is scored against the return on origins()[t].
class ForecastPool {
public:
    ForecastPool() = default;
    /// `entries` is day-major: entries[t * M + m].
    ForecastPool(std::vector<std::string> method_ids, std::vector<Date> origins,
                 std::vector<ForecastPair> entries);

    std::size_t num_methods() const noexcept { return method_ids_.size(); }
    std::size_t num_origins() const noexcept { return origins_.size(); }
    const std::vector<std::string>& method_ids() const noexcept { return method_ids_; }
    const std::vector<Date>& origins() const noexcept { return origins_; }

    const ForecastPair& at(std::size_t method, std::size_t origin) const {
        return entries_[origin * method_ids_.size() + method];
    }
    std::span<const ForecastPair> column(std::size_t origin) const {
        return {entries_.data() + origin * method_ids_.size(), method_ids_.size()};
    }
    std::vector<ForecastPair> row(std::size_t method) const;
    const std::vector<ForecastPair>& entries() const noexcept { return entries_; }

    ForecastPool slice(std::size_t first, std::size_t count) const;
    ForecastPool select_methods(std::span<const std::size_t> methods) const;
    std::optional<std::size_t> method_index(std::string_view id) const;

private:
    std::vector<std::string> method_ids_;
    std::vector<Date> origins_;
    std::vector<ForecastPair> entries_;
};

ForecastPool load_pool(const std::filesystem::path& path);
void save_pool(const std::filesystem::path& path, const ForecastPool& pool);

/// Per-method rows of VaR - ES.
std::vector<std::vector<Spacing>> spacing_of(const ForecastPool& pool);

/// Offset of the pool's first date within `series`; every pool date must match
/// the consecutive series dates. Throws DataError on misalignment.
std::size_t align(const ForecastPool& pool, const ReturnSeries& series);

/// Returns aligned with the pool columns.
std::vector<double> aligned_returns(const ForecastPool& pool, const ReturnSeries& series);

/// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_real(double x);
double parse_real(std::string_view text);

}  // namespace varescomb

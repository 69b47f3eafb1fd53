#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "varescomb/core.hpp"
#include "varescomb/score.hpp"

namespace varescomb {

/// Mean of the VaRs and mean of the ESs. Values are summed in ascending
/// order, so the result does not depend on method order.
ForecastPair simple_average(std::span<const ForecastPair> column);

/// Componentwise median; even counts take the midpoint of the central pair.
ForecastPair median_combine(std::span<const ForecastPair> column);

// ---------------------------------------------------------------- KDE mode

struct KdeSpec {
    double bandwidth_var = 1.0;
    double bandwidth_spacing = 1.0;

    void validate() const;
};

/// Rule-of-thumb 0.9 min(sd, IQR / 1.34) n^(-1/5), with a small positive
/// floor for degenerate samples.
double silverman_bandwidth(std::span<const double> x);

/// Argmax of the Gaussian-kernel density: 512-point grid on
/// [min - 3h, max + 3h], then Brent refinement around the best grid point.
/// Grid ties go to the smaller value.
double kde_mode(std::span<const double> x, double bandwidth);

/// var = mode of the VaRs, es = var - mode of the spacings.
ForecastPair mode_combine(std::span<const ForecastPair> column, const KdeSpec& spec);

inline constexpr std::array<double, 5> kKdeMultipliers{0.25, 0.5, 1.0, 2.0, 4.0};

struct KdeMultipliers {
    double var = 1.0;
    double spacing = 1.0;
};

/// Bandwidths for one column: multiplier times the Silverman bandwidth of the
/// column's VaRs and spacings.
KdeSpec kde_spec_for(std::span<const ForecastPair> column, const KdeMultipliers& mult);

/// Multiplier pair from kKdeMultipliers x kKdeMultipliers with the lowest
/// in-sample average score; earlier pairs win ties.
KdeMultipliers select_kde_multipliers(const ForecastPool& train, std::span<const double> returns,
                                      const ScoreSpec& spec);

// ---------------------------------------------------------------- trimmed means

enum class TrimKind { Symmetric, Exterior, Interior, Lower, Higher, Flexible };

std::string to_string(TrimKind kind);
TrimKind parse_trim_kind(std::string_view name);

/// Trimming parameters. Flexible kinds use n_var and n_es: a positive value
/// trims that many from the low end, a negative value from the high end.
struct TrimSpec {
    TrimKind kind = TrimKind::Symmetric;
    int n = 0;
    int n_var = 0;
    int n_es = 0;

    static TrimSpec fixed(TrimKind kind, int n);
    static TrimSpec flexible(int n_var, int n_es);
    /// Throws ConfigError when the parameters are illegal for M methods.
    void validate(std::size_t methods) const;
    friend bool operator==(const TrimSpec&, const TrimSpec&) = default;
};

/// Half-open ranges of the ascending-sorted VaRs and ESs that survive the trim.
struct TrimRanges {
    std::size_t var_lo, var_hi, es_lo, es_hi;
};
TrimRanges trim_ranges(const TrimSpec& spec, std::size_t methods);

struct TrimOutcome {
    ForecastPair pair;
    bool clamped = false;  // combined es exceeded var and was set to var
};

TrimOutcome trimmed_combine_detail(std::span<const ForecastPair> column, const TrimSpec& spec);
ForecastPair trimmed_combine(std::span<const ForecastPair> column, const TrimSpec& spec);

/// Every legal parameter for `kind`, in tie-break order (smallest |n| first;
/// for flexible, |n_var| then |n_es|).
std::vector<TrimSpec> trim_candidates(TrimKind kind, std::size_t methods);

/// Exhaustive in-sample search. Candidates whose combined forecasts cross on
/// any training day are excluded; a later candidate must improve the average
/// score by more than a relative 1e-12 to displace an earlier one.
TrimSpec optimize_trim(TrimKind kind, const ForecastPool& train, std::span<const double> returns,
                       const ScoreSpec& spec);

}  // namespace varescomb

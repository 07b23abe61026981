#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sicr/core.hpp"
#include "sicr/synth.hpp"

namespace sicr {

enum class FeatureKind : std::uint8_t { Numeric, Categorical };
enum class Theme : std::uint8_t { Delinquency, Account, Behavioural, Macroeconomic };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Theme theme);
FeatureKind parse_feature_kind(std::string_view text);
Theme parse_theme(std::string_view text);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    Theme theme = Theme::Account;
    std::vector<std::string> levels;  // categorical only; value = level index

    bool operator==(const FeatureSpec&) const = default;
};

/// Ordered feature list; the single source of truth for column order.
struct FeatureSchema {
    std::vector<FeatureSpec> features;

    std::size_t size() const { return features.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Stable 64-bit hash over names, kinds, themes and levels.
    std::uint64_t hash() const;
    std::string hash_hex() const;

    bool operator==(const FeatureSchema&) const = default;
};

/// Every feature the panel builder knows how to engineer.
const std::vector<FeatureSpec>& feature_catalogue();

/// The default modelling input space (a subset of the catalogue).
FeatureSchema default_schema();

/// Builds a schema from catalogue names, in the given order. Throws
/// sicr::Error("unknown-feature") for names outside the catalogue.
FeatureSchema make_schema(std::span<const std::string> names);

/// Cross-sectional modelling rows (loan, month, Y, stage-1 flag, features),
/// stored column-wise; features are row-major with schema.size() columns.
struct LabeledPanel {
    SicrDefinition definition;
    FeatureSchema schema;
    std::vector<std::string> loan_ids;
    std::vector<Month> months;
    std::vector<std::uint8_t> y;
    std::vector<std::uint8_t> stage1;
    std::vector<double> features;

    std::size_t size() const { return months.size(); }
    bool empty() const { return months.empty(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * schema.size(), schema.size()};
    }
    void append_row(const LabeledPanel& from, std::size_t i);
    LabeledPanel subset(std::span<const std::size_t> rows) const;
    LabeledPanel empty_like() const;

    bool operator==(const LabeledPanel&) const = default;
};

/// Months for which panel rows are emitted. Defaults to every macro month
/// that also has its 12-month lag available.
struct PanelWindow {
    std::optional<Month> first;
    std::optional<Month> last;
};

/// Feature vector for history index `index`; trailing-window features use
/// whatever shorter history precedes `index`.
std::vector<double> compute_features(const LoanHistory& history, std::size_t index,
                                     const MacroScenario& macro, const FeatureSchema& schema);

/// Stage-1 (at-risk) test at history index: SICR status 0 or undefined, and
/// not in default.
bool is_stage1(const LoanHistory& history, const SicrStatusSeries& status, std::size_t index);

LabeledPanel build_panel(std::span<const LoanHistory> portfolio, const MacroScenario& macro,
                         const SicrDefinition& definition, const FeatureSchema& schema,
                         const PanelWindow& window = {}, unsigned threads = 1);

enum class RateKind : std::uint8_t { Actual, Expected, Discrete };
std::string_view to_string(RateKind kind);
RateKind parse_rate_kind(std::string_view text);

struct RatePoint {
    Month month = 0;
    std::size_t n = 0;
    double events = 0.0;  // integral for actual rates; summed scores otherwise
    double rate = 0.0;

    bool operator==(const RatePoint&) const = default;
};

struct RateSeries {
    RateKind kind = RateKind::Actual;
    std::vector<RatePoint> points;  // ascending months, n > 0

    std::optional<double> rate_at(Month m) const;
    bool operator==(const RateSeries&) const = default;
};

/// Per-month share of Y = 1 among stage-1 rows.
RateSeries sicr_rate_series(const LabeledPanel& panel);

/// Two-way stratified subsample over (month, Y) strata with a global
/// sampling fraction and largest-remainder rounding.
LabeledPanel stratified_subsample(const LabeledPanel& panel, std::size_t target_rows, std::uint64_t seed);

enum class SplitMode : std::uint8_t { Observation, Account };

/// Disjoint train/validation partition. Observation mode stratifies by
/// (month, Y); account mode keeps each loan's rows together.
std::pair<LabeledPanel, LabeledPanel> split(const LabeledPanel& panel, double train_fraction,
                                            std::uint64_t seed, SplitMode mode = SplitMode::Observation);

/// Largest-remainder apportionment of `target` over strata proportional to
/// `sizes` (exact integer arithmetic; ties go to the earlier stratum).
std::vector<std::size_t> proportional_allocation(std::span<const std::size_t> sizes, std::size_t target);

struct MaeResult {
    double mae = 0.0;
    std::size_t months_compared = 0;
    std::vector<Month> unmatched_months;
};

/// Mean absolute rate difference over the months both series share.
/// Throws sicr::Error("no-overlap") when they share none.
MaeResult series_mae(const RateSeries& x, const RateSeries& y);

inline MaeResult representativeness_mae(const RateSeries& full, const RateSeries& sample) {
    return series_mae(full, sample);
}

}  // namespace sicr

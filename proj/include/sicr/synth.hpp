#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sicr/core.hpp"
#include "sicr/month.hpp"

namespace sicr {

enum class Regime : std::uint8_t { Normal = 0, Crisis = 1, Recovery = 2 };

inline constexpr std::string_view kRegimeNames[] = {"normal", "crisis", "recovery"};

Regime parse_regime(std::string_view name);

/// Macroeconomic values for one month. Rates and growth figures are decimal
/// fractions (0.07 = 7%); dti_level is a household debt-to-income ratio.
struct MacroPoint {
    double repo_rate = 0.0;
    double inflation_growth = 0.0;
    double dti_level = 0.0;
    double real_income_growth = 0.0;
    double employment_growth = 0.0;

    bool operator==(const MacroPoint&) const = default;
};

inline constexpr std::size_t kMacroSeriesCount = 5;
inline constexpr std::array<std::string_view, kMacroSeriesCount> kMacroSeriesNames = {
    "repo_rate", "inflation_growth", "dti_level", "real_income_growth", "employment_growth"};

double macro_value(const MacroPoint& point, std::size_t series);
double& macro_value(MacroPoint& point, std::size_t series);

struct MacroScenario {
    Month first_month = 0;
    std::vector<MacroPoint> values;
    std::vector<Regime> regimes;

    Month last_month() const { return first_month + static_cast<int>(values.size()) - 1; }
    bool contains(Month m) const { return m >= first_month && m <= last_month(); }
    const MacroPoint& at(Month m) const;
    Regime regime_at(Month m) const;

    bool operator==(const MacroScenario&) const = default;
};

/// Mean-reverting (AR(1)) dynamics of a single macro series. The crisis
/// shift is added to the long-run mean during crisis months, and half of it
/// during recovery months.
struct MacroSeriesParams {
    double mean = 0.0;
    double crisis_shift = 0.0;
    double persistence = 0.9;
    double volatility = 0.0;
};

/// Log-odds loadings of the monthly transition scores. Macro loadings act
/// on deviations from each series' long-run mean, in percentage points
/// (dti in points of the ratio).
struct TransitionParams {
    double worsen_intercept_current = -4.6;     // g0 == 0
    double worsen_intercept_delinquent = -3.2;  // g0 in [1, 3)
    double worsen_intercept_default = -1.0;     // g0 >= 3, loan neither cured nor written off
    double cure_intercept = 1.2;
    // Extra worsening risk just after a return to g0 == 0, decaying with
    // the months since the loan was last in arrears.
    double recidivism_worsen = 3.0;
    double recidivism_decay_months = 6.0;
    double frailty_worsen = 0.9;
    double frailty_cure = -0.4;
    double prelim_worsen = -6.0;  // per unit of prelim_perc
    double margin_worsen = 0.25;  // per percentage point of margin
    double cash_worsen = 0.5;
    double payroll_worsen = -0.3;
    std::array<double, kMacroSeriesCount> macro_worsen = {0.18, 0.05, 0.06, -0.10, -0.10};
    std::array<double, kMacroSeriesCount> macro_cure = {-0.05, 0.0, -0.02, 0.04, 0.04};
};

struct SimConfig {
    std::size_t n_loans = 3000;
    Month window_start = make_month(2006, 1);
    Month window_end = make_month(2016, 12);
    /// Empty when crisis_months == 0.
    Month crisis_start = make_month(2008, 1);
    int crisis_months = 24;
    int recovery_months = 12;
    /// Loans originate uniformly in [window_start - backlog, window_end - 1];
    /// months before the window run on the first window month's macro values.
    int origination_backlog_months = 72;
    std::array<MacroSeriesParams, kMacroSeriesCount> macro = {{
        {0.070, 0.030, 0.92, 0.0010},    // repo_rate
        {0.055, 0.030, 0.90, 0.0020},    // inflation_growth
        {0.750, 0.060, 0.95, 0.0040},    // dti_level
        {0.025, -0.040, 0.90, 0.0030},   // real_income_growth
        {0.015, -0.040, 0.90, 0.0030},   // employment_growth
    }};
    TransitionParams transitions;
    double cure_after_default_probability = 0.30;
    double write_off_probability = 0.45;
    int cure_step = 1;  // g0 decrease on a cure move below default
    double settle_probability = 0.006;  // monthly early settlement
    std::uint64_t seed = 20070101;
};

/// Throws sicr::Error on inconsistent configuration ("window-too-short",
/// "invalid-config").
void validate(const SimConfig& config);

MacroScenario gen_macro(const SimConfig& config);

/// Simulates config.n_loans histories over the macro scenario; each loan
/// draws from its own stream derived from (seed, loan index), so the
/// result is independent of `threads`.
std::vector<LoanHistory> gen_portfolio(const SimConfig& config, const MacroScenario& macro,
                                       unsigned threads = 1);

}  // namespace sicr

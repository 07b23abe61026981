#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sicr/month.hpp"

namespace sicr {

enum class PayMethod : std::uint8_t { DebitOrder = 0, Cash = 1, Payroll = 2 };

inline constexpr std::string_view kPayMethodNames[] = {"debit_order", "cash", "payroll"};

/// Account-level covariates observed at one month-end.
struct MonthCovariates {
    double balance = 0.0;
    double interest_rate_margin = 0.0;
    double prelim_perc = 0.0;
    PayMethod pay_method = PayMethod::DebitOrder;

    bool operator==(const MonthCovariates&) const = default;
};

/// One loan's monthly delinquency path (g0 = payments in arrears) from
/// origination onwards. g0[i] and covariates[i] refer to calendar month
/// origination_month + i.
struct LoanHistory {
    std::string loan_id;
    Month origination_month = 0;
    int term_months = 0;
    std::vector<int> g0;
    std::vector<MonthCovariates> covariates;

    Month month_at(std::size_t index) const { return origination_month + static_cast<int>(index); }
    Month last_month() const { return origination_month + static_cast<int>(g0.size()) - 1; }

    bool operator==(const LoanHistory&) const = default;
};

/// Checks the structural invariants (non-negative g0, matching covariate
/// length, length within term plus allowance). Throws sicr::Error.
void validate_history(const LoanHistory& history, int post_term_allowance = 0);

struct SicrDefinition {
    int d = 1;  // delinquency threshold
    int s = 1;  // stickiness
    int k = 0;  // outcome period (months)
    std::string label;

    bool operator==(const SicrDefinition&) const = default;
};

/// SICR statuses G(d,s,t) for a history. statuses[j] is the status at
/// history index `offset + j`; indices before `offset` (= s - 1) are undefined.
struct SicrStatusSeries {
    std::string loan_id;
    std::size_t offset = 0;
    std::vector<std::uint8_t> statuses;

    std::optional<bool> at(std::size_t index) const {
        if (index < offset || index - offset >= statuses.size()) return std::nullopt;
        return statuses[index - offset] != 0;
    }
    /// Number of history months the series spans (defined or not).
    std::size_t horizon() const { return offset + statuses.size(); }
};

/// Outcomes Y_t = G(d,s,t+k). outcomes[j] is the outcome at history index
/// `offset + j`; look-aheads that are censored or undefined are absent.
struct OutcomeSeries {
    std::string loan_id;
    std::size_t offset = 0;
    std::vector<std::uint8_t> outcomes;

    std::optional<bool> at(std::size_t index) const {
        if (index < offset || index - offset >= outcomes.size()) return std::nullopt;
        return outcomes[index - offset] != 0;
    }
};

inline constexpr int kDefaultThreshold = 3;

inline bool is_default(int g0_value) { return g0_value >= kDefaultThreshold; }

SicrStatusSeries compute_status(const LoanHistory& history, int d, int s);

/// Same decision function over a bare delinquency path.
SicrStatusSeries compute_status(std::span<const int> g0, int d, int s, std::string loan_id = {});

OutcomeSeries label_outcomes(const SicrStatusSeries& status, int k);

/// Lower-case roman numeral for 1..3999.
std::string roman_numeral(int value);

/// Label such as "1a(i)": d as digit, s as letter, k by its 1-based rank.
std::string definition_label(int d, int s, int k_rank);

/// Cartesian product (d outer, s middle, k inner) of the de-duplicated,
/// ascending parameter sets.
std::vector<SicrDefinition> definition_grid(std::vector<int> d_values, std::vector<int> s_values,
                                            std::vector<int> k_values);

/// As above, but k ranks are taken from `k_ladder` (which must contain every
/// k value), so labels stay stable when only part of the ladder is gridded,
/// e.g. k = 18 on the ladder {3,6,9,12,18,24,36} is "(v)".
std::vector<SicrDefinition> definition_grid(std::vector<int> d_values, std::vector<int> s_values,
                                            std::vector<int> k_values, std::vector<int> k_ladder);

/// Parses "1a(iii)" back to (d, s, k-rank). Throws sicr::Error("bad-label").
struct LabelParts {
    int d;
    int s;
    int k_rank;
};
LabelParts parse_definition_label(std::string_view label);

}  // namespace sicr

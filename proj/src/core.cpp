#include "sicr/core.hpp"

#include <algorithm>
#include <array>

#include "sicr/error.hpp"

namespace sicr {

namespace {

std::vector<int> sorted_unique(std::vector<int> values, const char* what) {
    if (values.empty()) throw Error("invalid-grid", std::string("empty ") + what + " set");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return values;
}

}  // namespace

void validate_history(const LoanHistory& history, int post_term_allowance) {
    if (history.term_months <= 0) throw Error("invalid-history", history.loan_id + ": term <= 0");
    if (history.covariates.size() != history.g0.size()) {
        throw Error("invalid-history", history.loan_id + ": covariate length mismatch");
    }
    if (history.g0.size() > static_cast<std::size_t>(history.term_months + post_term_allowance)) {
        throw Error("invalid-history", history.loan_id + ": history longer than term");
    }
    for (int v : history.g0) {
        if (v < 0) throw Error("invalid-history", history.loan_id + ": negative g0");
    }
}

SicrStatusSeries compute_status(std::span<const int> g0, int d, int s, std::string loan_id) {
    if (d < 1 || s < 1) throw Error("invalid-parameter", "d and s must be >= 1");
    if (g0.empty()) throw Error("empty-series", loan_id);

    SicrStatusSeries out;
    out.loan_id = std::move(loan_id);
    out.offset = static_cast<std::size_t>(s - 1);
    if (g0.size() < static_cast<std::size_t>(s)) {
        out.offset = g0.size();
        return out;
    }
    out.statuses.reserve(g0.size() - out.offset);
    // Length of the current run of months with g0 >= d; the s-window test
    // holds exactly when that run covers the last s months.
    int run = 0;
    for (std::size_t t = 0; t < g0.size(); ++t) {
        run = g0[t] >= d ? run + 1 : 0;
        if (t >= out.offset) out.statuses.push_back(run >= s ? 1 : 0);
    }
    return out;
}

SicrStatusSeries compute_status(const LoanHistory& history, int d, int s) {
    return compute_status(history.g0, d, s, history.loan_id);
}

OutcomeSeries label_outcomes(const SicrStatusSeries& status, int k) {
    if (k < 0) throw Error("invalid-parameter", "k must be >= 0");
    OutcomeSeries out;
    out.loan_id = status.loan_id;
    const std::size_t lag = static_cast<std::size_t>(k);
    const std::size_t horizon = status.horizon();
    // Y at index t is defined iff t + k lands on a defined status.
    out.offset = status.offset > lag ? status.offset - lag : 0;
    if (horizon <= lag || out.offset + lag >= horizon) return out;
    const std::size_t last = horizon - 1 - lag;
    out.outcomes.reserve(last - out.offset + 1);
    for (std::size_t t = out.offset; t <= last; ++t) {
        out.outcomes.push_back(status.statuses[t + lag - status.offset]);
    }
    return out;
}

std::string roman_numeral(int value) {
    if (value < 1 || value > 3999) throw Error("invalid-parameter", "roman numeral out of range");
    static constexpr std::array<std::pair<int, const char*>, 13> table{{{1000, "m"},
                                                                        {900, "cm"},
                                                                        {500, "d"},
                                                                        {400, "cd"},
                                                                        {100, "c"},
                                                                        {90, "xc"},
                                                                        {50, "l"},
                                                                        {40, "xl"},
                                                                        {10, "x"},
                                                                        {9, "ix"},
                                                                        {5, "v"},
                                                                        {4, "iv"},
                                                                        {1, "i"}}};
    std::string out;
    for (auto [n, glyph] : table) {
        while (value >= n) {
            out += glyph;
            value -= n;
        }
    }
    return out;
}

std::string definition_label(int d, int s, int k_rank) {
    if (d < 1 || s < 1 || s > 26) throw Error("invalid-parameter", "label needs d >= 1, 1 <= s <= 26");
    return std::to_string(d) + static_cast<char>('a' + s - 1) + "(" + roman_numeral(k_rank) + ")";
}

std::vector<SicrDefinition> definition_grid(std::vector<int> d_values, std::vector<int> s_values,
                                            std::vector<int> k_values, std::vector<int> k_ladder) {
    d_values = sorted_unique(std::move(d_values), "d");
    s_values = sorted_unique(std::move(s_values), "s");
    k_values = sorted_unique(std::move(k_values), "k");
    k_ladder = sorted_unique(std::move(k_ladder), "k ladder");
    if (d_values.front() < 1 || s_values.front() < 1) {
        throw Error("invalid-grid", "d and s must be positive");
    }
    if (k_values.front() < 0) throw Error("invalid-grid", "k must be non-negative");

    std::vector<SicrDefinition> grid;
    grid.reserve(d_values.size() * s_values.size() * k_values.size());
    for (int d : d_values) {
        for (int s : s_values) {
            for (int k : k_values) {
                auto it = std::lower_bound(k_ladder.begin(), k_ladder.end(), k);
                if (it == k_ladder.end() || *it != k) {
                    throw Error("invalid-grid", "k=" + std::to_string(k) + " missing from ladder");
                }
                const int rank = static_cast<int>(it - k_ladder.begin()) + 1;
                grid.push_back({d, s, k, definition_label(d, s, rank)});
            }
        }
    }
    return grid;
}

std::vector<SicrDefinition> definition_grid(std::vector<int> d_values, std::vector<int> s_values,
                                            std::vector<int> k_values) {
    auto ladder = k_values;
    return definition_grid(std::move(d_values), std::move(s_values), std::move(k_values),
                           std::move(ladder));
}

LabelParts parse_definition_label(std::string_view label) {
    std::size_t i = 0;
    int d = 0;
    while (i < label.size() && label[i] >= '0' && label[i] <= '9') d = d * 10 + (label[i++] - '0');
    if (i == 0 || i >= label.size() || label[i] < 'a' || label[i] > 'z') {
        throw Error("bad-label", std::string(label));
    }
    const int s = label[i++] - 'a' + 1;
    if (i >= label.size() || label[i] != '(' || label.back() != ')') {
        throw Error("bad-label", std::string(label));
    }
    const std::string_view numeral = label.substr(i + 1, label.size() - i - 2);
    for (int rank = 1; rank < 4000; ++rank) {
        if (roman_numeral(rank) == numeral) return {d, s, rank};
    }
    throw Error("bad-label", std::string(label));
}

}  // namespace sicr

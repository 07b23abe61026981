#include "sicr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <unordered_map>

#include "sicr/error.hpp"
#include "sicr/parallel.hpp"
#include "sicr/random.hpp"

namespace sicr {

namespace {

enum class FeatureId {
    G0Delinq,
    ArrearsTrend3mo,
    NumArrearsEver24mo,
    TimeInPerfSpell,
    PerfSpellNum,
    InterestRateMargin,
    PrelimPerc,
    PayMethodId,
    Term,
    BalanceLog,
    BalanceToTerm,
    Macro0mo,   // + series index
    Macro12mo,  // + series index
};

struct CatalogueEntry {
    FeatureSpec spec;
    FeatureId id;
    std::size_t series = 0;
};

// Levels of ArrearsTrend_3mo, in level-index order.
constexpr int kTrendFlat = 0;
constexpr int kTrendUp = 1;
constexpr int kTrendDown = 2;

constexpr std::array<const char*, kMacroSeriesCount> kMacroFeatureStems = {
    "Repo_Rate", "Inflation_Growth", "DTI_Level", "RealIncome_Growth", "Employment_Growth"};

const std::vector<CatalogueEntry>& catalogue_entries() {
    static const std::vector<CatalogueEntry> entries = [] {
        using enum FeatureKind;
        std::vector<CatalogueEntry> e = {
            {{"g0_Delinq", Numeric, Theme::Delinquency, {}}, FeatureId::G0Delinq},
            {{"ArrearsTrend_3mo", Categorical, Theme::Delinquency, {"flat", "up", "down"}},
             FeatureId::ArrearsTrend3mo},
            {{"Num_ArrearsEver_24mo", Numeric, Theme::Delinquency, {}}, FeatureId::NumArrearsEver24mo},
            {{"TimeInPerfSpell", Numeric, Theme::Delinquency, {}}, FeatureId::TimeInPerfSpell},
            {{"PerfSpell_Num", Numeric, Theme::Delinquency, {}}, FeatureId::PerfSpellNum},
            {{"InterestRate_Margin", Numeric, Theme::Account, {}}, FeatureId::InterestRateMargin},
            {{"Prelim_Perc", Numeric, Theme::Behavioural, {}}, FeatureId::PrelimPerc},
            {{"PayMethod", Categorical, Theme::Behavioural,
              {std::string(kPayMethodNames[0]), std::string(kPayMethodNames[1]),
               std::string(kPayMethodNames[2])}},
             FeatureId::PayMethodId},
            {{"Term", Numeric, Theme::Account, {}}, FeatureId::Term},
            {{"BalanceLog", Numeric, Theme::Account, {}}, FeatureId::BalanceLog},
            {{"BalanceToTerm", Numeric, Theme::Account, {}}, FeatureId::BalanceToTerm},
        };
        for (std::size_t j = 0; j < kMacroSeriesCount; ++j) {
            e.push_back({{std::string(kMacroFeatureStems[j]) + "_0mo", Numeric, Theme::Macroeconomic, {}},
                         FeatureId::Macro0mo, j});
            e.push_back({{std::string(kMacroFeatureStems[j]) + "_12mo", Numeric, Theme::Macroeconomic, {}},
                         FeatureId::Macro12mo, j});
        }
        return e;
    }();
    return entries;
}

const CatalogueEntry& lookup(std::string_view name) {
    for (const auto& entry : catalogue_entries()) {
        if (entry.spec.name == name) return entry;
    }
    throw Error("unknown-feature", std::string(name));
}

int trend_level(int now, int before) {
    if (now > before) return kTrendUp;
    if (now < before) return kTrendDown;
    return kTrendFlat;
}

// Running delinquency-history state, advanced one month at a time.
struct HistoryState {
    int arrears_24 = 0;  // months with g0 > 0 among the 24 before the current one
    int perf_spell_num = 1;
    int time_in_spell = 0;
};

double feature_value(const CatalogueEntry& entry, const LoanHistory& h, std::size_t i,
                     const MacroScenario& macro, const HistoryState& state) {
    const MonthCovariates& cov = h.covariates[i];
    switch (entry.id) {
        case FeatureId::G0Delinq: return h.g0[i];
        case FeatureId::ArrearsTrend3mo: return trend_level(h.g0[i], h.g0[i >= 3 ? i - 3 : 0]);
        case FeatureId::NumArrearsEver24mo: return state.arrears_24;
        case FeatureId::TimeInPerfSpell: return state.time_in_spell;
        case FeatureId::PerfSpellNum: return state.perf_spell_num;
        case FeatureId::InterestRateMargin: return cov.interest_rate_margin;
        case FeatureId::PrelimPerc: return cov.prelim_perc;
        case FeatureId::PayMethodId: return static_cast<double>(cov.pay_method);
        case FeatureId::Term: return h.term_months;
        case FeatureId::BalanceLog: return std::log1p(cov.balance);
        case FeatureId::BalanceToTerm: return cov.balance / h.term_months;
        case FeatureId::Macro0mo: return macro_value(macro.at(h.month_at(i)), entry.series);
        case FeatureId::Macro12mo: return macro_value(macro.at(h.month_at(i) - 12), entry.series);
    }
    return 0.0;
}

// Direct (non-incremental) evaluation of the trailing-history state at i.
HistoryState state_at(const LoanHistory& h, std::size_t i) {
    HistoryState s;
    const std::size_t from = i >= 24 ? i - 24 : 0;
    for (std::size_t j = from; j < i; ++j) s.arrears_24 += h.g0[j] > 0 ? 1 : 0;
    std::size_t spell_start = 0;
    for (std::size_t j = 1; j <= i; ++j) {
        if (is_default(h.g0[j - 1]) && !is_default(h.g0[j])) {
            ++s.perf_spell_num;
            spell_start = j;
        }
    }
    s.time_in_spell = is_default(h.g0[i]) ? 0 : static_cast<int>(i - spell_start + 1);
    return s;
}

struct StratumKey {
    Month month;
    std::uint8_t y;
    auto operator<=>(const StratumKey&) const = default;
};

std::map<StratumKey, std::vector<std::size_t>> strata_of(const LabeledPanel& panel) {
    std::map<StratumKey, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < panel.size(); ++i) strata[{panel.months[i], panel.y[i]}].push_back(i);
    return strata;
}

// First `count` entries of `items` become a uniform random subset.
void partial_shuffle(std::vector<std::size_t>& items, std::size_t count, Rng& rng) {
    for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
        const std::size_t j = i + uniform_index(rng, items.size() - i);
        std::swap(items[i], items[j]);
    }
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
    return kind == FeatureKind::Numeric ? "numeric" : "categorical";
}

std::string_view to_string(Theme theme) {
    switch (theme) {
        case Theme::Delinquency: return "delinquency";
        case Theme::Account: return "account";
        case Theme::Behavioural: return "behavioural";
        case Theme::Macroeconomic: return "macroeconomic";
    }
    return "account";
}

FeatureKind parse_feature_kind(std::string_view text) {
    if (text == "numeric") return FeatureKind::Numeric;
    if (text == "categorical") return FeatureKind::Categorical;
    throw Error("bad-schema", "feature kind " + std::string(text));
}

Theme parse_theme(std::string_view text) {
    for (Theme t : {Theme::Delinquency, Theme::Account, Theme::Behavioural, Theme::Macroeconomic}) {
        if (to_string(t) == text) return t;
    }
    throw Error("bad-schema", "theme " + std::string(text));
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].name == name) return i;
    }
    return std::nullopt;
}

std::uint64_t FeatureSchema::hash() const {
    std::string canonical;
    for (const auto& f : features) {
        canonical += f.name;
        canonical += ';';
        canonical += to_string(f.kind);
        canonical += ';';
        canonical += to_string(f.theme);
        for (const auto& level : f.levels) {
            canonical += '|';
            canonical += level;
        }
        canonical += '\n';
    }
    return fnv1a(canonical);
}

std::string FeatureSchema::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

const std::vector<FeatureSpec>& feature_catalogue() {
    static const std::vector<FeatureSpec> specs = [] {
        std::vector<FeatureSpec> out;
        for (const auto& e : catalogue_entries()) out.push_back(e.spec);
        return out;
    }();
    return specs;
}

FeatureSchema default_schema() {
    static const std::vector<std::string> names = {
        "g0_Delinq",          "ArrearsTrend_3mo",       "Num_ArrearsEver_24mo",  "TimeInPerfSpell",
        "PerfSpell_Num",      "InterestRate_Margin",    "Prelim_Perc",           "PayMethod",
        "Term",               "BalanceLog",             "Repo_Rate_0mo",         "Inflation_Growth_0mo",
        "DTI_Level_0mo",      "DTI_Level_12mo",         "RealIncome_Growth_0mo", "RealIncome_Growth_12mo",
        "Employment_Growth_0mo", "Employment_Growth_12mo"};
    return make_schema(names);
}

FeatureSchema make_schema(std::span<const std::string> names) {
    FeatureSchema schema;
    for (const auto& name : names) {
        if (schema.index_of(name)) throw Error("bad-schema", "duplicate feature " + name);
        schema.features.push_back(lookup(name).spec);
    }
    return schema;
}

void LabeledPanel::append_row(const LabeledPanel& from, std::size_t i) {
    loan_ids.push_back(from.loan_ids[i]);
    months.push_back(from.months[i]);
    y.push_back(from.y[i]);
    stage1.push_back(from.stage1[i]);
    const auto r = from.row(i);
    features.insert(features.end(), r.begin(), r.end());
}

LabeledPanel LabeledPanel::empty_like() const {
    LabeledPanel out;
    out.definition = definition;
    out.schema = schema;
    return out;
}

LabeledPanel LabeledPanel::subset(std::span<const std::size_t> rows) const {
    LabeledPanel out = empty_like();
    out.loan_ids.reserve(rows.size());
    out.months.reserve(rows.size());
    out.y.reserve(rows.size());
    out.stage1.reserve(rows.size());
    out.features.reserve(rows.size() * schema.size());
    for (std::size_t i : rows) out.append_row(*this, i);
    return out;
}

std::vector<double> compute_features(const LoanHistory& history, std::size_t index,
                                     const MacroScenario& macro, const FeatureSchema& schema) {
    if (index >= history.g0.size()) throw Error("invalid-parameter", "history index out of range");
    const HistoryState state = state_at(history, index);
    std::vector<double> out;
    out.reserve(schema.size());
    for (const auto& f : schema.features) out.push_back(feature_value(lookup(f.name), history, index, macro, state));
    return out;
}

bool is_stage1(const LoanHistory& history, const SicrStatusSeries& status, std::size_t index) {
    const auto st = status.at(index);
    return !is_default(history.g0[index]) && !(st && *st);
}

LabeledPanel build_panel(std::span<const LoanHistory> portfolio, const MacroScenario& macro,
                         const SicrDefinition& definition, const FeatureSchema& schema,
                         const PanelWindow& window, unsigned threads) {
    if (portfolio.empty()) throw Error("empty-portfolio");
    if (macro.values.size() <= 12) throw Error("window-too-short", "macro scenario needs 13+ months");
    const Month first = std::max(window.first.value_or(macro.first_month + 12), macro.first_month + 12);
    const Month last = std::min(window.last.value_or(macro.last_month()), macro.last_month());

    std::vector<const CatalogueEntry*> entries;
    for (const auto& f : schema.features) {
        const CatalogueEntry& e = lookup(f.name);
        if (!(e.spec == f)) throw Error("bad-schema", "feature " + f.name + " differs from catalogue");
        entries.push_back(&e);
    }

    std::vector<LabeledPanel> parts(portfolio.size());
    parallel_for(portfolio.size(), threads, [&](std::size_t li) {
        const LoanHistory& h = portfolio[li];
        LabeledPanel& part = parts[li];
        if (h.g0.empty()) return;
        const SicrStatusSeries status = compute_status(h, definition.d, definition.s);
        const OutcomeSeries outcome = label_outcomes(status, definition.k);
        HistoryState state;
        for (std::size_t i = 0; i < h.g0.size(); ++i) {
            // Advance the trailing state to month i.
            if (i > 0) {
                if (h.g0[i - 1] > 0) ++state.arrears_24;
                if (i > 24 && h.g0[i - 25] > 0) --state.arrears_24;
                if (is_default(h.g0[i - 1]) && !is_default(h.g0[i])) {
                    ++state.perf_spell_num;
                    state.time_in_spell = 0;
                }
            }
            state.time_in_spell = is_default(h.g0[i]) ? 0 : state.time_in_spell + 1;

            const Month m = h.month_at(i);
            if (m < first || m > last) continue;
            const auto y = outcome.at(i);
            if (!y) continue;
            part.loan_ids.push_back(h.loan_id);
            part.months.push_back(m);
            part.y.push_back(*y ? 1 : 0);
            part.stage1.push_back(is_stage1(h, status, i) ? 1 : 0);
            for (const CatalogueEntry* e : entries) part.features.push_back(feature_value(*e, h, i, macro, state));
        }
    });

    LabeledPanel panel;
    panel.definition = definition;
    panel.schema = schema;
    std::size_t rows = 0;
    for (const auto& p : parts) rows += p.size();
    panel.loan_ids.reserve(rows);
    panel.months.reserve(rows);
    panel.y.reserve(rows);
    panel.stage1.reserve(rows);
    panel.features.reserve(rows * schema.size());
    for (auto& p : parts) {
        std::move(p.loan_ids.begin(), p.loan_ids.end(), std::back_inserter(panel.loan_ids));
        panel.months.insert(panel.months.end(), p.months.begin(), p.months.end());
        panel.y.insert(panel.y.end(), p.y.begin(), p.y.end());
        panel.stage1.insert(panel.stage1.end(), p.stage1.begin(), p.stage1.end());
        panel.features.insert(panel.features.end(), p.features.begin(), p.features.end());
    }
    return panel;
}

std::string_view to_string(RateKind kind) {
    switch (kind) {
        case RateKind::Actual: return "actual";
        case RateKind::Expected: return "expected";
        case RateKind::Discrete: return "discrete";
    }
    return "actual";
}

RateKind parse_rate_kind(std::string_view text) {
    for (RateKind k : {RateKind::Actual, RateKind::Expected, RateKind::Discrete}) {
        if (to_string(k) == text) return k;
    }
    throw Error("bad-rate-kind", std::string(text));
}

std::optional<double> RateSeries::rate_at(Month m) const {
    auto it = std::lower_bound(points.begin(), points.end(), m,
                               [](const RatePoint& p, Month v) { return p.month < v; });
    if (it == points.end() || it->month != m) return std::nullopt;
    return it->rate;
}

RateSeries sicr_rate_series(const LabeledPanel& panel) {
    std::map<Month, std::pair<std::size_t, std::size_t>> tally;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (!panel.stage1[i]) continue;
        auto& [n, events] = tally[panel.months[i]];
        ++n;
        events += panel.y[i];
    }
    RateSeries out;
    out.kind = RateKind::Actual;
    for (const auto& [month, counts] : tally) {
        const auto [n, events] = counts;
        out.points.push_back({month, n, static_cast<double>(events),
                              static_cast<double>(events) / static_cast<double>(n)});
    }
    return out;
}

std::vector<std::size_t> proportional_allocation(std::span<const std::size_t> sizes, std::size_t target) {
    const std::uint64_t total = std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0});
    if (target > total) throw Error("target-exceeds-population");
    std::vector<std::size_t> alloc(sizes.size(), 0);
    if (total == 0) return alloc;
    std::vector<std::uint64_t> remainder(sizes.size());
    std::size_t assigned = 0;
    for (std::size_t h = 0; h < sizes.size(); ++h) {
        const std::uint64_t q = static_cast<std::uint64_t>(target) * sizes[h];
        alloc[h] = static_cast<std::size_t>(q / total);
        remainder[h] = q % total;
        assigned += alloc[h];
    }
    std::vector<std::size_t> order(sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t r = 0; assigned < target; ++r, ++assigned) ++alloc[order[r]];
    return alloc;
}

LabeledPanel stratified_subsample(const LabeledPanel& panel, std::size_t target_rows, std::uint64_t seed) {
    if (target_rows > panel.size()) throw Error("target-exceeds-population");
    auto strata = strata_of(panel);
    std::vector<std::size_t> sizes;
    for (const auto& [key, rows] : strata) sizes.push_back(rows.size());
    const auto alloc = proportional_allocation(sizes, target_rows);

    Rng rng(derive_seed(seed, 0x73616d706c65ULL));
    std::vector<std::size_t> chosen;
    chosen.reserve(target_rows);
    std::size_t h = 0;
    for (auto& [key, rows] : strata) {
        partial_shuffle(rows, alloc[h], rng);
        chosen.insert(chosen.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(alloc[h]));
        ++h;
    }
    std::sort(chosen.begin(), chosen.end());
    return panel.subset(chosen);
}

std::pair<LabeledPanel, LabeledPanel> split(const LabeledPanel& panel, double train_fraction,
                                            std::uint64_t seed, SplitMode mode) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("invalid-parameter", "train_fraction must lie in (0,1)");
    }
    Rng rng(derive_seed(seed, 0x73706c6974ULL));
    std::vector<std::uint8_t> in_train(panel.size(), 0);
    const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(panel.size())));

    if (mode == SplitMode::Observation) {
        auto strata = strata_of(panel);
        std::vector<std::size_t> sizes;
        for (const auto& [key, rows] : strata) sizes.push_back(rows.size());
        const auto alloc = proportional_allocation(sizes, target);
        std::size_t h = 0;
        for (auto& [key, rows] : strata) {
            partial_shuffle(rows, alloc[h], rng);
            for (std::size_t r = 0; r < alloc[h]; ++r) in_train[rows[r]] = 1;
            ++h;
        }
    } else {
        std::vector<std::string> loans;
        std::unordered_map<std::string, std::vector<std::size_t>> rows_of;
        for (std::size_t i = 0; i < panel.size(); ++i) {
            auto [it, inserted] = rows_of.try_emplace(panel.loan_ids[i]);
            if (inserted) loans.push_back(panel.loan_ids[i]);
            it->second.push_back(i);
        }
        std::vector<std::size_t> order(loans.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        partial_shuffle(order, order.size(), rng);
        std::size_t taken = 0;
        for (std::size_t li : order) {
            if (taken >= target) break;
            for (std::size_t i : rows_of[loans[li]]) in_train[i] = 1;
            taken += rows_of[loans[li]].size();
        }
    }

    LabeledPanel train = panel.empty_like();
    LabeledPanel valid = panel.empty_like();
    for (std::size_t i = 0; i < panel.size(); ++i) (in_train[i] ? train : valid).append_row(panel, i);
    return {std::move(train), std::move(valid)};
}

MaeResult series_mae(const RateSeries& x, const RateSeries& y) {
    MaeResult out;
    double total = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < x.points.size() || j < y.points.size()) {
        if (j == y.points.size() || (i < x.points.size() && x.points[i].month < y.points[j].month)) {
            out.unmatched_months.push_back(x.points[i++].month);
        } else if (i == x.points.size() || y.points[j].month < x.points[i].month) {
            out.unmatched_months.push_back(y.points[j++].month);
        } else {
            total += std::abs(x.points[i].rate - y.points[j].rate);
            ++out.months_compared;
            ++i;
            ++j;
        }
    }
    if (out.months_compared == 0) throw Error("no-overlap");
    out.mae = total / static_cast<double>(out.months_compared);
    return out;
}

}  // namespace sicr

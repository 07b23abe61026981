#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "sicr/dataset.hpp"
#include "sicr/error.hpp"
#include "test_support.hpp"

using namespace sicr;

namespace {

MacroScenario flat_macro(Month first, int months) {
    MacroScenario m;
    m.first_month = first;
    for (int i = 0; i < months; ++i) {
        m.values.push_back({0.07 + 0.0001 * i, 0.05, 0.75, 0.02, 0.01});
        m.regimes.push_back(Regime::Normal);
    }
    return m;
}

struct Book {
    SimConfig config;
    MacroScenario macro;
    std::vector<LoanHistory> loans;
};

const Book& book() {
    static const Book b = [] {
        Book out;
        out.config = fixtures::small_sim(400, 2024);
        out.macro = gen_macro(out.config);
        out.loans = gen_portfolio(out.config, out.macro);
        return out;
    }();
    return b;
}

// Random panel with `months` cohorts and Bernoulli(rate) outcomes.
LabeledPanel random_panel(std::mt19937_64& rng, std::size_t rows, int months, double rate) {
    std::uniform_int_distribution<int> month(0, months - 1);
    std::bernoulli_distribution event(rate);
    std::vector<double> x(rows);
    std::vector<std::uint8_t> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        x[i] = static_cast<double>(i);
        y[i] = event(rng);
    }
    auto p = fixtures::one_feature_panel(x, y);
    for (std::size_t i = 0; i < rows; ++i) {
        p.months[i] = make_month(2010, 1) + month(rng);
        p.loan_ids[i] = "L" + std::to_string(i % (rows / 4 + 1));
    }
    return p;
}

std::map<std::pair<Month, int>, std::size_t> stratum_counts(const LabeledPanel& p) {
    std::map<std::pair<Month, int>, std::size_t> c;
    for (std::size_t i = 0; i < p.size(); ++i) ++c[{p.months[i], p.y[i]}];
    return c;
}

std::multiset<std::pair<std::string, Month>> row_keys(const LabeledPanel& p) {
    std::multiset<std::pair<std::string, Month>> keys;
    for (std::size_t i = 0; i < p.size(); ++i) keys.insert({p.loan_ids[i], p.months[i]});
    return keys;
}

}  // namespace

TEST(FeatureSchema, DefaultSchemaShape) {
    const auto s = default_schema();
    EXPECT_EQ(s.size(), 18u);
    std::set<std::string> names;
    for (const auto& f : s.features) names.insert(f.name);
    EXPECT_EQ(names.size(), s.size());
    for (const char* required : {"g0_Delinq", "ArrearsTrend_3mo", "Num_ArrearsEver_24mo", "TimeInPerfSpell",
                                 "PerfSpell_Num", "InterestRate_Margin", "Prelim_Perc", "Term", "BalanceLog",
                                 "Repo_Rate_0mo", "DTI_Level_12mo"}) {
        EXPECT_TRUE(s.index_of(required).has_value()) << required;
    }
    EXPECT_EQ(s.hash(), default_schema().hash());
    auto renamed = s;
    renamed.features[0].name = "other";
    EXPECT_NE(renamed.hash(), s.hash());
    EXPECT_EQ(s.hash_hex().size(), 16u);
}

TEST(FeatureSchema, MakeSchema) {
    const std::vector<std::string> names{"Term", "g0_Delinq"};
    const auto s = make_schema(names);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.features[0].name, "Term");
    const std::vector<std::string> bad{"NoSuchFeature"};
    try {
        make_schema(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "unknown-feature");
    }
}

TEST(ComputeFeatures, ArrearsEverCount) {
    const auto macro = flat_macro(make_month(2009, 1), 36);
    const auto h = fixtures::make_history("L1", make_month(2010, 3), {0, 0, 1, 0});
    const auto schema = default_schema();
    const auto x = compute_features(h, 3, macro, schema);
    EXPECT_EQ(x[*schema.index_of("Num_ArrearsEver_24mo")], 1.0);
    EXPECT_EQ(x[*schema.index_of("g0_Delinq")], 0.0);
    // 3 months before index 3 is index 0 (g0 = 0): flat.
    EXPECT_EQ(x[*schema.index_of("ArrearsTrend_3mo")], 0.0);
}

TEST(ComputeFeatures, PerformingSpellCounters) {
    const auto macro = flat_macro(make_month(2009, 1), 36);
    const auto h = fixtures::make_history("L1", make_month(2010, 3), std::vector<int>(6, 0));
    const auto schema = default_schema();
    for (std::size_t i = 0; i < 6; ++i) {
        const auto x = compute_features(h, i, macro, schema);
        EXPECT_EQ(x[*schema.index_of("PerfSpell_Num")], 1.0);
        EXPECT_EQ(x[*schema.index_of("TimeInPerfSpell")], static_cast<double>(i + 1));
    }
    // A cure out of default opens a second spell.
    const auto cured = fixtures::make_history("L2", make_month(2010, 3), {0, 1, 2, 3, 0, 0});
    const auto x = compute_features(cured, 5, macro, schema);
    EXPECT_EQ(x[*schema.index_of("PerfSpell_Num")], 2.0);
    EXPECT_EQ(x[*schema.index_of("TimeInPerfSpell")], 2.0);
    EXPECT_EQ(x[*schema.index_of("ArrearsTrend_3mo")], 2.0);  // down vs 3 months before
}

TEST(BuildPanel, RowCountMatchesCountingOracle) {
    const auto& b = book();
    for (const auto& def : {SicrDefinition{1, 1, 3, "1a(i)"}, SicrDefinition{2, 3, 12, "2c(iv)"}}) {
        const auto panel = build_panel(b.loans, b.macro, def, default_schema());
        std::size_t expected = 0;
        const Month first = b.macro.first_month + 12;
        for (const auto& h : b.loans) {
            const std::size_t n = h.g0.size();
            for (std::size_t i = 0; i < n; ++i) {
                const Month m = h.month_at(i);
                const std::size_t ahead = i + static_cast<std::size_t>(def.k);
                if (m >= first && m <= b.macro.last_month() && ahead < n && ahead + 1 >= static_cast<std::size_t>(def.s)) {
                    ++expected;
                }
            }
        }
        EXPECT_EQ(panel.size(), expected) << def.label;
        EXPECT_EQ(panel.features.size(), panel.size() * panel.schema.size());
        for (double v : panel.features) ASSERT_TRUE(std::isfinite(v));
    }
}

TEST(BuildPanel, FeaturesArePointwiseDeterministic) {
    const auto& b = book();
    const auto schema = default_schema();
    const auto panel = build_panel(b.loans, b.macro, {1, 2, 6, "1b(ii)"}, schema, {}, 3);
    std::map<std::string, const LoanHistory*> by_id;
    for (const auto& h : b.loans) by_id[h.loan_id] = &h;
    for (std::size_t r = 0; r < panel.size(); r += 7) {
        const LoanHistory& h = *by_id.at(panel.loan_ids[r]);
        const auto index = static_cast<std::size_t>(panel.months[r] - h.origination_month);
        const auto direct = compute_features(h, index, b.macro, schema);
        const auto stored = panel.row(r);
        ASSERT_TRUE(std::equal(direct.begin(), direct.end(), stored.begin())) << "row " << r;
    }
    EXPECT_EQ(panel, build_panel(b.loans, b.macro, {1, 2, 6, "1b(ii)"}, schema, {}, 1));
}

TEST(BuildPanel, StageOneConditioning) {
    const auto& b = book();
    const auto panel = build_panel(b.loans, b.macro, {1, 2, 3, "1b(i)"}, default_schema());
    std::map<std::string, const LoanHistory*> by_id;
    for (const auto& h : b.loans) by_id[h.loan_id] = &h;
    for (std::size_t r = 0; r < panel.size(); ++r) {
        const LoanHistory& h = *by_id.at(panel.loan_ids[r]);
        const auto status = compute_status(h, 1, 2);
        const auto i = static_cast<std::size_t>(panel.months[r] - h.origination_month);
        if (panel.stage1[r]) {
            ASSERT_FALSE(status.at(i).value_or(false));
            ASSERT_LT(h.g0[i], 3);
        }
    }
}

TEST(SicrRateSeries, DirectRatio) {
    std::vector<double> x(12, 0.0);
    std::vector<std::uint8_t> y = {1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
    auto p = fixtures::one_feature_panel(x, y);
    p.stage1[10] = 0;  // not at risk: ignored even though Y = 1
    p.stage1[11] = 0;
    const auto rates = sicr_rate_series(p);
    ASSERT_EQ(rates.points.size(), 1u);
    EXPECT_EQ(rates.points[0].n, 10u);
    EXPECT_DOUBLE_EQ(rates.points[0].rate, 0.2);

    std::fill(p.y.begin(), p.y.end(), 0);
    for (const auto& pt : sicr_rate_series(p).points) EXPECT_EQ(pt.rate, 0.0);
}

TEST(SicrRateSeries, EndToEndOracle) {
    // Recomputes the (1,1,3) rates straight from the raw histories.
    const auto& b = book();
    const auto panel = build_panel(b.loans, b.macro, {1, 1, 3, "1a(i)"}, default_schema());
    std::map<Month, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& h : b.loans) {
        for (std::size_t i = 0; i + 3 < h.g0.size(); ++i) {
            const Month m = h.month_at(i);
            if (m < b.macro.first_month + 12 || m > b.macro.last_month()) continue;
            if (h.g0[i] >= 1) continue;  // SICR now (or in default): not at risk
            auto& [n, events] = tally[m];
            ++n;
            events += h.g0[i + 3] >= 1 ? 1 : 0;
        }
    }
    const auto rates = sicr_rate_series(panel);
    ASSERT_EQ(rates.points.size(), tally.size());
    for (const auto& p : rates.points) {
        const auto [n, events] = tally.at(p.month);
        EXPECT_EQ(p.n, n);
        EXPECT_EQ(p.rate, static_cast<double>(events) / static_cast<double>(n));
    }
}

TEST(ProportionalAllocation, LargestRemainder) {
    const std::vector<std::size_t> sizes{80, 20};
    EXPECT_EQ(proportional_allocation(sizes, 50), (std::vector<std::size_t>{40, 10}));
    const std::vector<std::size_t> three{1, 1, 1};
    EXPECT_EQ(proportional_allocation(three, 2), (std::vector<std::size_t>{1, 1, 0}));
    const std::vector<std::size_t> uneven{5, 3, 2};
    EXPECT_EQ(proportional_allocation(uneven, 5), (std::vector<std::size_t>{3, 1, 1}));
    try {
        proportional_allocation(sizes, 101);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "target-exceeds-population");
    }
}

TEST(StratifiedSubsample, TwoStrata) {
    std::vector<double> x(100);
    std::vector<std::uint8_t> y(100, 0);
    for (std::size_t i = 80; i < 100; ++i) y[i] = 1;
    const auto p = fixtures::one_feature_panel(x, y);
    const auto s = stratified_subsample(p, 50, 1);
    EXPECT_EQ(s.size(), 50u);
    EXPECT_EQ(std::count(s.y.begin(), s.y.end(), 1), 10);
}

TEST(StratifiedSubsample, FullTargetAndErrors) {
    std::mt19937_64 rng(1);
    const auto p = random_panel(rng, 300, 6, 0.2);
    EXPECT_EQ(stratified_subsample(p, p.size(), 9), p);
    EXPECT_THROW(stratified_subsample(p, p.size() + 1, 9), Error);
    EXPECT_EQ(stratified_subsample(p, 120, 9), stratified_subsample(p, 120, 9));
}

TEST(StratifiedSubsample, PreservesStratumShares) {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::size_t> rows(50, 2000);
    std::uniform_real_distribution<double> rate(0.02, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_panel(rng, rows(rng), 12, rate(rng));
        const std::size_t target = p.size() / 3 + 1;
        const auto s = stratified_subsample(p, target, static_cast<std::uint64_t>(trial));
        ASSERT_EQ(s.size(), target);
        const auto full = stratum_counts(p);
        const auto sampled = stratum_counts(s);
        const double f = static_cast<double>(target) / static_cast<double>(p.size());
        for (const auto& [key, n] : full) {
            const double got = sampled.contains(key) ? static_cast<double>(sampled.at(key)) : 0.0;
            EXPECT_LT(std::abs(got - f * static_cast<double>(n)), 1.0);
        }
        const double full_rate = static_cast<double>(std::count(p.y.begin(), p.y.end(), 1)) / p.size();
        const double sample_rate = static_cast<double>(std::count(s.y.begin(), s.y.end(), 1)) / s.size();
        EXPECT_LE(std::abs(full_rate - sample_rate), static_cast<double>(full.size()) / target);
    }
}

TEST(Split, PartitionProperties) {
    std::mt19937_64 rng(3);
    const auto p = random_panel(rng, 1000, 10, 0.1);
    const auto [train, valid] = split(p, 0.7, 5);
    EXPECT_EQ(train.size(), 700u);
    EXPECT_EQ(valid.size(), 300u);
    auto keys = row_keys(train);
    const auto valid_keys = row_keys(valid);
    keys.insert(valid_keys.begin(), valid_keys.end());
    EXPECT_EQ(keys, row_keys(p));
    // Row-level disjointness: feature x is a unique row id here.
    std::set<double> ids(train.features.begin(), train.features.end());
    for (double v : valid.features) EXPECT_FALSE(ids.contains(v));
    const auto again = split(p, 0.7, 5);
    EXPECT_EQ(again.first, train);
    EXPECT_EQ(again.second, valid);
    EXPECT_THROW(split(p, 1.0, 5), Error);
    EXPECT_THROW(split(p, 0.0, 5), Error);
}

TEST(Split, AccountModeKeepsLoansTogether) {
    std::mt19937_64 rng(8);
    const auto p = random_panel(rng, 600, 6, 0.2);
    const auto [train, valid] = split(p, 0.7, 2, SplitMode::Account);
    std::set<std::string> train_loans(train.loan_ids.begin(), train.loan_ids.end());
    for (const auto& id : valid.loan_ids) EXPECT_FALSE(train_loans.contains(id));
    EXPECT_EQ(train.size() + valid.size(), p.size());
}

TEST(Split, TrainRatesRepresentative) {
    const SimConfig config;  // full-size default book
    const auto macro = gen_macro(config);
    const auto loans = gen_portfolio(config, macro);
    const auto panel = build_panel(loans, macro, {1, 1, 3, "1a(i)"}, default_schema());
    const auto [train, valid] = split(panel, 0.7, 77);
    const auto full = sicr_rate_series(panel);
    const auto part = sicr_rate_series(train);
    for (const auto& p : full.points) {
        const auto r = part.rate_at(p.month);
        ASSERT_TRUE(r.has_value());
        EXPECT_LT(std::abs(*r - p.rate), 0.02) << format_month(p.month);
    }
}

TEST(SeriesMae, Examples) {
    RateSeries a{RateKind::Actual, {{make_month(2010, 1), 10, 1, 0.10}, {make_month(2010, 2), 10, 2, 0.20}}};
    RateSeries b{RateKind::Actual, {{make_month(2010, 1), 10, 1, 0.12}, {make_month(2010, 2), 10, 2, 0.16}}};
    EXPECT_NEAR(representativeness_mae(a, b).mae, 0.03, 1e-15);
    EXPECT_EQ(series_mae(a, a).mae, 0.0);

    RateSeries c{RateKind::Actual, {{make_month(2010, 2), 10, 2, 0.25}, {make_month(2010, 3), 10, 2, 0.3}}};
    const auto partial = series_mae(a, c);
    EXPECT_EQ(partial.months_compared, 1u);
    EXPECT_NEAR(partial.mae, 0.05, 1e-15);
    EXPECT_EQ(partial.unmatched_months, (std::vector<Month>{make_month(2010, 1), make_month(2010, 3)}));

    RateSeries d{RateKind::Actual, {{make_month(2011, 1), 10, 2, 0.25}}};
    try {
        series_mae(a, d);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "no-overlap");
    }
}

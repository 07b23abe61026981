#include <gtest/gtest.h>

#include <optional>
#include <random>

#include "sicr/core.hpp"
#include "sicr/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace sicr;

namespace {

const std::vector<int> kTable1 = {0, 0, 1, 0, 1, 2, 3};  // t = 3..9

std::vector<int> defined_statuses(const SicrStatusSeries& s) {
    return {s.statuses.begin(), s.statuses.end()};
}

}  // namespace

TEST(ComputeStatus, Table1StickinessOne) {
    const auto status = compute_status(kTable1, 1, 1);
    EXPECT_EQ(status.offset, 0u);
    EXPECT_EQ(defined_statuses(status), (std::vector<int>{0, 0, 1, 0, 1, 1, 1}));
}

TEST(ComputeStatus, Table1StickinessTwo) {
    const auto status = compute_status(kTable1, 1, 2);
    EXPECT_EQ(status.offset, 1u);  // t = 3 has no complete 2-month window
    EXPECT_FALSE(status.at(0).has_value());
    EXPECT_EQ(defined_statuses(status), (std::vector<int>{0, 0, 0, 0, 1, 1}));
}

TEST(LabelOutcomes, Table1Columns) {
    const auto z11 = label_outcomes(compute_status(kTable1, 1, 1), 3);
    EXPECT_EQ(z11.offset, 0u);
    EXPECT_EQ(std::vector<int>(z11.outcomes.begin(), z11.outcomes.end()), (std::vector<int>{0, 1, 1, 1}));
    const auto z12 = label_outcomes(compute_status(kTable1, 1, 2), 3);
    EXPECT_EQ(z12.offset, 0u);
    EXPECT_EQ(std::vector<int>(z12.outcomes.begin(), z12.outcomes.end()), (std::vector<int>{0, 0, 1, 1}));
    // t = 7..9 are censored: their look-ahead leaves the observed series.
    EXPECT_FALSE(z11.at(4).has_value());
}

TEST(IsDefault, Table1Flags) {
    std::vector<bool> flags;
    for (int v : kTable1) flags.push_back(is_default(v));
    EXPECT_EQ(flags, (std::vector<bool>{false, false, false, false, false, false, true}));
    EXPECT_FALSE(is_default(2));
    EXPECT_TRUE(is_default(3));
    EXPECT_FALSE(is_default(0));
}

TEST(ComputeStatus, AllZerosNeverFlag) {
    const std::vector<int> zeros(30, 0);
    for (int d = 1; d <= 3; ++d) {
        for (int s = 1; s <= 4; ++s) {
            for (auto v : compute_status(zeros, d, s).statuses) EXPECT_EQ(v, 0);
        }
    }
}

TEST(ComputeStatus, MatchesWindowOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g0 = fixtures::random_g0(rng, 24, 4);
        for (auto [d, s] : {std::pair{2, 3}, std::pair{1, 1}, std::pair{3, 2}}) {
            const auto status = compute_status(g0, d, s);
            for (std::size_t t = 0; t < g0.size(); ++t) {
                EXPECT_EQ(status.at(t), oracles::window_status(g0, d, s, t));
            }
        }
    }
}

TEST(ComputeStatus, Errors) {
    const std::vector<int> empty;
    try {
        compute_status(empty, 1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "empty-series");
    }
    EXPECT_THROW(compute_status(kTable1, 0, 1), Error);
    EXPECT_THROW(compute_status(kTable1, 1, 0), Error);
}

TEST(ComputeStatus, StickinessLongerThanSeriesIsEmpty) {
    const auto status = compute_status(std::vector<int>{3, 3}, 1, 5);
    EXPECT_TRUE(status.statuses.empty());
    EXPECT_FALSE(status.at(0).has_value());
    EXPECT_TRUE(label_outcomes(status, 3).outcomes.empty());
}

TEST(LabelOutcomes, ZeroLagIsIdentity) {
    std::mt19937_64 rng(3);
    const auto g0 = fixtures::random_g0(rng, 40, 4);
    const auto status = compute_status(g0, 1, 2);
    const auto y = label_outcomes(status, 0);
    for (std::size_t t = 0; t < g0.size(); ++t) EXPECT_EQ(y.at(t), status.at(t));
}

TEST(LabelOutcomes, LagBeyondHorizonIsEmpty) {
    EXPECT_TRUE(label_outcomes(compute_status(kTable1, 1, 1), 7).outcomes.empty());
    EXPECT_EQ(label_outcomes(compute_status(kTable1, 1, 1), 6).outcomes.size(), 1u);
    EXPECT_THROW(label_outcomes(compute_status(kTable1, 1, 1), -1), Error);
}

TEST(CoreProperties, SubsetShiftAndDefault) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> len(1, 60);
    for (int trial = 0; trial < 500; ++trial) {
        const auto g0 = fixtures::random_g0(rng, len(rng), 6);
        for (int d = 1; d <= 3; ++d) {
            for (int s = 1; s <= 3; ++s) {
                const auto base = compute_status(g0, d, s);
                const auto stickier = compute_status(g0, d, s + 1);
                const auto stricter = compute_status(g0, d + 1, s);
                for (std::size_t t = 0; t < g0.size(); ++t) {
                    if (stickier.at(t).value_or(false)) {
                        EXPECT_TRUE(base.at(t).value());
                    }
                    if (stricter.at(t).value_or(false)) {
                        EXPECT_TRUE(base.at(t).value());
                    }
                }
                for (int k : {0, 3, 12}) {
                    const auto y = label_outcomes(base, k);
                    for (std::size_t t = 0; t < g0.size(); ++t) {
                        if (y.at(t).has_value()) {
                            EXPECT_EQ(y.at(t), base.at(t + k));
                        } else if (base.at(t + k).has_value()) {
                            ADD_FAILURE() << "outcome missing at " << t;
                        }
                    }
                }
            }
        }
        for (int d : {1, 2}) {
            const auto s1 = compute_status(g0, d, 1);
            for (std::size_t t = 0; t < g0.size(); ++t) {
                if (is_default(g0[t])) {
                    EXPECT_TRUE(s1.at(t).value());
                }
            }
        }
    }
}

TEST(CoreProperties, PositiveCountMonotone) {
    std::mt19937_64 rng(5);
    std::vector<std::vector<int>> book;
    for (int i = 0; i < 100; ++i) book.push_back(fixtures::random_g0(rng, 36, 5));
    auto positives = [&](int d, int s, int k) {
        std::size_t n = 0;
        for (const auto& g0 : book) {
            for (auto v : label_outcomes(compute_status(g0, d, s), k).outcomes) n += v;
        }
        return n;
    };
    for (int k : {3, 6}) {
        for (int d = 1; d <= 2; ++d) {
            EXPECT_GE(positives(d, 1, k), positives(d, 2, k));
            EXPECT_GE(positives(d, 2, k), positives(d, 3, k));
        }
        for (int s = 1; s <= 3; ++s) EXPECT_GE(positives(1, s, k), positives(2, s, k));
    }
}

TEST(DefinitionGrid, CanonicalTwentyFour) {
    const auto grid = definition_grid({1, 2}, {1, 2, 3}, {3, 6, 9, 12});
    ASSERT_EQ(grid.size(), 24u);
    EXPECT_EQ(grid.front(), (SicrDefinition{1, 1, 3, "1a(i)"}));
    EXPECT_EQ(grid.back(), (SicrDefinition{2, 3, 12, "2c(iv)"}));
    EXPECT_EQ(grid[5].label, "1b(ii)");
    EXPECT_EQ(grid[12].label, "2a(i)");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = i + 1; j < grid.size(); ++j) EXPECT_NE(grid[i].label, grid[j].label);
    }
}

TEST(DefinitionGrid, SingletonAndExtendedK) {
    const auto one = definition_grid({1}, {1}, {3});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].label, "1a(i)");

    const auto seven = definition_grid({1}, {1}, {3, 6, 9, 12, 18, 24, 36});
    ASSERT_EQ(seven.size(), 7u);
    EXPECT_EQ(seven[4], (SicrDefinition{1, 1, 18, "1a(v)"}));
    EXPECT_EQ(seven[6].label, "1a(vii)");

    const auto ladder = definition_grid({1}, {1}, {18}, {3, 6, 9, 12, 18, 24, 36});
    EXPECT_EQ(ladder[0].label, "1a(v)");
    EXPECT_THROW(definition_grid({1}, {1}, {5}, {3, 6}), Error);
    EXPECT_THROW(definition_grid({}, {1}, {3}), Error);
    EXPECT_THROW(definition_grid({0}, {1}, {3}), Error);
}

TEST(DefinitionLabel, RoundTrip) {
    EXPECT_EQ(roman_numeral(4), "iv");
    EXPECT_EQ(roman_numeral(9), "ix");
    EXPECT_EQ(roman_numeral(14), "xiv");
    const auto parts = parse_definition_label("2c(iv)");
    EXPECT_EQ(parts.d, 2);
    EXPECT_EQ(parts.s, 3);
    EXPECT_EQ(parts.k_rank, 4);
    EXPECT_THROW(parse_definition_label("c(i)"), Error);
    EXPECT_THROW(parse_definition_label("1a(q)"), Error);
}

TEST(LoanHistory, Validation) {
    auto h = fixtures::make_history("L1", make_month(2010, 1), {0, 1, 2});
    EXPECT_NO_THROW(validate_history(h));
    h.term_months = 2;
    EXPECT_THROW(validate_history(h), Error);
    EXPECT_NO_THROW(validate_history(h, 1));
    h.term_months = 10;
    h.g0[1] = -1;
    EXPECT_THROW(validate_history(h), Error);
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "sicr/error.hpp"
#include "sicr/io.hpp"
#include "test_support.hpp"

using namespace sicr;
namespace fs = std::filesystem;

namespace {

struct Book {
    SimConfig config;
    MacroScenario macro;
    std::vector<LoanHistory> loans;
    LabeledPanel panel;
};

const Book& book() {
    static const Book b = [] {
        Book out;
        out.config = fixtures::small_sim(60, 7);
        out.macro = gen_macro(out.config);
        out.loans = gen_portfolio(out.config, out.macro);
        out.panel = build_panel(out.loans, out.macro, {1, 2, 6, "1b(ii)"}, default_schema());
        return out;
    }();
    return b;
}

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

void expect_same_model(const LogitModel& a, const LogitModel& b) {
    EXPECT_EQ(a.layout, b.layout);
    EXPECT_EQ(a.intercept, b.intercept);
    EXPECT_EQ(a.coefficients, b.coefficients);
    ASSERT_EQ(a.standard_errors.size(), b.standard_errors.size());
    for (std::size_t i = 0; i < a.standard_errors.size(); ++i) {
        EXPECT_TRUE(same_double(a.standard_errors[i], b.standard_errors[i]));
    }
    EXPECT_EQ(a.log_likelihood, b.log_likelihood);
    EXPECT_EQ(a.penalised_log_likelihood, b.penalised_log_likelihood);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.converged, b.converged);
    EXPECT_EQ(a.warning, b.warning);
    EXPECT_EQ(a.n_obs, b.n_obs);
    EXPECT_EQ(a.ridge, b.ridge);
    EXPECT_EQ(a.loglik_trace, b.loglik_trace);
}

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("sicr_io_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST(Primitives, ExactFormattingRoundTrips) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        EXPECT_EQ(parse_double(format_exact(v)), v);
    }
    EXPECT_TRUE(std::isnan(parse_double(format_exact(NAN))));
    EXPECT_EQ(parse_double(format_exact(INFINITY)), INFINITY);
    EXPECT_EQ(parse_double(format_exact(-INFINITY)), -INFINITY);
}

TEST(Primitives, FixedFormatting) {
    EXPECT_EQ(format_fixed(0.1234567), "0.123457");
    EXPECT_EQ(format_fixed(-0.0000001), "0.000000");
    EXPECT_EQ(format_fixed(2.0), "2.000000");
    EXPECT_EQ(format_fixed(1.5, 2), "1.50");
}

TEST(Primitives, NumberErrors) {
    for (const char* bad : {"", "1.5x", "abc", "1 2"}) {
        try {
            parse_double(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), "bad-number");
        }
    }
    EXPECT_THROW(parse_integer("1.5"), Error);
    EXPECT_EQ(parse_integer("-42"), -42);
    EXPECT_EQ(parse_double(" 0.5 "), 0.5);
}

TEST(Primitives, Csv) {
    std::vector<std::string> comments;
    const auto t = parse_csv("# hello\na,b\n1,2\n3,4\n", &comments);
    EXPECT_EQ(comments, (std::vector<std::string>{"hello"}));
    EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1][1], "4");
    EXPECT_THROW(parse_csv("a,b\n1\n"), Error);
    const std::vector<std::string> bad = {"x,y"};
    EXPECT_THROW(join_csv(bad), Error);
}

TEST(Files, AtomicWriteAndMissingInput) {
    const auto dir = temp_dir("files");
    const auto path = dir / "nested" / "f.txt";
    write_text_file_atomic(path, "content\n");
    EXPECT_EQ(read_text_file(path), "content\n");
    write_text_file_atomic(path, "second\n");
    EXPECT_EQ(read_text_file(path), "second\n");
    try {
        read_text_file(dir / "absent.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "missing-input");
    }
    fs::remove_all(dir);
}

TEST(RoundTrip, PortfolioAndMacro) {
    const auto& b = book();
    EXPECT_EQ(parse_portfolio_csv(write_portfolio_csv(b.loans)), b.loans);
    EXPECT_EQ(parse_macro_csv(write_macro_csv(b.macro)), b.macro);
}

TEST(RoundTrip, PortfolioRejectsGaps) {
    auto text = write_portfolio_csv(std::vector<LoanHistory>{fixtures::make_history("A", make_month(2007, 1), {0, 0, 1})});
    // Drop the second month of the loan.
    const auto first = text.find('\n', text.find('\n') + 1);
    const auto second = text.find('\n', first + 1);
    text.erase(first + 1, second - first);
    EXPECT_THROW(parse_portfolio_csv(text), Error);
}

TEST(RoundTrip, Panel) {
    const auto& b = book();
    const auto text = write_panel_csv(b.panel);
    const auto back = parse_panel_csv(text);
    EXPECT_EQ(back, b.panel);
    EXPECT_EQ(write_panel_csv(back), text);
}

TEST(RoundTrip, PanelHashTamperIsSchemaMismatch) {
    auto text = write_panel_csv(book().panel);
    const auto pos = text.find("# schema_hash=");
    ASSERT_NE(pos, std::string::npos);
    const auto digit = pos + std::string("# schema_hash=").size();
    text[digit] = text[digit] == '0' ? '1' : '0';
    try {
        parse_panel_csv(text);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "schema-mismatch");
    }
}

TEST(RoundTrip, Model) {
    const auto model = fit(book().panel);
    const auto text = write_model(model);
    expect_same_model(parse_model(text), model);
    EXPECT_EQ(write_model(parse_model(text)), text);

    // Singular information leaves NaN standard errors, which must survive too.
    FitOptions options;
    options.ridge = 1.0;
    const auto flat = fit(fixtures::one_feature_panel({1, 1, 1, 1}, {0, 1, 0, 1}), options);
    expect_same_model(parse_model(write_model(flat)), flat);
}

TEST(RoundTrip, ReportAndRates) {
    const auto& b = book();
    const auto [train, valid] = split(b.panel, 0.7, 3);
    EvaluationSettings settings;
    settings.replicates = 100;
    const auto ev = evaluate_definition(b.panel.definition, train, valid, settings, &b.panel);
    const std::vector<DefinitionReport> reports = {ev.report, ev.report};
    const auto text = write_report_csv(reports);
    const auto back = parse_report_csv(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].definition, ev.report.definition);
    EXPECT_EQ(back[0].n_train, ev.report.n_train);
    EXPECT_NEAR(back[0].auc_probabilistic.auc, ev.report.auc_probabilistic.auc, 5e-7);
    EXPECT_EQ(write_report_csv(back), text);

    const std::vector<RateSeries> rates = {ev.actual, ev.expected, ev.discrete};
    const auto rtext = write_rate_series_csv(rates);
    const auto rback = parse_rate_series_csv(rtext);
    ASSERT_EQ(rback.size(), 3u);
    EXPECT_EQ(rback[0].kind, RateKind::Actual);
    EXPECT_EQ(rback[2].kind, RateKind::Discrete);
    EXPECT_EQ(rback[1].points.size(), ev.expected.points.size());
    EXPECT_EQ(write_rate_series_csv(rback), rtext);
}

TEST(RoundTrip, AttributionRankingPlot) {
    const auto& b = book();
    const auto model = fit(b.panel);
    const auto mc = mc_shapley(model, b.panel, 5, 2);
    auto exact = exact_linear_shapley(model, b.panel);
    EXPECT_EQ(parse_attribution_csv(write_attribution_csv(exact)), exact);

    const auto ranking = importance_ranking(mc);
    const auto text = write_ranking_csv(ranking);
    const auto back = parse_ranking_csv(text);
    EXPECT_EQ(back.sample_size, ranking.sample_size);
    ASSERT_EQ(back.entries.size(), ranking.entries.size());
    EXPECT_EQ(back.entries[0].feature, ranking.entries[0].feature);
    EXPECT_EQ(write_ranking_csv(back), text);

    const std::vector<PlotPoint> points = {{make_month(2008, 1), "A", 0.0123456789},
                                           {make_month(2008, 2), "A", 0.02},
                                           {make_month(2008, 1), "B", 0.5}};
    const auto ptext = write_plot_csv(points);
    EXPECT_EQ(write_plot_csv(parse_plot_csv(ptext)), ptext);
    const auto svg = line_chart_svg(points, "rates");
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("polyline"), std::string::npos);
}

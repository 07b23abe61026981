#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "sicr/cli.hpp"
#include "sicr/config.hpp"
#include "sicr/error.hpp"
#include "sicr/io.hpp"
#include "sicr/pipeline.hpp"
#include "test_support.hpp"

using namespace sicr;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const fs::path& out) {
    RunConfig c;
    c.seed = 31;
    c.simulation = fixtures::small_sim(250, 31);
    c.replicates = 100;
    c.sampling.target_rows = 4000;
    c.attribution.samples = 10;
    c.attribution.rows = 50;
    c.attribution.definitions = {"1a(i)"};
    c.definitions = {"1a(i)", "1b(iii)"};
    c.output_dir = out.string();
    return c;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("sicr_pipeline_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

// A simulated book plus its config file, shared by the CLI tests.
struct Workspace {
    fs::path dir;
    fs::path config_path;
    RunConfig config;
};

const Workspace& workspace() {
    static const Workspace w = [] {
        Workspace out;
        out.dir = fresh_dir("cli");
        out.config = small_config(out.dir);
        out.config_path = out.dir / "run.ini";
        write_text_file_atomic(out.config_path, write_config(out.config));
        const auto r = cli({"simulate", "--config", out.config_path.string()});
        if (r.code != 0) throw std::runtime_error("simulate failed: " + r.err);
        return out;
    }();
    return w;
}

}  // namespace

TEST(Seeds, DependOnLabelNotOrder) {
    const auto a = definition_seeds(1, "1a(i)");
    const auto b = definition_seeds(1, "1a(ii)");
    EXPECT_NE(a.subsample, b.subsample);
    EXPECT_NE(a.split, a.evaluation);
    EXPECT_EQ(definition_seeds(1, "1a(i)").attribution, a.attribution);
    EXPECT_EQ(label_slug("1a(iii)"), "1a_iii");
}

TEST(Cli, FileMediatedChainMatchesInProcess) {
    const auto& w = workspace();
    const std::string cfg = w.config_path.string();
    const std::string dir = w.dir.string();
    ASSERT_EQ(cli({"label", "--config", cfg, "--portfolio", dir + "/portfolio.csv", "--macro", dir + "/macro.csv",
                   "--definitions", "1b(iii)"}).code, 0);
    ASSERT_EQ(cli({"sample", "--config", cfg, "--panel", dir + "/panel_1b_iii.csv"}).code, 0);
    ASSERT_EQ(cli({"fit", "--config", cfg, "--panel", dir + "/1b_iii_train.csv"}).code, 0);
    const auto r = cli({"evaluate", "--config", cfg, "--model", dir + "/1b_iii.model", "--train",
                        dir + "/1b_iii_train.csv", "--valid", dir + "/1b_iii_valid.csv", "--population",
                        dir + "/panel_1b_iii.csv"});
    ASSERT_EQ(r.code, 0) << r.err;

    const auto portfolio = parse_portfolio_csv(read_text_file(w.dir / "portfolio.csv"));
    const auto macro = parse_macro_csv(read_text_file(w.dir / "macro.csv"));
    const auto sim = simulation_config(w.config);
    EXPECT_EQ(macro, gen_macro(sim));
    EXPECT_EQ(portfolio, gen_portfolio(sim, macro));

    const auto outcome = run_definition(w.config, portfolio, macro, {1, 2, 9, "1b(iii)"});
    const DefinitionReport reports[] = {outcome.evaluation.report};
    EXPECT_EQ(read_text_file(w.dir / "1b_iii_report.csv"), write_report_csv(reports));
    const RateSeries series[] = {outcome.evaluation.actual, outcome.evaluation.expected, outcome.evaluation.discrete};
    EXPECT_EQ(read_text_file(w.dir / "1b_iii_rates.csv"), write_rate_series_csv(series));
    EXPECT_EQ(read_text_file(w.dir / "1b_iii.model"), write_model(outcome.evaluation.model));

    const auto a = cli({"attribute", "--config", cfg, "--model", dir + "/1b_iii.model", "--panel",
                        dir + "/1b_iii_valid.csv", "--rows", "30", "--samples", "20"});
    ASSERT_EQ(a.code, 0) << a.err;
    const auto rows = parse_attribution_csv(read_text_file(w.dir / "1b_iii_attribution.csv"));
    EXPECT_EQ(rows.rows(), 30u);
    EXPECT_EQ(rows.width(), default_schema().size());
    EXPECT_EQ(parse_ranking_csv(read_text_file(w.dir / "1b_iii_ranking.csv")).sample_size, 30u);
}

TEST(Cli, LabelIsReproducible) {
    const auto& w = workspace();
    const std::string dir = w.dir.string();
    const auto run = [&](const std::string& out) {
        return cli({"label", "--config", w.config_path.string(), "--portfolio", dir + "/portfolio.csv", "--macro",
                    dir + "/macro.csv", "--definitions", "1a(i)", "--out", out, "--parallel", "3"});
    };
    ASSERT_EQ(run(dir + "/label_a").code, 0);
    ASSERT_EQ(run(dir + "/label_b").code, 0);
    EXPECT_EQ(read_text_file(w.dir / "label_a" / "panel_1a_i.csv"), read_text_file(w.dir / "label_b" / "panel_1a_i.csv"));
}

TEST(Cli, ExitCodes) {
    const auto& w = workspace();
    const std::string dir = w.dir.string();

    const auto missing = cli({"fit", "--panel", dir + "/no_such_panel.csv", "--out", dir});
    EXPECT_EQ(missing.code, kExitMissingInput);
    EXPECT_NE(missing.err.find("no_such_panel.csv"), std::string::npos);

    write_text_file_atomic(w.dir / "one_class.csv",
                           write_panel_csv(fixtures::one_feature_panel({1, 2, 3}, {0, 0, 0})));
    const auto degenerate = cli({"fit", "--panel", dir + "/one_class.csv", "--out", dir});
    EXPECT_EQ(degenerate.code, kExitInternal);
    EXPECT_NE(degenerate.err.find("degenerate-outcome"), std::string::npos);

    // A model over a different schema.
    write_text_file_atomic(w.dir / "other.model", write_model(fit(fixtures::one_feature_panel({1, 2, 3, 4}, {0, 1, 0, 1}))));
    ASSERT_EQ(cli({"label", "--config", w.config_path.string(), "--portfolio", dir + "/portfolio.csv", "--macro",
                   dir + "/macro.csv", "--definitions", "1a(i)"}).code, 0);
    const auto mismatch = cli({"attribute", "--model", dir + "/other.model", "--panel", dir + "/panel_1a_i.csv",
                               "--out", dir});
    EXPECT_EQ(mismatch.code, kExitSchemaMismatch);

    const auto unknown = cli({"grid", "--config", w.config_path.string(), "--definitions", "7q(i)"});
    EXPECT_EQ(unknown.code, kExitInternal);
    EXPECT_NE(cli({"frobnicate"}).code, kExitOk);
}

TEST(Cli, StandaloneBinaryExitCodes) {
    const char* binary = std::getenv("SICR_CLI");
    if (!binary) GTEST_SKIP() << "SICR_CLI not set";
    const auto dir = fresh_dir("binary");
    const std::string quiet = " > " + (dir / "log.txt").string() + " 2>&1";
    const auto status = [&](const std::string& args) {
        const int raw = std::system((std::string(binary) + " " + args + quiet).c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    EXPECT_EQ(status("fit --panel " + (dir / "absent.csv").string()), 2);
    EXPECT_EQ(status("simulate --help"), 0);
    fs::remove_all(dir);
}

TEST(Grid, ByteIdenticalReruns) {
    const auto base = fresh_dir("grid");
    auto first = small_config(base / "a");
    first.parallel = 2;
    auto second = small_config(base / "b");
    const auto ra = run_grid(first);
    const auto rb = run_grid(second);
    ASSERT_TRUE(ra.ok()) << ra.failures.front();
    ASSERT_TRUE(rb.ok());
    EXPECT_EQ(ra.reports.size(), 2u);
    for (const char* file : {"report.csv", "summary.csv", "macro.csv", "rates/1a_i.csv", "rates/1b_iii.csv",
                             "models/1a_i.model", "attribution/1a_i_ranking.csv", "plots/actual_rates_1a.csv"}) {
        EXPECT_EQ(read_text_file(base / "a" / file), read_text_file(base / "b" / file)) << file;
    }
    EXPECT_FALSE(fs::exists(base / "a" / "attribution" / "1b_iii_ranking.csv"));
    EXPECT_TRUE(fs::exists(base / "a" / "plots" / "fit_1a_i.svg"));
    // The written config reproduces the run.
    const auto reread = load_config(base / "a" / "config.ini");
    EXPECT_EQ(write_config(reread), write_config(first));
    fs::remove_all(base);
}

TEST(Grid, FailuresAreRecordedPerDefinition) {
    const auto base = fresh_dir("failing");
    auto config = small_config(base);
    config.replicates = 10;  // rejected by the bootstrap
    const auto result = run_grid(config);
    EXPECT_FALSE(result.ok());
    EXPECT_EQ(result.failures.size(), 2u);
    EXPECT_NE(result.failures.front().find("1a(i)"), std::string::npos);
    EXPECT_TRUE(fs::exists(base / "failures.txt"));
    fs::remove_all(base);
}

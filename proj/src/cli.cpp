#include "sicr/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "sicr/config.hpp"
#include "sicr/error.hpp"
#include "sicr/io.hpp"
#include "sicr/pipeline.hpp"

namespace sicr {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<unsigned> parallel;
    std::vector<std::string> definitions;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "configuration file (sectioned key = value)");
    cmd->add_option("--seed", c.seed, "root seed; overrides the config");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--parallel", c.parallel, "worker threads");
    cmd->add_option("--definitions", c.definitions, "definition labels to keep, e.g. 1a(i),2c(iv)")->delimiter(',');
}

RunConfig resolve(const Common& c) {
    RunConfig config = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
    if (c.seed) config.seed = *c.seed;
    if (!c.out.empty()) config.output_dir = c.out;
    if (c.parallel) config.parallel = std::max(1u, *c.parallel);
    if (!c.definitions.empty()) config.definitions = c.definitions;
    return config;
}

void check_schema(const LogitModel& model, const LabeledPanel& panel, const std::string& path) {
    if (model.layout.schema.hash() != panel.schema.hash()) {
        throw Error("schema-mismatch", "model schema " + model.layout.schema.hash_hex() + " vs panel " +
                                           panel.schema.hash_hex() + " in " + path);
    }
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"SICR definition modelling toolkit", "sicr_cli"};
    app.require_subcommand(1);
    Common common;
    std::string portfolio_path, macro_path, panel_path, model_path, train_path, valid_path, population_path;
    std::string method = "mc";
    std::optional<std::size_t> samples;
    std::size_t rows = 0;

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic portfolio and macro scenario");
    auto* label = app.add_subcommand("label", "build labelled panels for grid definitions");
    auto* sample = app.add_subcommand("sample", "stratified subsample and train/validation split of a panel");
    auto* fit_cmd = app.add_subcommand("fit", "fit a logistic regression model to a panel");
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a fitted model on train/validation panels");
    auto* attribute = app.add_subcommand("attribute", "Shapley attributions and importance ranking");
    auto* grid = app.add_subcommand("grid", "run the full definition grid");
    for (auto* cmd : {simulate, label, sample, fit_cmd, evaluate, attribute, grid}) add_common(cmd, common);

    label->add_option("--portfolio", portfolio_path)->required();
    label->add_option("--macro", macro_path)->required();
    sample->add_option("--panel", panel_path)->required();
    fit_cmd->add_option("--panel", panel_path)->required();
    evaluate->add_option("--model", model_path)->required();
    evaluate->add_option("--train", train_path)->required();
    evaluate->add_option("--valid", valid_path)->required();
    evaluate->add_option("--population", population_path, "panel for rate series (default: train + valid)");
    attribute->add_option("--model", model_path)->required();
    attribute->add_option("--panel", panel_path)->required();
    attribute->add_option("--method", method, "mc or exact")->check(CLI::IsMember({"mc", "exact"}));
    attribute->add_option("--samples", samples, "Monte Carlo samples per row and feature");
    attribute->add_option("--rows", rows, "explain at most this many rows (0 = all)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        const RunConfig config = resolve(common);
        const fs::path out_dir = config.output_dir;

        if (simulate->parsed()) {
            const auto sim = simulation_config(config);
            const auto macro = gen_macro(sim);
            const auto portfolio = gen_portfolio(sim, macro, config.parallel);
            write_text_file_atomic(out_dir / "portfolio.csv", write_portfolio_csv(portfolio));
            write_text_file_atomic(out_dir / "macro.csv", write_macro_csv(macro));
            out << "simulated " << portfolio.size() << " loans into " << out_dir.string() << "\n";
        } else if (label->parsed()) {
            const auto portfolio = parse_portfolio_csv(read_text_file(portfolio_path));
            const auto macro = parse_macro_csv(read_text_file(macro_path));
            for (const auto& def : grid_definitions(config)) {
                const auto panel = build_panel(portfolio, macro, def, default_schema(), {}, config.parallel);
                const auto path = out_dir / ("panel_" + label_slug(def.label) + ".csv");
                write_text_file_atomic(path, write_panel_csv(panel));
                out << def.label << ": " << panel.size() << " rows -> " << path.string() << "\n";
            }
        } else if (sample->parsed()) {
            const auto full = parse_panel_csv(read_text_file(panel_path));
            const auto seeds = definition_seeds(config.seed, full.definition.label);
            const auto subsample =
                stratified_subsample(full, std::min(config.sampling.target_rows, full.size()), seeds.subsample);
            const auto [train, valid] =
                split(subsample, config.sampling.train_fraction, seeds.split, config.sampling.split_mode);
            const std::string slug = label_slug(full.definition.label);
            write_text_file_atomic(out_dir / (slug + "_train.csv"), write_panel_csv(train));
            write_text_file_atomic(out_dir / (slug + "_valid.csv"), write_panel_csv(valid));
            const auto full_rates = sicr_rate_series(full);
            out << full.definition.label << ": train " << train.size() << ", valid " << valid.size()
                << ", rate MAE subsample " << format_fixed(representativeness_mae(full_rates, sicr_rate_series(subsample)).mae)
                << ", train " << format_fixed(representativeness_mae(full_rates, sicr_rate_series(train)).mae) << "\n";
        } else if (fit_cmd->parsed()) {
            const auto panel = parse_panel_csv(read_text_file(panel_path));
            const auto model = fit(panel, config.modelling);
            const auto path = out_dir / (label_slug(panel.definition.label) + ".model");
            write_text_file_atomic(path, write_model(model));
            if (!model.converged) err << "warning: " << model.warning << "\n";
            out << panel.definition.label << ": fitted on " << model.n_obs << " rows in " << model.iterations
                << " iterations -> " << path.string() << "\n";
        } else if (evaluate->parsed()) {
            auto model = parse_model(read_text_file(model_path));
            const auto train = parse_panel_csv(read_text_file(train_path));
            const auto valid = parse_panel_csv(read_text_file(valid_path));
            check_schema(model, train, train_path);
            check_schema(model, valid, valid_path);
            std::optional<LabeledPanel> population;
            if (!population_path.empty()) {
                population = parse_panel_csv(read_text_file(population_path));
                check_schema(model, *population, population_path);
            }
            const auto& def = train.definition;
            const auto seeds = definition_seeds(config.seed, def.label);
            const auto result = evaluate_with_model(def, std::move(model), train, valid,
                                                    evaluation_settings(config, seeds.evaluation),
                                                    population ? &*population : nullptr);
            const std::string slug = label_slug(def.label);
            const DefinitionReport reports[] = {result.report};
            write_text_file_atomic(out_dir / (slug + "_report.csv"), write_report_csv(reports));
            const RateSeries series[] = {result.actual, result.expected, result.discrete};
            write_text_file_atomic(out_dir / (slug + "_rates.csv"), write_rate_series_csv(series));
            out << def.label << ": AUC " << format_fixed(result.report.auc_probabilistic.auc) << ", cut-off "
                << format_fixed(result.report.cutoff.c_star) << "\n";
        } else if (attribute->parsed()) {
            const auto model = parse_model(read_text_file(model_path));
            auto panel = parse_panel_csv(read_text_file(panel_path));
            check_schema(model, panel, panel_path);
            const auto seeds = definition_seeds(config.seed, panel.definition.label);
            if (rows > 0) panel = attribution_rows(panel, rows, seeds.attribution);
            AttributionRows attributions;
            if (method == "exact") {
                attributions = exact_linear_shapley(model, panel);
            } else {
                MonteCarloOptions options;
                options.n_samples = samples.value_or(config.attribution.samples);
                options.seed = seeds.attribution;
                options.threads = config.parallel;
                attributions = mc_shapley(model, panel, panel, options);
            }
            const std::string slug = label_slug(panel.definition.label);
            const auto ranking = importance_ranking(attributions);
            write_text_file_atomic(out_dir / (slug + "_attribution.csv"), write_attribution_csv(attributions));
            write_text_file_atomic(out_dir / (slug + "_ranking.csv"), write_ranking_csv(ranking));
            write_text_file_atomic(out_dir / (slug + "_attribution_probability_approx.csv"),
                                   write_attribution_csv(probability_scale_report(model, panel, attributions)));
            for (const auto& e : ranking.entries) {
                out << e.rank << ". " << e.feature << " " << format_fixed(e.psi_bar) << "\n";
            }
        } else if (grid->parsed()) {
            const auto result = run_grid(config);
            out << result.reports.size() << " definitions evaluated -> " << out_dir.string() << "\n";
            if (!result.ok()) {
                for (const auto& f : result.failures) err << "error: " << f << "\n";
                return kExitInternal;
            }
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        if (e.code() == "missing-input") return kExitMissingInput;
        if (e.code() == "schema-mismatch") return kExitSchemaMismatch;
        return kExitInternal;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace sicr

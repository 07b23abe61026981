#include "sicr/pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "sicr/error.hpp"
#include "sicr/io.hpp"
#include "sicr/parallel.hpp"
#include "sicr/random.hpp"

namespace sicr {

namespace fs = std::filesystem;

DefinitionSeeds definition_seeds(std::uint64_t root_seed, const std::string& label) {
    const std::uint64_t base = derive_seed(root_seed, fnv1a(label));
    return {derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3), derive_seed(base, 4)};
}

std::string label_slug(const std::string& label) {
    std::string out;
    for (char c : label) {
        if (c == '(') out += '_';
        else if (c != ')') out += c;
    }
    return out;
}

PreparedDefinition prepare_definition(const RunConfig& config, std::span<const LoanHistory> portfolio,
                                      const MacroScenario& macro, const SicrDefinition& definition) {
    const auto seeds = definition_seeds(config.seed, definition.label);
    PreparedDefinition p;
    p.full = build_panel(portfolio, macro, definition, default_schema());
    if (p.full.empty()) throw Error("empty-panel", "no labelled rows");
    p.sample = stratified_subsample(p.full, std::min(config.sampling.target_rows, p.full.size()), seeds.subsample);
    std::tie(p.train, p.valid) = split(p.sample, config.sampling.train_fraction, seeds.split, config.sampling.split_mode);
    const auto full_rates = sicr_rate_series(p.full);
    p.sample_representativeness = representativeness_mae(full_rates, sicr_rate_series(p.sample));
    p.train_representativeness = representativeness_mae(full_rates, sicr_rate_series(p.train));
    return p;
}

LabeledPanel attribution_rows(const LabeledPanel& valid, std::size_t max_rows, std::uint64_t seed) {
    std::vector<std::size_t> idx(valid.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (idx.size() > max_rows) {
        Rng rng(seed);
        for (std::size_t i = 0; i < max_rows; ++i) {
            std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
        }
        idx.resize(max_rows);
        std::sort(idx.begin(), idx.end());
    }
    return valid.subset(idx);
}

DefinitionOutcome run_definition(const RunConfig& config, std::span<const LoanHistory> portfolio,
                                 const MacroScenario& macro, const SicrDefinition& definition) {
    try {
        const auto seeds = definition_seeds(config.seed, definition.label);
        auto prepared = prepare_definition(config, portfolio, macro, definition);
        DefinitionOutcome out;
        out.evaluation = evaluate_definition(definition, prepared.train, prepared.valid,
                                             evaluation_settings(config, seeds.evaluation), &prepared.full);
        out.sample_representativeness = prepared.sample_representativeness;
        out.train_representativeness = prepared.train_representativeness;
        const auto& wanted = config.attribution.definitions;
        if (config.attribution.enabled && std::find(wanted.begin(), wanted.end(), definition.label) != wanted.end()) {
            const auto explained = attribution_rows(prepared.valid, config.attribution.rows, seeds.attribution);
            MonteCarloOptions options;
            options.n_samples = config.attribution.samples;
            options.seed = seeds.attribution;
            out.ranking = importance_ranking(mc_shapley(out.evaluation.model, explained, explained, options));
        }
        return out;
    } catch (const Error& e) {
        const std::string what = e.what();
        // evaluate_definition already prefixes its diagnostics with the label.
        if (what.starts_with(definition.label + ":")) throw;
        throw Error(e.code(), definition.label + ": " + what);
    }
}

namespace {

struct Slot {
    std::optional<DefinitionOutcome> outcome;
    std::string failure;
};

std::string summary_csv(const std::vector<const DefinitionOutcome*>& outcomes) {
    std::string out = "label,prevalence,auc,gini,flexibility,instability,early_warning,recovery,mae_m1,mae_m2,"
                      "sample_rate_mae,train_rate_mae,top_feature\n";
    for (const auto* o : outcomes) {
        const auto& r = o->evaluation.report;
        const std::string fields[] = {r.definition.label,
                                      format_fixed(r.prevalence),
                                      format_fixed(r.auc_probabilistic.auc),
                                      format_fixed(r.auc_probabilistic.gini()),
                                      format_fixed(r.flexibility),
                                      format_fixed(r.instability),
                                      format_fixed(r.crisis.early_warning),
                                      format_fixed(r.crisis.recovery),
                                      format_fixed(r.mae_m1),
                                      format_fixed(r.mae_m2),
                                      format_fixed(o->sample_representativeness.mae),
                                      format_fixed(o->train_representativeness.mae),
                                      o->ranking ? o->ranking->entries.front().feature : std::string()};
        out += join_csv(fields);
    }
    return out;
}

void write_plot(const fs::path& dir, const std::string& stem, const std::vector<PlotPoint>& points,
                const std::string& title, bool svg) {
    write_text_file_atomic(dir / (stem + ".csv"), write_plot_csv(points));
    if (svg) write_text_file_atomic(dir / (stem + ".svg"), line_chart_svg(points, title));
}

}  // namespace

GridResult run_grid(const RunConfig& config) {
    const auto sim = simulation_config(config);
    const auto macro = gen_macro(sim);
    const auto portfolio = gen_portfolio(sim, macro, config.parallel);
    return run_grid(config, portfolio, macro);
}

GridResult run_grid(const RunConfig& config, std::span<const LoanHistory> portfolio, const MacroScenario& macro) {
    const fs::path out_dir = config.output_dir;
    fs::create_directories(out_dir);
    write_text_file_atomic(out_dir / "config.ini", write_config(config));
    write_text_file_atomic(out_dir / "macro.csv", write_macro_csv(macro));

    const auto defs = grid_definitions(config);
    std::vector<Slot> slots(defs.size());
    parallel_for(defs.size(), config.parallel, [&](std::size_t i) {
        try {
            slots[i].outcome = run_definition(config, portfolio, macro, defs[i]);
            const auto& ev = slots[i].outcome->evaluation;
            const std::string slug = label_slug(defs[i].label);
            const RateSeries series[] = {ev.actual, ev.expected, ev.discrete};
            write_text_file_atomic(out_dir / "rates" / (slug + ".csv"), write_rate_series_csv(series));
            write_text_file_atomic(out_dir / "models" / (slug + ".model"), write_model(ev.model));
            if (slots[i].outcome->ranking) {
                write_text_file_atomic(out_dir / "attribution" / (slug + "_ranking.csv"),
                                       write_ranking_csv(*slots[i].outcome->ranking));
            }
        } catch (const std::exception& e) {
            slots[i].outcome.reset();
            slots[i].failure = e.what();
        }
    });

    GridResult result;
    std::vector<const DefinitionOutcome*> done;
    for (std::size_t i = 0; i < defs.size(); ++i) {
        if (slots[i].outcome) {
            result.reports.push_back(slots[i].outcome->evaluation.report);
            done.push_back(&*slots[i].outcome);
        } else {
            result.failures.push_back(slots[i].failure);
        }
    }
    write_text_file_atomic(out_dir / "report.csv", write_report_csv(result.reports));
    write_text_file_atomic(out_dir / "summary.csv", summary_csv(done));
    if (!result.failures.empty()) {
        std::string text;
        for (const auto& f : result.failures) text += f + "\n";
        write_text_file_atomic(out_dir / "failures.txt", text);
    } else if (fs::exists(out_dir / "failures.txt")) {
        fs::remove(out_dir / "failures.txt");
    }

    // Actual rates per (d, s) class across outcome periods, and actual vs
    // expected vs discrete rates per definition.
    std::map<std::string, std::vector<PlotPoint>> by_class;
    std::vector<std::string> class_order;
    for (const auto* o : done) {
        const auto& ev = o->evaluation;
        const std::string& label = ev.report.definition.label;
        const std::string cls = label.substr(0, label.find('('));
        if (!by_class.contains(cls)) class_order.push_back(cls);
        auto& pts = by_class[cls];
        for (const auto& p : ev.actual.points) pts.push_back({p.month, label, p.rate});

        std::vector<PlotPoint> fit_points;
        for (const RateSeries* s : {&ev.actual, &ev.expected, &ev.discrete}) {
            for (const auto& p : s->points) fit_points.push_back({p.month, std::string(to_string(s->kind)), p.rate});
        }
        write_plot(out_dir / "plots", "fit_" + label_slug(label), fit_points,
                   "SICR-rates for " + label + ": actual, expected, discrete", config.plot_svg);
    }
    for (const auto& cls : class_order) {
        write_plot(out_dir / "plots", "actual_rates_" + cls, by_class[cls], "Actual SICR-rates, class " + cls,
                   config.plot_svg);
    }
    return result;
}

}  // namespace sicr

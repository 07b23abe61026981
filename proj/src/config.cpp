#include "sicr/config.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sicr/error.hpp"
#include "sicr/io.hpp"
#include "sicr/random.hpp"

namespace sicr {

namespace {

namespace pt = boost::property_tree;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

std::vector<int> int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) out.push_back(static_cast<int>(parse_integer(item)));
    return out;
}

template <class T>
std::string join_list(const std::vector<T>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << values[i];
    return out.str();
}

bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw Error("bad-config-value", "expected a boolean, got " + text);
}

SplitMode parse_split_mode(const std::string& text) {
    if (text == "observation") return SplitMode::Observation;
    if (text == "account") return SplitMode::Account;
    throw Error("bad-config-value", "split_mode=" + text);
}

std::size_t to_size(const std::string& text) {
    const auto v = parse_integer(text);
    if (v < 0) throw Error("bad-config-value", "expected a non-negative integer, got " + text);
    return static_cast<std::size_t>(v);
}

using Setter = void (*)(RunConfig&, const std::string&);

// Every recognised key, by "section.key".
const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"run.seed", [](RunConfig& c, const std::string& v) { c.seed = std::stoull(v); }},
        {"run.output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
        {"run.parallel", [](RunConfig& c, const std::string& v) { c.parallel = static_cast<unsigned>(std::max<std::size_t>(1, to_size(v))); }},
        {"run.plot_svg", [](RunConfig& c, const std::string& v) { c.plot_svg = parse_bool(v); }},
        {"run.definitions", [](RunConfig& c, const std::string& v) { c.definitions = split_list(v); }},

        {"simulation.n_loans", [](RunConfig& c, const std::string& v) { c.simulation.n_loans = to_size(v); }},
        {"simulation.window_start", [](RunConfig& c, const std::string& v) { c.simulation.window_start = parse_month(v); }},
        {"simulation.window_end", [](RunConfig& c, const std::string& v) { c.simulation.window_end = parse_month(v); }},
        {"simulation.crisis_start", [](RunConfig& c, const std::string& v) { c.simulation.crisis_start = parse_month(v); }},
        {"simulation.crisis_months", [](RunConfig& c, const std::string& v) { c.simulation.crisis_months = static_cast<int>(parse_integer(v)); }},
        {"simulation.recovery_months", [](RunConfig& c, const std::string& v) { c.simulation.recovery_months = static_cast<int>(parse_integer(v)); }},
        {"simulation.origination_backlog_months", [](RunConfig& c, const std::string& v) { c.simulation.origination_backlog_months = static_cast<int>(parse_integer(v)); }},
        {"simulation.cure_after_default_probability", [](RunConfig& c, const std::string& v) { c.simulation.cure_after_default_probability = parse_double(v); }},
        {"simulation.write_off_probability", [](RunConfig& c, const std::string& v) { c.simulation.write_off_probability = parse_double(v); }},
        {"simulation.settle_probability", [](RunConfig& c, const std::string& v) { c.simulation.settle_probability = parse_double(v); }},
        {"simulation.worsen_intercept_current", [](RunConfig& c, const std::string& v) { c.simulation.transitions.worsen_intercept_current = parse_double(v); }},
        {"simulation.worsen_intercept_delinquent", [](RunConfig& c, const std::string& v) { c.simulation.transitions.worsen_intercept_delinquent = parse_double(v); }},
        {"simulation.cure_intercept", [](RunConfig& c, const std::string& v) { c.simulation.transitions.cure_intercept = parse_double(v); }},

        {"simulation.recidivism_worsen", [](RunConfig& c, const std::string& v) { c.simulation.transitions.recidivism_worsen = parse_double(v); }},
        {"simulation.recidivism_decay_months", [](RunConfig& c, const std::string& v) { c.simulation.transitions.recidivism_decay_months = parse_double(v); }},

        {"grid.d", [](RunConfig& c, const std::string& v) { c.grid.d = int_list(v); }},
        {"grid.s", [](RunConfig& c, const std::string& v) { c.grid.s = int_list(v); }},
        {"grid.k", [](RunConfig& c, const std::string& v) { c.grid.k = int_list(v); }},
        {"grid.extended_k", [](RunConfig& c, const std::string& v) { c.grid.extended_k = int_list(v); }},
        {"grid.extended_class", [](RunConfig& c, const std::string& v) { c.grid.extended_class = v; }},
        {"grid.k_ladder", [](RunConfig& c, const std::string& v) { c.grid.k_ladder = int_list(v); }},

        {"sampling.target_rows", [](RunConfig& c, const std::string& v) { c.sampling.target_rows = to_size(v); }},
        {"sampling.train_fraction", [](RunConfig& c, const std::string& v) { c.sampling.train_fraction = parse_double(v); }},
        {"sampling.split_mode", [](RunConfig& c, const std::string& v) { c.sampling.split_mode = parse_split_mode(v); }},

        {"modelling.ridge", [](RunConfig& c, const std::string& v) { c.modelling.ridge = parse_double(v); }},
        {"modelling.gradient_tolerance", [](RunConfig& c, const std::string& v) { c.modelling.gradient_tolerance = parse_double(v); }},
        {"modelling.loglik_tolerance", [](RunConfig& c, const std::string& v) { c.modelling.loglik_tolerance = parse_double(v); }},
        {"modelling.max_iterations", [](RunConfig& c, const std::string& v) { c.modelling.max_iterations = static_cast<int>(parse_integer(v)); }},
        {"modelling.max_step_halvings", [](RunConfig& c, const std::string& v) { c.modelling.max_step_halvings = static_cast<int>(parse_integer(v)); }},

        {"evaluation.cost_ratio", [](RunConfig& c, const std::string& v) { c.cost_ratio = parse_double(v); }},
        {"evaluation.replicates", [](RunConfig& c, const std::string& v) { c.replicates = to_size(v); }},
        {"evaluation.post_crisis_start", [](RunConfig& c, const std::string& v) { c.post_crisis_start = parse_month(v); }},

        {"attribution.enabled", [](RunConfig& c, const std::string& v) { c.attribution.enabled = parse_bool(v); }},
        {"attribution.definitions", [](RunConfig& c, const std::string& v) { c.attribution.definitions = split_list(v); }},
        {"attribution.samples", [](RunConfig& c, const std::string& v) { c.attribution.samples = to_size(v); }},
        {"attribution.rows", [](RunConfig& c, const std::string& v) { c.attribution.rows = to_size(v); }},
    };
    return table;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error("bad-config", e.what());
    }
    RunConfig config;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw Error("unknown-config-key", section + " (keys must sit inside a section)");
        for (const auto& [key, value] : body) {
            const auto it = setters().find(section + "." + key);
            if (it == setters().end()) throw Error("unknown-config-key", section + "." + key);
            try {
                it->second(config, value.data());
            } catch (const Error& e) {
                throw Error(e.code(), section + "." + key + ": " + e.what());
            } catch (const std::exception&) {
                throw Error("bad-config-value", section + "." + key + " = " + value.data());
            }
        }
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

std::string write_config(const RunConfig& c) {
    std::ostringstream out;
    const auto& sim = c.simulation;
    out << "[run]\n"
        << "seed = " << c.seed << "\n"
        << "output_dir = " << c.output_dir << "\n"
        << "parallel = " << c.parallel << "\n"
        << "plot_svg = " << (c.plot_svg ? "true" : "false") << "\n"
        << "definitions = " << join_list(c.definitions) << "\n\n"
        << "[simulation]\n"
        << "n_loans = " << sim.n_loans << "\n"
        << "window_start = " << format_month(sim.window_start) << "\n"
        << "window_end = " << format_month(sim.window_end) << "\n"
        << "crisis_start = " << format_month(sim.crisis_start) << "\n"
        << "crisis_months = " << sim.crisis_months << "\n"
        << "recovery_months = " << sim.recovery_months << "\n"
        << "origination_backlog_months = " << sim.origination_backlog_months << "\n"
        << "cure_after_default_probability = " << format_exact(sim.cure_after_default_probability) << "\n"
        << "write_off_probability = " << format_exact(sim.write_off_probability) << "\n"
        << "settle_probability = " << format_exact(sim.settle_probability) << "\n"
        << "worsen_intercept_current = " << format_exact(sim.transitions.worsen_intercept_current) << "\n"
        << "worsen_intercept_delinquent = " << format_exact(sim.transitions.worsen_intercept_delinquent) << "\n"
        << "cure_intercept = " << format_exact(sim.transitions.cure_intercept) << "\n"
        << "recidivism_worsen = " << format_exact(sim.transitions.recidivism_worsen) << "\n"
        << "recidivism_decay_months = " << format_exact(sim.transitions.recidivism_decay_months) << "\n\n"
        << "[grid]\n"
        << "d = " << join_list(c.grid.d) << "\n"
        << "s = " << join_list(c.grid.s) << "\n"
        << "k = " << join_list(c.grid.k) << "\n"
        << "extended_k = " << join_list(c.grid.extended_k) << "\n"
        << "extended_class = " << c.grid.extended_class << "\n"
        << "k_ladder = " << join_list(c.grid.k_ladder) << "\n\n"
        << "[sampling]\n"
        << "target_rows = " << c.sampling.target_rows << "\n"
        << "train_fraction = " << format_exact(c.sampling.train_fraction) << "\n"
        << "split_mode = " << (c.sampling.split_mode == SplitMode::Account ? "account" : "observation") << "\n\n"
        << "[modelling]\n"
        << "ridge = " << format_exact(c.modelling.ridge) << "\n"
        << "gradient_tolerance = " << format_exact(c.modelling.gradient_tolerance) << "\n"
        << "loglik_tolerance = " << format_exact(c.modelling.loglik_tolerance) << "\n"
        << "max_iterations = " << c.modelling.max_iterations << "\n"
        << "max_step_halvings = " << c.modelling.max_step_halvings << "\n\n"
        << "[evaluation]\n"
        << "cost_ratio = " << format_exact(c.cost_ratio) << "\n"
        << "replicates = " << c.replicates << "\n"
        << "post_crisis_start = " << format_month(c.post_crisis_start) << "\n\n"
        << "[attribution]\n"
        << "enabled = " << (c.attribution.enabled ? "true" : "false") << "\n"
        << "definitions = " << join_list(c.attribution.definitions) << "\n"
        << "samples = " << c.attribution.samples << "\n"
        << "rows = " << c.attribution.rows << "\n";
    return out.str();
}

SimConfig simulation_config(const RunConfig& config) {
    SimConfig sim = config.simulation;
    sim.seed = config.seed;
    return sim;
}

EvaluationSettings evaluation_settings(const RunConfig& config, std::uint64_t seed) {
    EvaluationSettings s;
    s.cost_ratio = config.cost_ratio;
    s.replicates = config.replicates;
    s.seed = seed;
    s.post_crisis_start = config.post_crisis_start;
    s.fit = config.modelling;
    s.threads = 1;
    return s;
}

std::vector<SicrDefinition> grid_definitions(const RunConfig& config) {
    const auto& g = config.grid;
    auto defs = definition_grid(g.d, g.s, g.k, g.k_ladder);
    if (!g.extended_k.empty()) {
        const auto parts = parse_definition_label(g.extended_class + "(i)");
        std::vector<int> ks;
        for (int k : g.extended_k) {
            if (std::find(g.k.begin(), g.k.end(), k) == g.k.end()) ks.push_back(k);
        }
        if (!ks.empty()) {
            const auto extra = definition_grid({parts.d}, {parts.s}, ks, g.k_ladder);
            defs.insert(defs.end(), extra.begin(), extra.end());
        }
    }
    if (!config.definitions.empty()) {
        const std::set<std::string> keep(config.definitions.begin(), config.definitions.end());
        for (const auto& label : keep) {
            if (std::none_of(defs.begin(), defs.end(), [&](const auto& d) { return d.label == label; })) {
                throw Error("unknown-definition", label);
            }
        }
        std::erase_if(defs, [&](const SicrDefinition& d) { return !keep.contains(d.label); });
    }
    return defs;
}

}  // namespace sicr

#include "sicr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sicr/error.hpp"
#include "sicr/month.hpp"

namespace sicr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_on(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void expect_header(const CsvTable& table, const std::vector<std::string>& expected, std::string_view what) {
    if (table.header.size() < expected.size() ||
        !std::equal(expected.begin(), expected.end(), table.header.begin())) {
        throw Error("bad-header", std::string(what));
    }
}

std::string int_text(long long v) { return std::to_string(v); }

std::string format_level(const FeatureSpec& spec, double value) {
    const auto idx = static_cast<std::size_t>(value);
    if (value < 0 || idx >= spec.levels.size() || static_cast<double>(idx) != value) {
        throw Error("bad-level", spec.name);
    }
    return spec.levels[idx];
}

double parse_level(const FeatureSpec& spec, std::string_view text) {
    const auto it = std::find(spec.levels.begin(), spec.levels.end(), text);
    if (it == spec.levels.end()) throw Error("bad-level", spec.name + "=" + std::string(text));
    return static_cast<double>(it - spec.levels.begin());
}

// "name,kind,theme[,level|level...]"
std::string feature_line(const FeatureSpec& f) {
    std::string line = f.name + "," + std::string(to_string(f.kind)) + "," + std::string(to_string(f.theme));
    if (f.kind == FeatureKind::Categorical) {
        line += ",";
        for (std::size_t l = 0; l < f.levels.size(); ++l) {
            if (l) line += "|";
            line += f.levels[l];
        }
    }
    return line;
}

FeatureSpec parse_feature_line(std::string_view text) {
    const auto parts = split_on(trim(text), ',');
    if (parts.size() < 3) throw Error("bad-schema", std::string(text));
    FeatureSpec f;
    f.name = parts[0];
    f.kind = parse_feature_kind(parts[1]);
    f.theme = parse_theme(parts[2]);
    if (f.kind == FeatureKind::Categorical) {
        if (parts.size() != 4) throw Error("bad-schema", std::string(text));
        f.levels = split_on(parts[3], '|');
    }
    return f;
}

std::string definition_text(const SicrDefinition& d) {
    return d.label + "," + int_text(d.d) + "," + int_text(d.s) + "," + int_text(d.k);
}

SicrDefinition parse_definition_text(std::string_view text) {
    const auto parts = split_on(trim(text), ',');
    if (parts.size() != 4) throw Error("bad-definition", std::string(text));
    return {static_cast<int>(parse_integer(parts[1])), static_cast<int>(parse_integer(parts[2])),
            static_cast<int>(parse_integer(parts[3])), parts[0]};
}

// Parses "key = value" lines; repeated keys are kept in order.
std::vector<std::pair<std::string, std::string>> key_values(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw Error("bad-model", std::string(t));
        out.emplace_back(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
    }
    return out;
}

}  // namespace

// ---- primitives -----------------------------------------------------------

std::string format_exact(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double value, int places) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, places);
    std::string out(buf, res.ptr);
    // Avoid a distinct "-0.000000" for values that round to zero.
    if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
    return out;
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (text == "nan") return std::nan("");
    if (text == "inf") return HUGE_VAL;
    if (text == "-inf") return -HUGE_VAL;
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error("bad-number", std::string(text));
    }
    return v;
}

long long parse_integer(std::string_view text) {
    text = trim(text);
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error("bad-number", std::string(text));
    }
    return v;
}

CsvTable parse_csv(std::string_view text, std::vector<std::string>* comments) {
    CsvTable table;
    bool have_header = false;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (comments) comments->emplace_back(trim(line.substr(1)));
            continue;
        }
        auto fields = split_on(line, ',');
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw Error("bad-row", "expected " + std::to_string(table.header.size()) + " fields: " + std::string(line));
        }
        table.rows.push_back(std::move(fields));
    }
    if (!have_header) throw Error("bad-header", "empty file");
    return table;
}

std::string join_csv(std::span<const std::string> fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].find_first_of(",\n") != std::string::npos) throw Error("bad-field", fields[i]);
        if (i) line += ',';
        line += fields[i];
    }
    line += '\n';
    return line;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("missing-input", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("write-failed", tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write-failed", tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---- portfolio ------------------------------------------------------------

std::string write_portfolio_csv(std::span<const LoanHistory> portfolio) {
    std::string out = "loan_id,month,g0,term,origination_month,balance,interest_rate_margin,prelim_perc,pay_method\n";
    for (const auto& h : portfolio) {
        for (std::size_t i = 0; i < h.g0.size(); ++i) {
            const auto& c = h.covariates[i];
            const std::string fields[] = {h.loan_id,
                                          format_month(h.month_at(i)),
                                          int_text(h.g0[i]),
                                          int_text(h.term_months),
                                          format_month(h.origination_month),
                                          format_exact(c.balance),
                                          format_exact(c.interest_rate_margin),
                                          format_exact(c.prelim_perc),
                                          std::string(kPayMethodNames[static_cast<int>(c.pay_method)])};
            out += join_csv(fields);
        }
    }
    return out;
}

std::vector<LoanHistory> parse_portfolio_csv(std::string_view text) {
    const auto table = parse_csv(text);
    expect_header(table, {"loan_id", "month", "g0", "term", "origination_month", "balance",
                          "interest_rate_margin", "prelim_perc", "pay_method"},
                  "portfolio");
    std::vector<LoanHistory> out;
    for (const auto& r : table.rows) {
        if (out.empty() || out.back().loan_id != r[0]) {
            LoanHistory h;
            h.loan_id = r[0];
            h.origination_month = parse_month(r[4]);
            h.term_months = static_cast<int>(parse_integer(r[3]));
            out.push_back(std::move(h));
        }
        LoanHistory& h = out.back();
        if (parse_month(r[1]) != h.month_at(h.g0.size())) {
            throw Error("bad-row", "non-consecutive months for " + h.loan_id);
        }
        h.g0.push_back(static_cast<int>(parse_integer(r[2])));
        MonthCovariates c;
        c.balance = parse_double(r[5]);
        c.interest_rate_margin = parse_double(r[6]);
        c.prelim_perc = parse_double(r[7]);
        const auto pm = std::find(std::begin(kPayMethodNames), std::end(kPayMethodNames), r[8]);
        if (pm == std::end(kPayMethodNames)) throw Error("bad-level", "pay_method=" + r[8]);
        c.pay_method = static_cast<PayMethod>(pm - std::begin(kPayMethodNames));
        h.covariates.push_back(c);
    }
    for (const auto& h : out) validate_history(h, 1 << 20);
    return out;
}

// ---- macro ----------------------------------------------------------------

std::string write_macro_csv(const MacroScenario& macro) {
    std::string out = "month,regime";
    for (auto name : kMacroSeriesNames) out += "," + std::string(name);
    out += '\n';
    for (std::size_t i = 0; i < macro.values.size(); ++i) {
        std::vector<std::string> fields{format_month(macro.first_month + static_cast<int>(i)),
                                        std::string(kRegimeNames[static_cast<int>(macro.regimes[i])])};
        for (std::size_t j = 0; j < kMacroSeriesCount; ++j) fields.push_back(format_exact(macro_value(macro.values[i], j)));
        out += join_csv(fields);
    }
    return out;
}

MacroScenario parse_macro_csv(std::string_view text) {
    const auto table = parse_csv(text);
    std::vector<std::string> expected{"month", "regime"};
    for (auto name : kMacroSeriesNames) expected.emplace_back(name);
    expect_header(table, expected, "macro");
    if (table.rows.empty()) throw Error("bad-row", "empty macro scenario");
    MacroScenario macro;
    macro.first_month = parse_month(table.rows.front()[0]);
    for (const auto& r : table.rows) {
        if (parse_month(r[0]) != macro.first_month + static_cast<int>(macro.values.size())) {
            throw Error("bad-row", "non-consecutive macro month " + r[0]);
        }
        macro.regimes.push_back(parse_regime(r[1]));
        MacroPoint p;
        for (std::size_t j = 0; j < kMacroSeriesCount; ++j) macro_value(p, j) = parse_double(r[2 + j]);
        macro.values.push_back(p);
    }
    return macro;
}

// ---- panel ----------------------------------------------------------------

std::string write_panel_csv(const LabeledPanel& panel) {
    std::string out = "# schema_hash=" + panel.schema.hash_hex() + "\n";
    out += "# definition=" + definition_text(panel.definition) + "\n";
    for (const auto& f : panel.schema.features) out += "# feature=" + feature_line(f) + "\n";
    std::vector<std::string> header{"loan_id", "month", "y", "stage1"};
    for (const auto& f : panel.schema.features) header.push_back(f.name);
    out += join_csv(header);
    const std::size_t p = panel.schema.size();
    std::vector<std::string> fields(4 + p);
    for (std::size_t i = 0; i < panel.size(); ++i) {
        fields[0] = panel.loan_ids[i];
        fields[1] = format_month(panel.months[i]);
        fields[2] = int_text(panel.y[i]);
        fields[3] = int_text(panel.stage1[i]);
        const auto row = panel.row(i);
        for (std::size_t j = 0; j < p; ++j) {
            const auto& f = panel.schema.features[j];
            fields[4 + j] = f.kind == FeatureKind::Categorical ? format_level(f, row[j]) : format_exact(row[j]);
        }
        out += join_csv(fields);
    }
    return out;
}

LabeledPanel parse_panel_csv(std::string_view text) {
    std::vector<std::string> comments;
    const auto table = parse_csv(text, &comments);
    LabeledPanel panel;
    std::string declared_hash;
    bool have_definition = false;
    for (const auto& c : comments) {
        if (c.starts_with("schema_hash=")) {
            declared_hash = c.substr(12);
        } else if (c.starts_with("definition=")) {
            panel.definition = parse_definition_text(c.substr(11));
            have_definition = true;
        } else if (c.starts_with("feature=")) {
            panel.schema.features.push_back(parse_feature_line(c.substr(8)));
        }
    }
    if (!have_definition || declared_hash.empty()) throw Error("bad-header", "panel header block incomplete");
    if (declared_hash != panel.schema.hash_hex()) throw Error("schema-mismatch", "panel header hash differs from its schema");
    std::vector<std::string> expected{"loan_id", "month", "y", "stage1"};
    for (const auto& f : panel.schema.features) expected.push_back(f.name);
    if (table.header != expected) throw Error("bad-header", "panel columns differ from schema");

    const std::size_t p = panel.schema.size();
    panel.features.reserve(table.rows.size() * p);
    for (const auto& r : table.rows) {
        panel.loan_ids.push_back(r[0]);
        panel.months.push_back(parse_month(r[1]));
        const auto y = parse_integer(r[2]);
        const auto s1 = parse_integer(r[3]);
        if ((y != 0 && y != 1) || (s1 != 0 && s1 != 1)) throw Error("bad-row", "y/stage1 must be 0 or 1");
        panel.y.push_back(static_cast<std::uint8_t>(y));
        panel.stage1.push_back(static_cast<std::uint8_t>(s1));
        for (std::size_t j = 0; j < p; ++j) {
            const auto& f = panel.schema.features[j];
            panel.features.push_back(f.kind == FeatureKind::Categorical ? parse_level(f, r[4 + j])
                                                                         : parse_double(r[4 + j]));
        }
    }
    return panel;
}

// ---- model ----------------------------------------------------------------

std::string write_model(const LogitModel& m) {
    const auto& layout = m.layout;
    std::string out = "# logistic regression model\n";
    out += "schema_hash = " + layout.schema.hash_hex() + "\n";
    for (std::size_t j = 0; j < layout.schema.size(); ++j) {
        const auto& f = layout.schema.features[j];
        out += "feature = " + feature_line(f) + "\n";
        if (f.kind == FeatureKind::Categorical) {
            out += "reference." + f.name + " = " + f.levels[static_cast<std::size_t>(layout.reference_levels[j])] + "\n";
        }
    }
    out += "intercept = " + format_exact(m.intercept) + "\n";
    for (std::size_t c = 0; c < layout.columns.size(); ++c) {
        out += "coef." + layout.columns[c].name + " = " + format_exact(m.coefficients[c]) + "\n";
    }
    out += "se.(intercept) = " + format_exact(m.standard_errors.at(0)) + "\n";
    for (std::size_t c = 0; c < layout.columns.size(); ++c) {
        out += "se." + layout.columns[c].name + " = " + format_exact(m.standard_errors.at(c + 1)) + "\n";
    }
    out += "log_likelihood = " + format_exact(m.log_likelihood) + "\n";
    out += "penalised_log_likelihood = " + format_exact(m.penalised_log_likelihood) + "\n";
    out += "iterations = " + int_text(m.iterations) + "\n";
    out += "converged = " + std::string(m.converged ? "true" : "false") + "\n";
    out += "warning = " + m.warning + "\n";
    out += "n_obs = " + int_text(static_cast<long long>(m.n_obs)) + "\n";
    out += "ridge = " + format_exact(m.ridge) + "\n";
    out += "loglik_trace = ";
    for (std::size_t i = 0; i < m.loglik_trace.size(); ++i) out += (i ? " " : "") + format_exact(m.loglik_trace[i]);
    out += "\n";
    return out;
}

LogitModel parse_model(std::string_view text) {
    const auto kv = key_values(text);
    FeatureSchema schema;
    std::map<std::string, std::string> scalars;
    std::string declared_hash;
    for (const auto& [key, value] : kv) {
        if (key == "feature") schema.features.push_back(parse_feature_line(value));
        else if (key == "schema_hash") declared_hash = value;
        else scalars[key] = value;
    }
    if (declared_hash != schema.hash_hex()) throw Error("schema-mismatch", "model header hash differs from its schema");
    auto get = [&](const std::string& key) -> const std::string& {
        const auto it = scalars.find(key);
        if (it == scalars.end()) throw Error("bad-model", "missing " + key);
        return it->second;
    };
    std::vector<int> refs;
    for (const auto& f : schema.features) {
        refs.push_back(f.kind == FeatureKind::Categorical ? static_cast<int>(parse_level(f, get("reference." + f.name))) : -1);
    }
    LogitModel m;
    m.layout = DesignLayout::build(std::move(schema), std::move(refs));
    m.intercept = parse_double(get("intercept"));
    m.standard_errors.push_back(parse_double(get("se.(intercept)")));
    for (const auto& c : m.layout.columns) {
        m.coefficients.push_back(parse_double(get("coef." + c.name)));
        m.standard_errors.push_back(parse_double(get("se." + c.name)));
    }
    m.log_likelihood = parse_double(get("log_likelihood"));
    m.penalised_log_likelihood = parse_double(get("penalised_log_likelihood"));
    m.iterations = static_cast<int>(parse_integer(get("iterations")));
    const auto& conv = get("converged");
    if (conv != "true" && conv != "false") throw Error("bad-model", "converged=" + conv);
    m.converged = conv == "true";
    m.warning = get("warning");
    m.n_obs = static_cast<std::size_t>(parse_integer(get("n_obs")));
    m.ridge = parse_double(get("ridge"));
    std::istringstream trace(get("loglik_trace"));
    for (std::string v; trace >> v;) m.loglik_trace.push_back(parse_double(v));
    return m;
}

// ---- report ---------------------------------------------------------------

namespace {

const std::vector<std::string>& report_header() {
    static const std::vector<std::string> h = {
        "label", "d", "s", "k", "n_train", "n_valid", "prevalence",
        "auc", "auc_ci_low", "auc_ci_high", "auc_replicates", "auc_skipped",
        "flexibility", "instability",
        "cutoff", "j_a", "cost_ratio", "cutoff_prevalence", "sensitivity", "specificity",
        "auc_discrete", "auc_discrete_ci_low", "auc_discrete_ci_high", "auc_discrete_replicates",
        "auc_discrete_skipped",
        "rate_earliest", "rate_maximum", "rate_post_crisis_mean", "early_warning", "recovery",
        "mae_m1", "mae_m2", "converged"};
    return h;
}

}  // namespace

std::string write_report_csv(std::span<const DefinitionReport> reports) {
    std::string out = join_csv(report_header());
    for (const auto& r : reports) {
        const auto f = [](double v) { return format_fixed(v); };
        const auto n = [](std::size_t v) { return std::to_string(v); };
        const std::vector<std::string> fields = {
            r.definition.label, int_text(r.definition.d), int_text(r.definition.s), int_text(r.definition.k),
            n(r.n_train), n(r.n_valid), f(r.prevalence),
            f(r.auc_probabilistic.auc), f(r.auc_probabilistic.ci_low), f(r.auc_probabilistic.ci_high),
            n(r.auc_probabilistic.replicates), n(r.auc_probabilistic.skipped),
            f(r.flexibility), f(r.instability),
            f(r.cutoff.c_star), f(r.cutoff.j_a), f(r.cutoff.cost_ratio), f(r.cutoff.prevalence),
            f(r.cutoff.sensitivity), f(r.cutoff.specificity),
            f(r.auc_discrete.auc), f(r.auc_discrete.ci_low), f(r.auc_discrete.ci_high),
            n(r.auc_discrete.replicates), n(r.auc_discrete.skipped),
            f(r.crisis.earliest), f(r.crisis.maximum), f(r.crisis.post_crisis_mean), f(r.crisis.early_warning),
            f(r.crisis.recovery),
            f(r.mae_m1), f(r.mae_m2), r.converged ? "1" : "0"};
        out += join_csv(fields);
    }
    return out;
}

std::vector<DefinitionReport> parse_report_csv(std::string_view text) {
    const auto table = parse_csv(text);
    if (table.header != report_header()) throw Error("bad-header", "report");
    std::vector<DefinitionReport> out;
    for (const auto& r : table.rows) {
        std::size_t i = 0;
        const auto s = [&] { return r[i++]; };
        const auto d = [&] { return parse_double(r[i++]); };
        const auto n = [&] { return static_cast<std::size_t>(parse_integer(r[i++])); };
        const auto k = [&] { return static_cast<int>(parse_integer(r[i++])); };
        DefinitionReport rep;
        rep.definition.label = s();
        rep.definition.d = k();
        rep.definition.s = k();
        rep.definition.k = k();
        rep.n_train = n();
        rep.n_valid = n();
        rep.prevalence = d();
        rep.auc_probabilistic.auc = d();
        rep.auc_probabilistic.ci_low = d();
        rep.auc_probabilistic.ci_high = d();
        rep.auc_probabilistic.replicates = n();
        rep.auc_probabilistic.skipped = n();
        rep.flexibility = d();
        rep.instability = d();
        rep.cutoff.c_star = d();
        rep.cutoff.j_a = d();
        rep.cutoff.cost_ratio = d();
        rep.cutoff.prevalence = d();
        rep.cutoff.sensitivity = d();
        rep.cutoff.specificity = d();
        rep.auc_discrete.auc = d();
        rep.auc_discrete.ci_low = d();
        rep.auc_discrete.ci_high = d();
        rep.auc_discrete.replicates = n();
        rep.auc_discrete.skipped = n();
        rep.crisis.earliest = d();
        rep.crisis.maximum = d();
        rep.crisis.post_crisis_mean = d();
        rep.crisis.early_warning = d();
        rep.crisis.recovery = d();
        rep.mae_m1 = d();
        rep.mae_m2 = d();
        const auto conv = s();
        if (conv != "0" && conv != "1") throw Error("bad-row", "converged=" + conv);
        rep.converged = conv == "1";
        out.push_back(std::move(rep));
    }
    return out;
}

// ---- rate series ----------------------------------------------------------

std::string write_rate_series_csv(std::span<const RateSeries> series) {
    std::string out = "month,kind,n,events,rate\n";
    for (const auto& s : series) {
        for (const auto& p : s.points) {
            const std::string fields[] = {format_month(p.month), std::string(to_string(s.kind)), std::to_string(p.n),
                                          format_fixed(p.events), format_fixed(p.rate)};
            out += join_csv(fields);
        }
    }
    return out;
}

std::vector<RateSeries> parse_rate_series_csv(std::string_view text) {
    const auto table = parse_csv(text);
    if (table.header != std::vector<std::string>{"month", "kind", "n", "events", "rate"}) {
        throw Error("bad-header", "rate series");
    }
    std::vector<RateSeries> out;
    for (const auto& r : table.rows) {
        const RateKind kind = parse_rate_kind(r[1]);
        const Month m = parse_month(r[0]);
        if (out.empty() || out.back().kind != kind || out.back().points.back().month >= m) {
            out.push_back({kind, {}});
        }
        out.back().points.push_back(
            {m, static_cast<std::size_t>(parse_integer(r[2])), parse_double(r[3]), parse_double(r[4])});
    }
    return out;
}

// ---- attribution ----------------------------------------------------------

std::string write_attribution_csv(const AttributionRows& rows) {
    std::vector<std::string> header{"loan", "month"};
    header.insert(header.end(), rows.feature_names.begin(), rows.feature_names.end());
    std::string out = join_csv(header);
    std::vector<std::string> fields(header.size());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        fields[0] = rows.loan_ids[i];
        fields[1] = format_month(rows.months[i]);
        for (std::size_t j = 0; j < rows.width(); ++j) fields[2 + j] = format_exact(rows.at(i, j));
        out += join_csv(fields);
    }
    return out;
}

AttributionRows parse_attribution_csv(std::string_view text) {
    const auto table = parse_csv(text);
    expect_header(table, {"loan", "month"}, "attribution");
    AttributionRows rows;
    rows.feature_names.assign(table.header.begin() + 2, table.header.end());
    for (const auto& r : table.rows) {
        rows.loan_ids.push_back(r[0]);
        rows.months.push_back(parse_month(r[1]));
        for (std::size_t j = 2; j < r.size(); ++j) rows.values.push_back(parse_double(r[j]));
    }
    return rows;
}

std::string write_ranking_csv(const ImportanceRanking& ranking) {
    std::string out = "# sample_size=" + std::to_string(ranking.sample_size) + "\n";
    out += "feature,psi_bar,rank\n";
    for (const auto& e : ranking.entries) {
        const std::string fields[] = {e.feature, format_fixed(e.psi_bar), std::to_string(e.rank)};
        out += join_csv(fields);
    }
    return out;
}

ImportanceRanking parse_ranking_csv(std::string_view text) {
    std::vector<std::string> comments;
    const auto table = parse_csv(text, &comments);
    if (table.header != std::vector<std::string>{"feature", "psi_bar", "rank"}) throw Error("bad-header", "ranking");
    ImportanceRanking ranking;
    for (const auto& c : comments) {
        if (c.starts_with("sample_size=")) ranking.sample_size = static_cast<std::size_t>(parse_integer(c.substr(12)));
    }
    for (const auto& r : table.rows) {
        ranking.entries.push_back({r[0], parse_double(r[1]), static_cast<std::size_t>(parse_integer(r[2]))});
    }
    return ranking;
}

// ---- plot data ------------------------------------------------------------

std::string write_plot_csv(std::span<const PlotPoint> points) {
    std::string out = "month,series,value\n";
    for (const auto& p : points) {
        const std::string fields[] = {format_month(p.month), p.series, format_fixed(p.value)};
        out += join_csv(fields);
    }
    return out;
}

std::vector<PlotPoint> parse_plot_csv(std::string_view text) {
    const auto table = parse_csv(text);
    if (table.header != std::vector<std::string>{"month", "series", "value"}) throw Error("bad-header", "plot data");
    std::vector<PlotPoint> out;
    for (const auto& r : table.rows) out.push_back({parse_month(r[0]), r[1], parse_double(r[2])});
    return out;
}

std::string line_chart_svg(std::span<const PlotPoint> points, std::string_view title) {
    constexpr double kWidth = 720, kHeight = 360, kLeft = 60, kRight = 160, kTop = 30, kBottom = 40;
    static constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                               "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
    std::map<std::string, std::vector<const PlotPoint*>> by_series;
    std::vector<std::string> order;
    for (const auto& p : points) {
        auto& v = by_series[p.series];
        if (v.empty()) order.push_back(p.series);
        v.push_back(&p);
    }
    Month m0 = 0, m1 = 1;
    double lo = 0.0, hi = 1.0;
    if (!points.empty()) {
        m0 = m1 = points.front().month;
        lo = hi = points.front().value;
        for (const auto& p : points) {
            m0 = std::min(m0, p.month);
            m1 = std::max(m1, p.month);
            lo = std::min(lo, p.value);
            hi = std::max(hi, p.value);
        }
    }
    if (m1 == m0) m1 = m0 + 1;
    if (hi == lo) hi = lo + 1e-6;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    const auto x = [&](Month m) { return kLeft + pw * (m - m0) / static_cast<double>(m1 - m0); };
    const auto y = [&](double v) { return kTop + ph * (1.0 - (v - lo) / (hi - lo)); };

    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
    s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
    s << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 15 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_month(m0) << "</text>\n";
    s << "<text x=\"" << kLeft + pw << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_month(m1) << "</text>\n";
    s << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_fixed(hi, 4) << "</text>\n";
    s << "<text x=\"" << kLeft - 5 << "\" y=\"" << kTop + ph
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_fixed(lo, 4) << "</text>\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
        const char* colour = kColours[k % std::size(kColours)];
        s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (const auto* p : by_series[order[k]]) s << x(p->month) << "," << y(p->value) << " ";
        s << "\"/>\n";
        s << "<text x=\"" << kWidth - kRight + 10 << "\" y=\"" << kTop + 14 * (k + 1) << "\" fill=\"" << colour
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << order[k] << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace sicr

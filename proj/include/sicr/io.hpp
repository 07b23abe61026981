#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sicr/core.hpp"
#include "sicr/dataset.hpp"
#include "sicr/evaluation.hpp"
#include "sicr/logit.hpp"
#include "sicr/shapley.hpp"
#include "sicr/synth.hpp"

namespace sicr {

// ---- primitives -----------------------------------------------------------

/// Shortest decimal text that parses back to exactly `value`.
std::string format_exact(double value);
/// Fixed-point text with `places` decimals (rates and metrics use 6).
std::string format_fixed(double value, int places = 6);
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Plain comma-separated text: no quoting, '#' comment lines skipped and
/// returned separately.
CsvTable parse_csv(std::string_view text, std::vector<std::string>* comments = nullptr);
std::string join_csv(std::span<const std::string> fields);

/// Throws Error("missing-input", path) when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

// ---- artifacts ------------------------------------------------------------

std::string write_portfolio_csv(std::span<const LoanHistory> portfolio);
std::vector<LoanHistory> parse_portfolio_csv(std::string_view text);

std::string write_macro_csv(const MacroScenario& macro);
MacroScenario parse_macro_csv(std::string_view text);

/// Panel file: '#' header block carrying the schema and definition, then
/// loan_id,month,y,stage1,<features>. Categorical values are level names.
std::string write_panel_csv(const LabeledPanel& panel);
LabeledPanel parse_panel_csv(std::string_view text);

/// Flat "name = value" text; values at full precision.
std::string write_model(const LogitModel& model);
LogitModel parse_model(std::string_view text);

std::string write_report_csv(std::span<const DefinitionReport> reports);
std::vector<DefinitionReport> parse_report_csv(std::string_view text);

/// month,kind,n,events,rate (one row per point; several series may share a file).
std::string write_rate_series_csv(std::span<const RateSeries> series);
std::vector<RateSeries> parse_rate_series_csv(std::string_view text);

std::string write_attribution_csv(const AttributionRows& rows);
AttributionRows parse_attribution_csv(std::string_view text);

std::string write_ranking_csv(const ImportanceRanking& ranking);
ImportanceRanking parse_ranking_csv(std::string_view text);

struct PlotPoint {
    Month month = 0;
    std::string series;
    double value = 0.0;

    bool operator==(const PlotPoint&) const = default;
};

std::string write_plot_csv(std::span<const PlotPoint> points);
std::vector<PlotPoint> parse_plot_csv(std::string_view text);

/// Minimal static line chart, one polyline per series.
std::string line_chart_svg(std::span<const PlotPoint> points, std::string_view title);

}  // namespace sicr

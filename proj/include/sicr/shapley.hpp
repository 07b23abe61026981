#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sicr/dataset.hpp"
#include "sicr/logit.hpp"

namespace sicr {

/// Per-row, per-feature attributions on the linear-predictor (logit) scale,
/// one value per schema feature (dummy columns of a categorical feature
/// are summed into that feature). values/std_errors are row-major.
struct AttributionRows {
    std::vector<std::string> feature_names;
    std::vector<std::string> loan_ids;
    std::vector<Month> months;
    std::vector<double> values;
    std::vector<double> std_errors;  // Monte Carlo only; empty for exact values

    std::size_t rows() const { return months.size(); }
    std::size_t width() const { return feature_names.size(); }
    double at(std::size_t row, std::size_t feature) const { return values[row * width() + feature]; }

    bool operator==(const AttributionRows&) const = default;
};

/// Per-feature additive contributions to the linear predictor (row-major,
/// rows x schema features), intercept excluded.
std::vector<double> feature_contributions(const LogitModel& model, const LabeledPanel& panel);

/// S_itj = beta_j x_itj - mean over the panel of beta_j x_itj.
AttributionRows exact_linear_shapley(const LogitModel& model, const LabeledPanel& panel);

struct MonteCarloOptions {
    std::size_t n_samples = 100;
    std::uint64_t seed = 1;
    /// Redistribute each row's efficiency gap (f(x) - mean f) - sum psi over
    /// features in proportion to their sampling variance.
    bool adjust_efficiency = true;
    unsigned threads = 1;
};

/// Permutation-sampling estimator: for each sample, draw a feature ordering
/// and a background row, and take the linear-predictor difference between
/// the coalition of features preceding j (plus j) and the same coalition
/// without j, absent features filled from the background row.
AttributionRows mc_shapley(const LogitModel& model, const LabeledPanel& explain, const LabeledPanel& background,
                           const MonteCarloOptions& options);

inline AttributionRows mc_shapley(const LogitModel& model, const LabeledPanel& panel, std::size_t n_samples,
                                  std::uint64_t seed) {
    MonteCarloOptions options;
    options.n_samples = n_samples;
    options.seed = seed;
    return mc_shapley(model, panel, panel, options);
}

struct ImportanceEntry {
    std::string feature;
    double psi_bar = 0.0;
    std::size_t rank = 0;  // 1-based

    bool operator==(const ImportanceEntry&) const = default;
};

struct ImportanceRanking {
    std::vector<ImportanceEntry> entries;  // descending psi_bar, ties by name
    std::size_t sample_size = 0;

    bool operator==(const ImportanceRanking&) const = default;
};

ImportanceRanking importance_ranking(const AttributionRows& attributions);

/// Approximate probability-scale view: sigma(eta) - sigma(eta - S_itj) per
/// row and feature. Not additive; for reporting only.
AttributionRows probability_scale_report(const LogitModel& model, const LabeledPanel& panel,
                                         const AttributionRows& linear);

}  // namespace sicr

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sicr/dataset.hpp"
#include "sicr/logit.hpp"

namespace sicr {

struct AucEstimate {
    double auc = 0.5;
    double ci_low = 0.5;
    double ci_high = 0.5;
    std::size_t replicates = 0;  // replicates that produced an AUC
    std::size_t skipped = 0;     // one-class resamples abandoned after retries
    double gini() const { return 2.0 * auc - 1.0; }
};

struct CutoffResult {
    double c_star = 0.5;
    double j_a = 0.0;
    double cost_ratio = 1.0;
    double prevalence = 0.5;
    double sensitivity = 0.0;
    double specificity = 0.0;
};

/// Mann-Whitney AUC: P(score of a positive > score of a negative), ties
/// counted one half. Throws sicr::Error("degenerate-labels").
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Case-resampling bootstrap with 95% percentile bounds. Replicate r draws
/// from its own stream derived from (seed, r).
AucEstimate bootstrap_auc_ci(std::span<const double> scores, std::span<const std::uint8_t> labels,
                             std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

/// Generalised Youden index J_a(c) = q(c) + (1 - phi)/(a phi) p(c) - 1.
double generalised_youden(double sensitivity, double specificity, double prevalence, double cost_ratio);

/// Exact maximiser of J_a over {0, midpoints of consecutive distinct
/// scores, 1}; ties (within 1e-12) go to the smallest cut-off. Prevalence defaults to
/// the label prevalence of the supplied data.
CutoffResult youden_cutoff(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           double cost_ratio, std::optional<double> prevalence = std::nullopt);

/// Classification rates of the rule "score > c".
struct OperatingPoint {
    double sensitivity;
    double specificity;
};
OperatingPoint operating_point(std::span<const double> scores, std::span<const std::uint8_t> labels,
                               double cutoff);

/// h'(x) = [h(x) > c].
std::vector<std::uint8_t> dichotomise(std::span<const double> scores, double cutoff);

AucEstimate discrete_auc(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                         std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

/// Population standard deviation.
double population_sd(std::span<const double> values);

/// Mean over loans (with >= 2 scores) of each loan's score standard deviation.
double flexibility(const std::map<std::string, std::vector<double>>& scores_by_loan);
double flexibility(std::span<const std::string> loan_ids, std::span<const double> scores);

/// Standard deviation over months of the actual rate series.
double instability(const RateSeries& actual);

struct CrisisSummary {
    double earliest = 0.0;          // a
    double maximum = 0.0;           // b
    double post_crisis_mean = 0.0;  // c
    double early_warning = 0.0;     // b - a
    double recovery = 0.0;          // b - c
};

CrisisSummary crisis_summaries(const RateSeries& actual, Month post_crisis_start);

/// B_t: mean score over stage-1 rows per month; C_t: mean of the
/// dichotomised scores over the same rows.
std::pair<RateSeries, RateSeries> expected_rate_series(std::span<const double> scores, const LabeledPanel& panel,
                                                       double cutoff);
std::pair<RateSeries, RateSeries> expected_rate_series(const LogitModel& model, const LabeledPanel& panel,
                                                       double cutoff);

inline double series_mae_value(const RateSeries& x, const RateSeries& y) { return series_mae(x, y).mae; }

struct DefinitionReport {
    SicrDefinition definition;
    std::size_t n_train = 0;
    std::size_t n_valid = 0;
    double prevalence = 0.0;
    AucEstimate auc_probabilistic;
    double flexibility = 0.0;
    double instability = 0.0;
    CutoffResult cutoff;
    AucEstimate auc_discrete;
    CrisisSummary crisis;
    double mae_m1 = 0.0;
    double mae_m2 = 0.0;
    bool converged = false;
};

struct EvaluationSettings {
    double cost_ratio = 6.0;
    std::size_t replicates = 500;
    std::uint64_t seed = 1;
    Month post_crisis_start = make_month(2010, 1);
    FitOptions fit;
    unsigned threads = 1;
};

struct DefinitionEvaluation {
    DefinitionReport report;
    LogitModel model;
    RateSeries actual;
    RateSeries expected;
    RateSeries discrete;
};

/// Fits on `train`, scores `valid`, and assembles every report field.
/// Rate-series diagnostics (A/B/C, instability, crisis summaries, MAEs)
/// use `population` when given, otherwise train and valid combined.
/// Component errors are rethrown with the definition label attached.
DefinitionEvaluation evaluate_definition(const SicrDefinition& definition, const LabeledPanel& train,
                                         const LabeledPanel& valid, const EvaluationSettings& settings,
                                         const LabeledPanel* population = nullptr);

/// Same as above with a pre-fitted model.
DefinitionEvaluation evaluate_with_model(const SicrDefinition& definition, LogitModel model,
                                         const LabeledPanel& train, const LabeledPanel& valid,
                                         const EvaluationSettings& settings,
                                         const LabeledPanel* population = nullptr);

}  // namespace sicr

#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sicr/dataset.hpp"

namespace sicr {

/// sigma(w) = 1 / (1 + e^-w), evaluated without overflow for large |w|.
double logistic(double w);

/// One design-matrix column: a numeric feature, or one non-reference level
/// of a categorical feature (dummy coding).
struct DesignColumn {
    std::string name;
    std::size_t feature = 0;
    int level = -1;  // -1 for numeric columns

    bool operator==(const DesignColumn&) const = default;
};

/// Maps schema-ordered feature vectors to design-matrix rows.
struct DesignLayout {
    FeatureSchema schema;
    std::vector<int> reference_levels;  // per feature; -1 for numeric
    std::vector<DesignColumn> columns;

    static DesignLayout build(FeatureSchema schema, std::vector<int> reference_levels);
    /// Reference level = most frequent level in `panel` (ties to the lower index).
    static DesignLayout from_panel(const LabeledPanel& panel);

    std::size_t width() const { return columns.size(); }
    /// Throws sicr::Error("schema-mismatch") for wrong length or bad level codes.
    void expand(std::span<const double> features, std::span<double> out) const;
    Eigen::MatrixXd design_matrix(const LabeledPanel& panel) const;

    bool operator==(const DesignLayout&) const = default;
};

struct FitOptions {
    double ridge = 1e-6;
    double gradient_tolerance = 1e-8;
    double loglik_tolerance = 1e-10;
    int max_iterations = 100;
    int max_step_halvings = 30;
};

struct LogitModel {
    DesignLayout layout;
    double intercept = 0.0;
    std::vector<double> coefficients;     // aligned to layout.columns
    std::vector<double> standard_errors;  // intercept first; NaN when information is singular
    double log_likelihood = 0.0;          // unpenalised, at the optimum
    double penalised_log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string warning;
    std::size_t n_obs = 0;
    double ridge = 0.0;
    /// Penalised log-likelihood after each accepted IRLS step (index 0 = start).
    std::vector<double> loglik_trace;

    double linear_predictor(std::span<const double> features) const;
    /// Linear predictor of an already-expanded design row.
    double linear_predictor_design(std::span<const double> design_row) const;
};

/// Penalised maximum-likelihood fit by IRLS on an explicit design matrix.
/// Columns are centred and scaled internally; the ridge penalty
/// (ridge/2)*||beta||^2 applies to the original-scale slopes.
LogitModel fit_design(const Eigen::MatrixXd& design, std::span<const std::uint8_t> y, DesignLayout layout,
                      const FitOptions& options = {});

LogitModel fit(const LabeledPanel& panel, const FitOptions& options = {});

double predict(const LogitModel& model, std::span<const double> features);
std::vector<double> predict(const LogitModel& model, const LabeledPanel& panel);

/// Penalised log-likelihood and its gradient at original-scale parameters
/// (intercept first). Used for gradient checks.
double penalised_loglik(const Eigen::MatrixXd& design, std::span<const std::uint8_t> y,
                        const Eigen::VectorXd& params, double ridge, Eigen::VectorXd* gradient = nullptr);

struct WaldRow {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p_value = 1.0;
};

/// Wald z-tests from the inverse observed information at the optimum.
/// Throws sicr::Error("singular-information") or ("not-converged").
std::vector<WaldRow> wald_inference(const LogitModel& model);

}  // namespace sicr

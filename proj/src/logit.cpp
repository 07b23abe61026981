#include "sicr/logit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sicr/error.hpp"

namespace sicr {

namespace {

// log(1 + e^w)
double softplus(double w) { return w > 0 ? w + std::log1p(std::exp(-w)) : std::log1p(std::exp(w)); }

// sigma(w) * (1 - sigma(w))
double logistic_weight(double w) {
    const double e = std::exp(-std::abs(w));
    return e / ((1.0 + e) * (1.0 + e));
}

struct Standardiser {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

Standardiser standardise(const Eigen::MatrixXd& x) {
    const auto n = static_cast<double>(x.rows());
    Standardiser s;
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
        s.scale(j) = var > 0 ? std::sqrt(var) : 1.0;
    }
    return s;
}

// Log-likelihood of standardised-scale parameters, optionally with gradient.
double loglik(const Eigen::MatrixXd& z, const Eigen::VectorXd& yv, const Eigen::VectorXd& gamma,
              const Eigen::VectorXd& penalty, Eigen::VectorXd* eta_out = nullptr) {
    const Eigen::VectorXd eta = z * gamma;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += yv(i) * eta(i) - softplus(eta(i));
    if (eta_out) *eta_out = eta;
    return ll - 0.5 * (penalty.array() * gamma.array().square()).sum();
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

double logistic(double w) {
    if (w >= 0) return 1.0 / (1.0 + std::exp(-w));
    const double e = std::exp(w);
    return e / (1.0 + e);
}

DesignLayout DesignLayout::build(FeatureSchema schema, std::vector<int> reference_levels) {
    if (reference_levels.size() != schema.size()) throw Error("schema-mismatch", "reference level count");
    DesignLayout layout;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        const FeatureSpec& spec = schema.features[f];
        if (spec.kind == FeatureKind::Numeric) {
            reference_levels[f] = -1;
            layout.columns.push_back({spec.name, f, -1});
            continue;
        }
        const int levels = static_cast<int>(spec.levels.size());
        if (reference_levels[f] < 0 || reference_levels[f] >= levels) {
            throw Error("schema-mismatch", "reference level of " + spec.name);
        }
        for (int l = 0; l < levels; ++l) {
            if (l != reference_levels[f]) layout.columns.push_back({spec.name + ":" + spec.levels[l], f, l});
        }
    }
    layout.schema = std::move(schema);
    layout.reference_levels = std::move(reference_levels);
    return layout;
}

DesignLayout DesignLayout::from_panel(const LabeledPanel& panel) {
    std::vector<int> refs(panel.schema.size(), -1);
    for (std::size_t f = 0; f < panel.schema.size(); ++f) {
        const FeatureSpec& spec = panel.schema.features[f];
        if (spec.kind != FeatureKind::Categorical) continue;
        std::vector<std::size_t> counts(spec.levels.size(), 0);
        for (std::size_t i = 0; i < panel.size(); ++i) {
            const double v = panel.row(i)[f];
            if (v >= 0 && v < static_cast<double>(counts.size())) ++counts[static_cast<std::size_t>(v)];
        }
        refs[f] = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
    return build(panel.schema, std::move(refs));
}

void DesignLayout::expand(std::span<const double> features, std::span<double> out) const {
    if (features.size() != schema.size() || out.size() != columns.size()) {
        throw Error("schema-mismatch", "feature vector length");
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const DesignColumn& col = columns[c];
        const double v = features[col.feature];
        if (col.level < 0) {
            out[c] = v;
            continue;
        }
        const auto levels = static_cast<double>(schema.features[col.feature].levels.size());
        if (!(v >= 0 && v < levels) || v != std::floor(v)) {
            throw Error("schema-mismatch", "bad level code for " + schema.features[col.feature].name);
        }
        out[c] = static_cast<int>(v) == col.level ? 1.0 : 0.0;
    }
}

Eigen::MatrixXd DesignLayout::design_matrix(const LabeledPanel& panel) const {
    if (panel.schema.hash() != schema.hash()) throw Error("schema-mismatch", "panel schema differs from model");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(panel.size()), static_cast<Eigen::Index>(width()));
    std::vector<double> buf(width());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        expand(panel.row(i), buf);
        for (std::size_t c = 0; c < buf.size(); ++c) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = buf[c];
    }
    return x;
}

double LogitModel::linear_predictor_design(std::span<const double> design_row) const {
    if (design_row.size() != coefficients.size()) throw Error("schema-mismatch", "design row length");
    double w = intercept;
    for (std::size_t c = 0; c < coefficients.size(); ++c) w += coefficients[c] * design_row[c];
    return w;
}

double LogitModel::linear_predictor(std::span<const double> features) const {
    std::vector<double> buf(layout.width());
    layout.expand(features, buf);
    return linear_predictor_design(buf);
}

double penalised_loglik(const Eigen::MatrixXd& design, std::span<const std::uint8_t> y,
                        const Eigen::VectorXd& params, double ridge, Eigen::VectorXd* gradient) {
    const Eigen::Index p = design.cols();
    if (params.size() != p + 1 || static_cast<Eigen::Index>(y.size()) != design.rows()) {
        throw Error("schema-mismatch", "parameter/design size");
    }
    const Eigen::VectorXd eta = (design * params.tail(p)).array() + params(0);
    double ll = 0.0;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += y[static_cast<std::size_t>(i)] * eta(i) - softplus(eta(i));
        resid(i) = y[static_cast<std::size_t>(i)] - logistic(eta(i));
    }
    ll -= 0.5 * ridge * params.tail(p).squaredNorm();
    if (gradient) {
        gradient->resize(p + 1);
        (*gradient)(0) = resid.sum();
        gradient->tail(p) = design.transpose() * resid - ridge * params.tail(p);
    }
    return ll;
}

LogitModel fit_design(const Eigen::MatrixXd& design, std::span<const std::uint8_t> y, DesignLayout layout,
                      const FitOptions& options) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (static_cast<Eigen::Index>(y.size()) != n) throw Error("schema-mismatch", "outcome length");
    if (static_cast<std::size_t>(p) != layout.width()) throw Error("schema-mismatch", "design width");
    if (options.ridge < 0) throw Error("invalid-parameter", "ridge must be >= 0");
    if (!design.allFinite()) throw Error("non-finite-input");
    const std::size_t positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (positives == 0 || positives == y.size()) throw Error("degenerate-outcome");

    const Standardiser st = standardise(design);
    Eigen::MatrixXd z(n, p + 1);
    z.col(0).setOnes();
    for (Eigen::Index j = 0; j < p; ++j) z.col(j + 1) = (design.col(j).array() - st.mean(j)) / st.scale(j);
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];

    // Penalty on original-scale slopes beta_j = gamma_j / scale_j.
    Eigen::VectorXd penalty = Eigen::VectorXd::Zero(p + 1);
    for (Eigen::Index j = 0; j < p; ++j) penalty(j + 1) = options.ridge / (st.scale(j) * st.scale(j));

    const double prevalence = static_cast<double>(positives) / static_cast<double>(n);
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(p + 1);
    gamma(0) = std::log(prevalence / (1.0 - prevalence));

    LogitModel model;
    model.layout = std::move(layout);
    model.n_obs = static_cast<std::size_t>(n);
    model.ridge = options.ridge;

    Eigen::VectorXd eta;
    double pll = loglik(z, yv, gamma, penalty, &eta);
    model.loglik_trace.push_back(pll);

    auto step_is_small = [&](const Eigen::VectorXd& step) {
        return max_abs(step) <= 1e-6 * std::max(1.0, max_abs(gamma));
    };

    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        Eigen::VectorXd mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu(i) = logistic(eta(i));
            w(i) = logistic_weight(eta(i));
        }
        const Eigen::VectorXd grad = z.transpose() * (yv - mu) - penalty.cwiseProduct(gamma);
        // Fitted probabilities all numerically 0 or 1: the data are separated.
        if (w.sum() < 1e-8) {
            model.warning = "fitted probabilities numerically 0 or 1; separation";
            break;
        }
        Eigen::MatrixXd hess = z.transpose() * w.asDiagonal() * z;
        hess.diagonal() += penalty;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        Eigen::VectorXd step = ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            model.warning = "singular Hessian during IRLS; likely separation";
            break;
        }
        if (max_abs(grad) < options.gradient_tolerance && step_is_small(step)) {
            model.converged = true;
            break;
        }
        if (iter == options.max_iterations) break;

        // Step halving keeps the penalised log-likelihood non-decreasing.
        double t = 1.0;
        Eigen::VectorXd candidate, candidate_eta;
        double candidate_pll = 0.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_step_halvings; ++h, t *= 0.5) {
            candidate = gamma + t * step;
            candidate_pll = loglik(z, yv, candidate, penalty, &candidate_eta);
            if (std::isfinite(candidate_pll) && candidate_pll >= pll) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            model.warning = "step halving failed to improve the likelihood";
            break;
        }
        const double change = std::abs(candidate_pll - pll) / std::max(std::abs(pll), 1e-300);
        gamma = candidate;
        eta = candidate_eta;
        pll = candidate_pll;
        model.loglik_trace.push_back(pll);
        model.iterations = iter + 1;
        if (change < options.loglik_tolerance && step_is_small(t * step)) {
            model.converged = true;
            break;
        }
    }
    if (!model.converged && model.warning.empty()) {
        model.warning = "IRLS did not converge in " + std::to_string(options.max_iterations) +
                        " iterations; likely (quasi-)separation";
    }

    // Back to the original scale.
    model.coefficients.resize(static_cast<std::size_t>(p));
    model.intercept = gamma(0);
    Eigen::MatrixXd to_original = Eigen::MatrixXd::Identity(p + 1, p + 1);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double beta = gamma(j + 1) / st.scale(j);
        model.coefficients[static_cast<std::size_t>(j)] = beta;
        model.intercept -= beta * st.mean(j);
        to_original(j + 1, j + 1) = 1.0 / st.scale(j);
        to_original(0, j + 1) = -st.mean(j) / st.scale(j);
    }
    model.penalised_log_likelihood = pll;
    model.log_likelihood = pll + 0.5 * (penalty.array() * gamma.array().square()).sum();

    // Standard errors from the unpenalised observed information.
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = logistic_weight(eta(i));
    const Eigen::MatrixXd info = z.transpose() * w.asDiagonal() * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
    const auto& lambda = eig.eigenvalues();
    model.standard_errors.assign(static_cast<std::size_t>(p + 1), std::numeric_limits<double>::quiet_NaN());
    if (eig.info() == Eigen::Success && lambda.minCoeff() > 1e-10 * std::max(lambda.maxCoeff(), 1e-300)) {
        const Eigen::MatrixXd cov_std = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
                                        eig.eigenvectors().transpose();
        const Eigen::MatrixXd cov = to_original * cov_std * to_original.transpose();
        for (Eigen::Index j = 0; j <= p; ++j) model.standard_errors[static_cast<std::size_t>(j)] = std::sqrt(cov(j, j));
    }
    return model;
}

LogitModel fit(const LabeledPanel& panel, const FitOptions& options) {
    if (panel.empty()) throw Error("degenerate-outcome", "empty panel");
    for (double v : panel.features) {
        if (!std::isfinite(v)) throw Error("non-finite-input");
    }
    DesignLayout layout = DesignLayout::from_panel(panel);
    const Eigen::MatrixXd x = layout.design_matrix(panel);
    return fit_design(x, panel.y, std::move(layout), options);
}

double predict(const LogitModel& model, std::span<const double> features) {
    return logistic(model.linear_predictor(features));
}

std::vector<double> predict(const LogitModel& model, const LabeledPanel& panel) {
    if (panel.schema.hash() != model.layout.schema.hash()) {
        throw Error("schema-mismatch", "panel schema differs from model");
    }
    std::vector<double> out(panel.size());
    std::vector<double> buf(model.layout.width());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        model.layout.expand(panel.row(i), buf);
        out[i] = logistic(model.linear_predictor_design(buf));
    }
    return out;
}

std::vector<WaldRow> wald_inference(const LogitModel& model) {
    if (!model.converged) throw Error("not-converged");
    if (model.standard_errors.size() != model.coefficients.size() + 1) throw Error("singular-information");
    for (double se : model.standard_errors) {
        if (!std::isfinite(se)) throw Error("singular-information");
    }
    std::vector<WaldRow> rows;
    auto add = [&](std::string name, double estimate, double se) {
        WaldRow r{std::move(name), estimate, se, 0.0, 1.0};
        r.z = se > 0 ? estimate / se : (estimate == 0 ? 0.0 : std::copysign(INFINITY, estimate));
        r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
        rows.push_back(std::move(r));
    };
    add("(Intercept)", model.intercept, model.standard_errors[0]);
    for (std::size_t c = 0; c < model.coefficients.size(); ++c) {
        add(model.layout.columns[c].name, model.coefficients[c], model.standard_errors[c + 1]);
    }
    return rows;
}

}  // namespace sicr

#include "sicr/shapley.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sicr/error.hpp"
#include "sicr/parallel.hpp"
#include "sicr/random.hpp"

namespace sicr {

namespace {

AttributionRows frame_for(const LogitModel& model, const LabeledPanel& panel) {
    AttributionRows out;
    for (const auto& f : model.layout.schema.features) out.feature_names.push_back(f.name);
    out.loan_ids = panel.loan_ids;
    out.months = panel.months;
    return out;
}

}  // namespace

std::vector<double> feature_contributions(const LogitModel& model, const LabeledPanel& panel) {
    if (panel.schema.hash() != model.layout.schema.hash()) {
        throw Error("schema-mismatch", "panel schema differs from model");
    }
    const std::size_t p = model.layout.schema.size();
    std::vector<double> out(panel.size() * p, 0.0);
    std::vector<double> design(model.layout.width());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        model.layout.expand(panel.row(i), design);
        for (std::size_t c = 0; c < design.size(); ++c) {
            out[i * p + model.layout.columns[c].feature] += model.coefficients[c] * design[c];
        }
    }
    return out;
}

AttributionRows exact_linear_shapley(const LogitModel& model, const LabeledPanel& panel) {
    if (panel.empty()) throw Error("empty-panel");
    AttributionRows out = frame_for(model, panel);
    const std::size_t p = out.width();
    out.values = feature_contributions(model, panel);
    std::vector<double> mean(p, 0.0);
    for (std::size_t i = 0; i < panel.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j) mean[j] += out.values[i * p + j];
    }
    for (double& m : mean) m /= static_cast<double>(panel.size());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j) out.values[i * p + j] -= mean[j];
    }
    return out;
}

AttributionRows mc_shapley(const LogitModel& model, const LabeledPanel& explain, const LabeledPanel& background,
                           const MonteCarloOptions& options) {
    if (background.empty()) throw Error("empty-background");
    if (options.n_samples < 1) throw Error("invalid-parameter", "n_samples must be >= 1");
    AttributionRows out = frame_for(model, explain);
    const std::size_t p = out.width();
    const std::size_t n = options.n_samples;

    // The model is additive over schema features, so a coalition's linear
    // predictor is the sum of its members' contributions.
    const auto x_contrib = feature_contributions(model, explain);
    const auto z_contrib = feature_contributions(model, background);
    double mean_f = 0.0;
    for (double v : z_contrib) mean_f += v;
    mean_f /= static_cast<double>(background.size());

    std::vector<bool> active(p, false);
    for (std::size_t c = 0; c < model.coefficients.size(); ++c) {
        if (model.coefficients[c] != 0.0) active[model.layout.columns[c].feature] = true;
    }

    out.values.assign(explain.size() * p, 0.0);
    out.std_errors.assign(explain.size() * p, 0.0);
    parallel_for(explain.size(), options.threads, [&](std::size_t i) {
        Rng rng(derive_seed(options.seed, i));
        std::vector<std::size_t> perm(p);
        std::vector<double> sum(p, 0.0), sum_sq(p, 0.0);
        const double* x = &x_contrib[i * p];
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t m = 0; m < n; ++m) {
                std::iota(perm.begin(), perm.end(), std::size_t{0});
                std::shuffle(perm.begin(), perm.end(), rng);
                const double* z = &z_contrib[uniform_index(rng, background.size()) * p];
                // f(with j) - f(without j): features before j come from x in
                // both coalitions, features after j from z in both.
                double with_j = 0.0;
                double without_j = 0.0;
                bool before = true;
                for (std::size_t k : perm) {
                    if (k == j) {
                        with_j += x[k];
                        without_j += z[k];
                        before = false;
                    } else {
                        const double v = before ? x[k] : z[k];
                        with_j += v;
                        without_j += v;
                    }
                }
                const double diff = with_j - without_j;
                sum[j] += diff;
                sum_sq[j] += diff * diff;
            }
        }
        double total = 0.0;
        double f_x = 0.0;
        std::vector<double> variance(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            const double mean = sum[j] / static_cast<double>(n);
            if (n > 1) {
                variance[j] = std::max(0.0, (sum_sq[j] - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
            }
            out.values[i * p + j] = mean;
            out.std_errors[i * p + j] = std::sqrt(variance[j] / static_cast<double>(n));
            total += mean;
            f_x += x[j];
        }
        if (options.adjust_efficiency) {
            const double gap = (f_x - mean_f) - total;
            const double var_total = std::accumulate(variance.begin(), variance.end(), 0.0);
            const auto n_active = static_cast<double>(std::count(active.begin(), active.end(), true));
            for (std::size_t j = 0; j < p; ++j) {
                if (var_total > 0) out.values[i * p + j] += gap * variance[j] / var_total;
                else if (active[j]) out.values[i * p + j] += gap / n_active;
            }
        }
    });
    return out;
}

ImportanceRanking importance_ranking(const AttributionRows& attributions) {
    if (attributions.rows() == 0) throw Error("empty-attributions");
    const std::size_t p = attributions.width();
    std::vector<double> mean_abs(p, 0.0);
    for (std::size_t i = 0; i < attributions.rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) mean_abs[j] += std::abs(attributions.at(i, j));
    }
    ImportanceRanking ranking;
    ranking.sample_size = attributions.rows();
    for (std::size_t j = 0; j < p; ++j) {
        ranking.entries.push_back({attributions.feature_names[j], mean_abs[j] / static_cast<double>(attributions.rows()), 0});
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(), [](const auto& a, const auto& b) {
        if (a.psi_bar != b.psi_bar) return a.psi_bar > b.psi_bar;
        return a.feature < b.feature;
    });
    for (std::size_t r = 0; r < ranking.entries.size(); ++r) ranking.entries[r].rank = r + 1;
    return ranking;
}

AttributionRows probability_scale_report(const LogitModel& model, const LabeledPanel& panel,
                                         const AttributionRows& linear) {
    if (linear.rows() != panel.size()) throw Error("schema-mismatch", "attribution rows differ from panel");
    AttributionRows out = linear;
    out.std_errors.clear();
    const std::size_t p = linear.width();
    std::vector<double> design(model.layout.width());
    for (std::size_t i = 0; i < panel.size(); ++i) {
        model.layout.expand(panel.row(i), design);
        const double eta = model.linear_predictor_design(design);
        for (std::size_t j = 0; j < p; ++j) {
            out.values[i * p + j] = logistic(eta) - logistic(eta - linear.at(i, j));
        }
    }
    return out;
}

}  // namespace sicr

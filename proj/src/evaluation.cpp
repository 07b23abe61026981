#include "sicr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sicr/error.hpp"
#include "sicr/parallel.hpp"
#include "sicr/random.hpp"

namespace sicr {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw Error("invalid-parameter", "scores and labels differ in length");
}

// Scores sorted once, with tie groups, so bootstrap replicates can be
// evaluated as weighted sweeps without re-sorting.
struct SortedScores {
    std::vector<std::size_t> order;
    std::vector<std::size_t> group_end;  // exclusive end (in `order`) of each tie group
};

SortedScores sort_scores(std::span<const double> scores) {
    SortedScores s;
    s.order.resize(scores.size());
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    for (std::size_t i = 0; i < s.order.size(); ++i) {
        if (i + 1 == s.order.size() || scores[s.order[i + 1]] != scores[s.order[i]]) s.group_end.push_back(i + 1);
    }
    return s;
}

// AUC with per-observation multiplicities; nullopt when a class is empty.
std::optional<double> weighted_auc(const SortedScores& sorted, std::span<const std::uint8_t> labels,
                                   std::span<const std::uint32_t> weight) {
    double neg_below = 0.0;
    double numerator = 0.0;
    double pos_total = 0.0;
    std::size_t begin = 0;
    for (std::size_t end : sorted.group_end) {
        double pos = 0.0;
        double neg = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t idx = sorted.order[i];
            const double w = weight.empty() ? 1.0 : weight[idx];
            (labels[idx] ? pos : neg) += w;
        }
        numerator += pos * (neg_below + 0.5 * neg);
        neg_below += neg;
        pos_total += pos;
        begin = end;
    }
    if (pos_total == 0.0 || neg_below == 0.0) return std::nullopt;
    return numerator / (pos_total * neg_below);
}

// Linear-interpolation (type 7) sample quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

AucEstimate bootstrap(std::span<const double> scores, std::span<const std::uint8_t> labels,
                      std::size_t replicates, std::uint64_t seed, unsigned threads) {
    check_lengths(scores.size(), labels.size());
    if (replicates < 100) throw Error("invalid-parameter", "bootstrap needs >= 100 replicates");
    const SortedScores sorted = sort_scores(scores);
    const auto point = weighted_auc(sorted, labels, {});
    if (!point) throw Error("degenerate-labels");

    constexpr int kMaxRetries = 10;
    const std::size_t n = scores.size();
    std::vector<std::optional<double>> results(replicates);
    parallel_for(replicates, threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        std::vector<std::uint32_t> counts(n);
        for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
            std::fill(counts.begin(), counts.end(), 0u);
            for (std::size_t i = 0; i < n; ++i) ++counts[uniform_index(rng, n)];
            results[r] = weighted_auc(sorted, labels, counts);
            if (results[r]) return;
        }
    });

    AucEstimate est;
    est.auc = *point;
    std::vector<double> values;
    values.reserve(replicates);
    for (const auto& v : results) {
        if (v) values.push_back(*v);
        else ++est.skipped;
    }
    est.replicates = values.size();
    if (values.empty()) {
        est.ci_low = est.ci_high = est.auc;
        return est;
    }
    std::sort(values.begin(), values.end());
    est.ci_low = std::clamp(quantile(values, 0.025), 0.0, 1.0);
    est.ci_high = std::clamp(quantile(values, 0.975), 0.0, 1.0);
    return est;
}

std::vector<double> as_scores(std::span<const std::uint8_t> binary) {
    return {binary.begin(), binary.end()};
}

LabeledPanel concatenate(const LabeledPanel& a, const LabeledPanel& b) {
    LabeledPanel out = a;
    for (std::size_t i = 0; i < b.size(); ++i) out.append_row(b, i);
    return out;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores.size(), labels.size());
    const auto value = weighted_auc(sort_scores(scores), labels, {});
    if (!value) throw Error("degenerate-labels");
    return *value;
}

AucEstimate bootstrap_auc_ci(std::span<const double> scores, std::span<const std::uint8_t> labels,
                             std::size_t replicates, std::uint64_t seed, unsigned threads) {
    return bootstrap(scores, labels, replicates, seed, threads);
}

AucEstimate discrete_auc(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels,
                         std::size_t replicates, std::uint64_t seed, unsigned threads) {
    const auto scores = as_scores(predictions);
    return bootstrap(scores, labels, replicates, seed, threads);
}

double generalised_youden(double sensitivity, double specificity, double prevalence, double cost_ratio) {
    return sensitivity + (1.0 - prevalence) / (cost_ratio * prevalence) * specificity - 1.0;
}

OperatingPoint operating_point(std::span<const double> scores, std::span<const std::uint8_t> labels,
                               double cutoff) {
    check_lengths(scores.size(), labels.size());
    double tp = 0, pos = 0, tn = 0, neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool flagged = scores[i] > cutoff;
        if (labels[i]) {
            ++pos;
            tp += flagged;
        } else {
            ++neg;
            tn += !flagged;
        }
    }
    if (pos == 0 || neg == 0) throw Error("degenerate-labels");
    return {tp / pos, tn / neg};
}

CutoffResult youden_cutoff(std::span<const double> scores, std::span<const std::uint8_t> labels,
                           double cost_ratio, std::optional<double> prevalence) {
    check_lengths(scores.size(), labels.size());
    if (!(cost_ratio > 0)) throw Error("invalid-parameter", "cost ratio must be positive");
    const SortedScores sorted = sort_scores(scores);

    // Cumulative class counts up to the end of each tie group.
    std::vector<double> distinct;
    std::vector<double> pos_upto;
    std::vector<double> neg_upto;
    double pos = 0, neg = 0;
    std::size_t begin = 0;
    for (std::size_t end : sorted.group_end) {
        for (std::size_t i = begin; i < end; ++i) (labels[sorted.order[i]] ? pos : neg) += 1;
        distinct.push_back(scores[sorted.order[begin]]);
        pos_upto.push_back(pos);
        neg_upto.push_back(neg);
        begin = end;
    }
    if (pos == 0 || neg == 0) throw Error("degenerate-labels");
    const double phi = prevalence.value_or(pos / (pos + neg));
    if (!(phi > 0 && phi < 1)) throw Error("invalid-parameter", "prevalence must lie in (0,1)");

    std::vector<double> candidates = {0.0, 1.0};
    for (std::size_t g = 0; g + 1 < distinct.size(); ++g) candidates.push_back(0.5 * (distinct[g] + distinct[g + 1]));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    CutoffResult best;
    best.cost_ratio = cost_ratio;
    best.prevalence = phi;
    bool have = false;
    for (double c : candidates) {
        // Groups with score <= c are classified negative.
        const auto g = static_cast<std::size_t>(std::upper_bound(distinct.begin(), distinct.end(), c) - distinct.begin());
        const double pos_le = g == 0 ? 0.0 : pos_upto[g - 1];
        const double neg_le = g == 0 ? 0.0 : neg_upto[g - 1];
        const double q = (pos - pos_le) / pos;
        const double p = neg_le / neg;
        const double j = generalised_youden(q, p, phi, cost_ratio);
        // Values within rounding noise count as ties, which go to the smaller c.
        if (!have || j > best.j_a + 1e-12) {
            have = true;
            best.c_star = c;
            best.j_a = j;
            best.sensitivity = q;
            best.specificity = p;
        }
    }
    return best;
}

std::vector<std::uint8_t> dichotomise(std::span<const double> scores, double cutoff) {
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > cutoff ? 1 : 0;
    return out;
}

double population_sd(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / n);
}

double flexibility(const std::map<std::string, std::vector<double>>& scores_by_loan) {
    double total = 0.0;
    std::size_t loans = 0;
    for (const auto& [id, scores] : scores_by_loan) {
        if (scores.size() < 2) continue;
        total += population_sd(scores);
        ++loans;
    }
    if (loans == 0) throw Error("insufficient-histories");
    return total / static_cast<double>(loans);
}

double flexibility(std::span<const std::string> loan_ids, std::span<const double> scores) {
    check_lengths(loan_ids.size(), scores.size());
    std::map<std::string, std::vector<double>> by_loan;
    for (std::size_t i = 0; i < scores.size(); ++i) by_loan[loan_ids[i]].push_back(scores[i]);
    return flexibility(by_loan);
}

double instability(const RateSeries& actual) {
    if (actual.points.size() < 2) throw Error("series-too-short", "instability needs >= 2 months");
    std::vector<double> rates;
    for (const auto& p : actual.points) rates.push_back(p.rate);
    return population_sd(rates);
}

CrisisSummary crisis_summaries(const RateSeries& actual, Month post_crisis_start) {
    if (actual.points.empty()) throw Error("series-too-short", "empty rate series");
    if (post_crisis_start > actual.points.back().month) {
        throw Error("post-crisis-out-of-range", format_month(post_crisis_start));
    }
    CrisisSummary s;
    s.earliest = actual.points.front().rate;
    s.maximum = actual.points.front().rate;
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& p : actual.points) {
        s.maximum = std::max(s.maximum, p.rate);
        if (p.month >= post_crisis_start) {
            total += p.rate;
            ++count;
        }
    }
    s.post_crisis_mean = total / static_cast<double>(count);
    s.early_warning = s.maximum - s.earliest;
    s.recovery = s.maximum - s.post_crisis_mean;
    return s;
}

std::pair<RateSeries, RateSeries> expected_rate_series(std::span<const double> scores, const LabeledPanel& panel,
                                                       double cutoff) {
    check_lengths(scores.size(), panel.size());
    std::map<Month, std::tuple<std::size_t, double, double>> tally;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        if (!panel.stage1[i]) continue;
        auto& [n, expected, discrete] = tally[panel.months[i]];
        ++n;
        expected += scores[i];
        discrete += scores[i] > cutoff ? 1.0 : 0.0;
    }
    RateSeries b{RateKind::Expected, {}};
    RateSeries c{RateKind::Discrete, {}};
    for (const auto& [month, t] : tally) {
        const auto& [n, expected, discrete] = t;
        const double dn = static_cast<double>(n);
        b.points.push_back({month, n, expected, expected / dn});
        c.points.push_back({month, n, discrete, discrete / dn});
    }
    return {std::move(b), std::move(c)};
}

std::pair<RateSeries, RateSeries> expected_rate_series(const LogitModel& model, const LabeledPanel& panel,
                                                       double cutoff) {
    return expected_rate_series(predict(model, panel), panel, cutoff);
}

DefinitionEvaluation evaluate_with_model(const SicrDefinition& definition, LogitModel model,
                                         const LabeledPanel& train, const LabeledPanel& valid,
                                         const EvaluationSettings& settings, const LabeledPanel* population) {
    try {
        DefinitionEvaluation out;
        DefinitionReport& r = out.report;
        r.definition = definition;
        r.n_train = train.size();
        r.n_valid = valid.size();
        r.converged = model.converged;
        if (train.empty() || valid.empty()) throw Error("degenerate-labels", "empty partition");

        const double positives = static_cast<double>(std::count(train.y.begin(), train.y.end(), 1));
        r.prevalence = positives / static_cast<double>(train.size());

        const auto train_scores = predict(model, train);
        r.cutoff = youden_cutoff(train_scores, train.y, settings.cost_ratio, r.prevalence);

        const auto valid_scores = predict(model, valid);
        r.auc_probabilistic = bootstrap_auc_ci(valid_scores, valid.y, settings.replicates,
                                               derive_seed(settings.seed, 1), settings.threads);
        r.flexibility = flexibility(valid.loan_ids, valid_scores);
        const auto valid_flags = dichotomise(valid_scores, r.cutoff.c_star);
        r.auc_discrete = discrete_auc(valid_flags, valid.y, settings.replicates, derive_seed(settings.seed, 2),
                                      settings.threads);

        LabeledPanel combined;
        if (!population) {
            combined = concatenate(train, valid);
            population = &combined;
        }
        out.actual = sicr_rate_series(*population);
        r.instability = instability(out.actual);
        r.crisis = crisis_summaries(out.actual, settings.post_crisis_start);
        std::tie(out.expected, out.discrete) = expected_rate_series(model, *population, r.cutoff.c_star);
        r.mae_m1 = series_mae(out.actual, out.expected).mae;
        r.mae_m2 = series_mae(out.actual, out.discrete).mae;
        out.model = std::move(model);
        return out;
    } catch (const Error& e) {
        throw Error(e.code(), definition.label + ": " + e.what());
    }
}

DefinitionEvaluation evaluate_definition(const SicrDefinition& definition, const LabeledPanel& train,
                                         const LabeledPanel& valid, const EvaluationSettings& settings,
                                         const LabeledPanel* population) {
    LogitModel model;
    try {
        model = fit(train, settings.fit);
    } catch (const Error& e) {
        throw Error(e.code(), definition.label + ": " + e.what());
    }
    return evaluate_with_model(definition, std::move(model), train, valid, settings, population);
}

}  // namespace sicr

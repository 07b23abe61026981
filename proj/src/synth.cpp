#include "sicr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "sicr/error.hpp"
#include "sicr/parallel.hpp"
#include "sicr/random.hpp"

namespace sicr {

namespace {

constexpr std::uint64_t kMacroStream = 0x6d6163726fULL;
constexpr std::uint64_t kLoanStreamBase = 0x6c6f616e00000000ULL;

double logistic(double w) {
    if (w >= 0) return 1.0 / (1.0 + std::exp(-w));
    const double e = std::exp(w);
    return e / (1.0 + e);
}

double annuity_payment(double principal, double monthly_rate, int term) {
    if (monthly_rate <= 0) return principal / term;
    return principal * monthly_rate / (1.0 - std::pow(1.0 + monthly_rate, -term));
}

struct LoanProfile {
    Month origination = 0;
    int term = 0;
    double frailty = 0.0;
    double principal = 0.0;
    double margin = 0.0;
    PayMethod pay_method = PayMethod::DebitOrder;
    double prelim = 0.0;
};

LoanProfile draw_profile(const SimConfig& config, Rng& rng) {
    LoanProfile p;
    const Month lo = config.window_start - config.origination_backlog_months;
    const Month hi = config.window_end - 1;
    p.origination = lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
    const double u = uniform01(rng);
    p.term = u < 0.55 ? 240 : (u < 0.70 ? 300 : 360);
    std::normal_distribution<double> normal(0.0, 1.0);
    p.frailty = normal(rng);
    p.principal = std::exp(std::log(750000.0) + 0.6 * normal(rng));
    p.margin = 0.003 * p.frailty + 0.006 * normal(rng);
    const double cash = logistic(-2.2 + 0.6 * p.frailty);
    const double v = uniform01(rng);
    p.pay_method = v < cash ? PayMethod::Cash : (v < cash + 0.15 ? PayMethod::Payroll : PayMethod::DebitOrder);
    p.prelim = std::max(0.0, 0.02 + 0.02 * normal(rng));
    return p;
}

// Transition scores on the log-odds scale.
struct Scores {
    double worsen;
    double cure;
};

Scores transition_scores(const SimConfig& config, const LoanProfile& loan, int g0, int months_since_arrears,
                         double prelim, PayMethod method, const MacroPoint& x) {
    const TransitionParams& tp = config.transitions;
    double worsen = g0 == 0 ? tp.worsen_intercept_current : tp.worsen_intercept_delinquent;
    if (g0 == 0 && tp.recidivism_decay_months > 0) {
        worsen += tp.recidivism_worsen * std::exp(-months_since_arrears / tp.recidivism_decay_months);
    }
    worsen += tp.frailty_worsen * loan.frailty + tp.prelim_worsen * prelim +
              tp.margin_worsen * loan.margin * 100.0;
    if (method == PayMethod::Cash) worsen += tp.cash_worsen;
    if (method == PayMethod::Payroll) worsen += tp.payroll_worsen;
    double cure = tp.cure_intercept + tp.frailty_cure * loan.frailty;
    for (std::size_t j = 0; j < kMacroSeriesCount; ++j) {
        const double deviation = (macro_value(x, j) - config.macro[j].mean) * 100.0;
        worsen += tp.macro_worsen[j] * deviation;
        cure += tp.macro_cure[j] * deviation;
    }
    return {worsen, cure};
}

LoanHistory simulate_loan(const SimConfig& config, const MacroScenario& macro, std::size_t index) {
    Rng rng(derive_seed(config.seed, kLoanStreamBase + index));
    const LoanProfile loan = draw_profile(config, rng);
    std::normal_distribution<double> normal(0.0, 1.0);

    LoanHistory h;
    h.loan_id = "L" + std::to_string(index + 1);
    h.origination_month = loan.origination;
    h.term_months = loan.term;

    auto macro_at = [&](Month m) -> const MacroPoint& {
        return macro.at(std::clamp(m, macro.first_month, macro.last_month()));
    };

    const double prime = macro_at(loan.origination).repo_rate + 0.035;
    const double monthly_rate = std::max(0.0, prime + loan.margin) / 12.0;
    const double instalment = annuity_payment(loan.principal, monthly_rate, loan.term);

    int g0 = 0;
    int months_since_arrears = 1 << 20;  // never in arrears
    double balance = loan.principal;
    double prelim = loan.prelim;
    PayMethod method = loan.pay_method;

    for (int i = 0; i < loan.term; ++i) {
        const Month m = loan.origination + i;
        if (m > config.window_end) break;
        if (i > 0) {
            const MacroPoint& x = macro_at(m);
            const int before = g0;
            double paid = 1.0;
            if (is_default(g0)) {
                const double u = uniform01(rng);
                if (u < config.cure_after_default_probability) {
                    paid = g0 + 1.0;
                    g0 = 0;
                } else if (u < config.cure_after_default_probability + config.write_off_probability) {
                    break;
                } else if (uniform01(rng) < logistic(config.transitions.worsen_intercept_default)) {
                    ++g0;
                    paid = 0.0;
                }
            } else {
                if (g0 == 0 && uniform01(rng) < config.settle_probability) break;
                const Scores sc = transition_scores(config, loan, g0, months_since_arrears, prelim, method, x);
                const double p_worsen = logistic(sc.worsen);
                const double p_cure = g0 > 0 ? logistic(sc.cure) : 0.0;
                const double u = uniform01(rng);
                if (u < p_worsen) {
                    ++g0;
                    paid = 0.0;
                } else if (u < p_worsen + (1.0 - p_worsen) * p_cure) {
                    const int step = std::min(g0, config.cure_step);
                    g0 -= step;
                    paid = 1.0 + step;
                }
            }
            balance = std::max(0.0, balance * (1.0 + monthly_rate) - paid * instalment);
            if (g0 == 0) {
                prelim += std::max(0.0, 0.003 - 0.0015 * loan.frailty + 0.004 * normal(rng));
            } else {
                prelim *= 0.6;
            }
            prelim = std::clamp(prelim, 0.0, 1.0);
            if (g0 > before && method != PayMethod::Cash && uniform01(rng) < 0.05) {
                method = PayMethod::Cash;
            }
        }
        months_since_arrears = g0 > 0 ? 0 : months_since_arrears + 1;
        h.g0.push_back(g0);
        h.covariates.push_back({balance, loan.margin, prelim, method});
        if (balance <= 0.0) break;
    }
    return h;
}

}  // namespace

Regime parse_regime(std::string_view name) {
    for (std::size_t i = 0; i < std::size(kRegimeNames); ++i) {
        if (kRegimeNames[i] == name) return static_cast<Regime>(i);
    }
    throw Error("bad-regime", std::string(name));
}

double macro_value(const MacroPoint& point, std::size_t series) {
    return macro_value(const_cast<MacroPoint&>(point), series);
}

double& macro_value(MacroPoint& point, std::size_t series) {
    switch (series) {
        case 0: return point.repo_rate;
        case 1: return point.inflation_growth;
        case 2: return point.dti_level;
        case 3: return point.real_income_growth;
        case 4: return point.employment_growth;
        default: throw Error("invalid-parameter", "macro series index");
    }
}

const MacroPoint& MacroScenario::at(Month m) const {
    if (!contains(m)) throw Error("month-out-of-range", format_month(m));
    return values[static_cast<std::size_t>(m - first_month)];
}

Regime MacroScenario::regime_at(Month m) const {
    if (!contains(m)) throw Error("month-out-of-range", format_month(m));
    return regimes[static_cast<std::size_t>(m - first_month)];
}

void validate(const SimConfig& config) {
    if (config.window_end - config.window_start + 1 < 13) {
        throw Error("window-too-short", "window needs at least 13 months");
    }
    if (config.crisis_months < 0 || config.recovery_months < 0) {
        throw Error("invalid-config", "negative crisis/recovery length");
    }
    if (config.crisis_months > 0 &&
        (config.crisis_start < config.window_start ||
         config.crisis_start + config.crisis_months - 1 > config.window_end)) {
        throw Error("invalid-config", "crisis window outside simulation window");
    }
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(config.cure_after_default_probability) || !probability(config.write_off_probability) ||
        !probability(config.settle_probability) ||
        config.cure_after_default_probability + config.write_off_probability > 1.0) {
        throw Error("invalid-config", "probabilities must lie in [0,1]");
    }
    if (config.cure_step < 1) throw Error("invalid-config", "cure_step must be >= 1");
    if (config.origination_backlog_months < 0) throw Error("invalid-config", "negative backlog");
}

MacroScenario gen_macro(const SimConfig& config) {
    validate(config);
    const int n = config.window_end - config.window_start + 1;
    MacroScenario out;
    out.first_month = config.window_start;
    out.values.resize(static_cast<std::size_t>(n));
    out.regimes.assign(static_cast<std::size_t>(n), Regime::Normal);
    if (config.crisis_months > 0) {
        const int crisis_begin = config.crisis_start - config.window_start;
        const int crisis_end = crisis_begin + config.crisis_months;
        const int recovery_end = std::min(n, crisis_end + config.recovery_months);
        for (int i = crisis_begin; i < crisis_end; ++i) out.regimes[i] = Regime::Crisis;
        for (int i = crisis_end; i < recovery_end; ++i) out.regimes[i] = Regime::Recovery;
    }

    Rng rng(derive_seed(config.seed, kMacroStream));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < kMacroSeriesCount; ++j) {
        const MacroSeriesParams& p = config.macro[j];
        double x = p.mean;
        for (int i = 0; i < n; ++i) {
            const Regime r = out.regimes[i];
            const double level = p.mean + (r == Regime::Crisis     ? p.crisis_shift
                                           : r == Regime::Recovery ? 0.5 * p.crisis_shift
                                                                   : 0.0);
            x = level + p.persistence * (x - level) + p.volatility * normal(rng);
            macro_value(out.values[i], j) = x;
        }
    }
    return out;
}

std::vector<LoanHistory> gen_portfolio(const SimConfig& config, const MacroScenario& macro,
                                       unsigned threads) {
    validate(config);
    std::vector<LoanHistory> loans(config.n_loans);
    parallel_for(config.n_loans, threads,
                 [&](std::size_t i) { loans[i] = simulate_loan(config, macro, i); });
    // Loans originating after the window's last month never appear.
    std::erase_if(loans, [](const LoanHistory& h) { return h.g0.empty(); });
    return loans;
}

}  // namespace sicr

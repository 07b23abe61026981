#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sicr/config.hpp"
#include "sicr/evaluation.hpp"
#include "sicr/shapley.hpp"

namespace sicr {

/// Seeds for each randomised step of one definition, derived from the run
/// seed and the definition label so they do not depend on grid order.
struct DefinitionSeeds {
    std::uint64_t subsample;
    std::uint64_t split;
    std::uint64_t evaluation;
    std::uint64_t attribution;
};
DefinitionSeeds definition_seeds(std::uint64_t root_seed, const std::string& label);

/// "1a(iii)" -> "1a_iii", for file names.
std::string label_slug(const std::string& label);

struct PreparedDefinition {
    LabeledPanel full;
    LabeledPanel sample;
    LabeledPanel train;
    LabeledPanel valid;
    MaeResult sample_representativeness;  // full vs subsample rates
    MaeResult train_representativeness;   // full vs training rates
};

PreparedDefinition prepare_definition(const RunConfig& config, std::span<const LoanHistory> portfolio,
                                      const MacroScenario& macro, const SicrDefinition& definition);

struct DefinitionOutcome {
    DefinitionEvaluation evaluation;
    MaeResult sample_representativeness;
    MaeResult train_representativeness;
    std::optional<ImportanceRanking> ranking;
};

/// Everything run_grid does for one definition, without touching files.
DefinitionOutcome run_definition(const RunConfig& config, std::span<const LoanHistory> portfolio,
                                 const MacroScenario& macro, const SicrDefinition& definition);

/// Validation rows explained by the attribution step.
LabeledPanel attribution_rows(const LabeledPanel& valid, std::size_t max_rows, std::uint64_t seed);

struct GridResult {
    std::vector<DefinitionReport> reports;  // successful definitions, grid order
    std::vector<std::string> failures;      // "label: diagnostic"
    bool ok() const { return failures.empty(); }
};

/// Simulates a portfolio from the config and runs every grid definition,
/// writing all artifacts under config.output_dir.
GridResult run_grid(const RunConfig& config);
/// Same, on an ingested portfolio.
GridResult run_grid(const RunConfig& config, std::span<const LoanHistory> portfolio, const MacroScenario& macro);

}  // namespace sicr

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sicr/dataset.hpp"
#include "sicr/evaluation.hpp"
#include "sicr/logit.hpp"
#include "sicr/synth.hpp"

namespace sicr {

struct GridConfig {
    std::vector<int> d = {1, 2};
    std::vector<int> s = {1, 2, 3};
    std::vector<int> k = {3, 6, 9, 12};
    /// Extra outcome periods run for the single class `extended_class`.
    std::vector<int> extended_k = {18, 24, 36};
    std::string extended_class = "1a";
    /// Ranks that give the roman-numeral part of each label.
    std::vector<int> k_ladder = {3, 6, 9, 12, 18, 24, 36};
};

struct SamplingConfig {
    std::size_t target_rows = 100000;
    double train_fraction = 0.7;
    SplitMode split_mode = SplitMode::Observation;
};

struct AttributionConfig {
    bool enabled = true;
    std::vector<std::string> definitions = {"1a(i)", "1a(ii)", "1a(iii)", "1a(iv)"};
    std::size_t samples = 100;
    std::size_t rows = 1000;  // validation rows explained per definition
};

struct RunConfig {
    std::uint64_t seed = 20070101;
    SimConfig simulation;
    GridConfig grid;
    SamplingConfig sampling;
    FitOptions modelling;
    double cost_ratio = 6.0;
    std::size_t replicates = 500;
    Month post_crisis_start = make_month(2010, 1);
    AttributionConfig attribution;
    std::string output_dir = "sicr_out";
    unsigned parallel = 1;
    bool plot_svg = true;
    /// Labels to keep; empty keeps the whole grid.
    std::vector<std::string> definitions;
};

/// Sectioned key = value text. Unknown sections or keys are rejected
/// (Error "unknown-config-key"); absent keys keep their defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Full configuration, every key written, re-parseable by parse_config.
std::string write_config(const RunConfig& config);

/// Simulation settings with the run seed applied.
SimConfig simulation_config(const RunConfig& config);
EvaluationSettings evaluation_settings(const RunConfig& config, std::uint64_t seed);

/// Canonical grid in d, s, k order followed by the extended outcome periods,
/// filtered by `config.definitions` when that is non-empty.
std::vector<SicrDefinition> grid_definitions(const RunConfig& config);

}  // namespace sicr

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace jmmle::cli {

/// Parameters shared by every subcommand. Precedence, lowest first: built-in
/// defaults, the --config JSON file, JMMLE_OUT / JMMLE_WORKERS, command-line flags.
struct RunConfig {
    std::string manifest;
    std::string estimate;
    std::string tests;
    std::string out = "jmmle_out";
    std::string preset = "estimation";
    std::string structure;  ///< empty: the preset's default
    std::string diagonal = "shift-min-eigen";
    std::string baseline = "none";
    int p = 60, q = 30, n = 100, K = 5;
    std::uint64_t seed = 1;
    int reps = 1;
    double alpha = 0.05;
    std::optional<double> global_alpha;  ///< level of the chi-square test; defaults to alpha
    double within_group_zero = -1.0;     ///< negative: the preset's default
    bool one_step = true;
    bool fit_upper = true;
    bool threshold_b = false;
    std::vector<double> lambda_grid, gamma_grid, eta_grid;
    std::vector<int> rows;  ///< 1-based; empty means all rows
    int workers = 0;

    double level_global() const { return global_alpha.value_or(alpha); }
};

nlohmann::json to_json(const RunConfig& cfg);
/// Unknown keys are a Config error so typos do not pass silently.
RunConfig from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});
void apply_environment(RunConfig& cfg);

/// Hash of the settings that determine results; paths and the worker count are excluded.
std::string config_hash(const RunConfig& cfg);

}  // namespace jmmle::cli

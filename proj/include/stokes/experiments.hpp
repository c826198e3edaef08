#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace stokes {

using json = nlohmann::json;

// CSV table with string cells; numbers are written with 17 significant digits.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    void add(std::vector<std::string> row);
    std::string csv() const;
};

std::string num(double v);

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0, threshold = 0.0;
    std::string relation;  // "<=", ">=", "==", ...
};

struct ExperimentResult {
    std::string experiment;
    Table table;
    json results = json::object();  // fitted constants and derived quantities
    std::vector<Verdict> verdicts;
    bool passed() const;
    json summary(const json& config, double wall_seconds) const;
};

const std::vector<std::string>& experiment_names();

// Complete configuration with every parameter and tolerance spelled out.
json default_config(const std::string& experiment);

// Rejects unknown or missing keys, type mismatches, n outside {2, 3}, q outside (1, inf) and
// experiment-specific parameter errors (ConfigError).
void validate_config(const std::string& experiment, const json& config);

ExperimentResult run_experiment(const std::string& experiment, const json& config);

// Writes <out>/<experiment>-<timestamp>/table.csv and summary.json; returns the directory.
std::filesystem::path write_outputs(const ExperimentResult& result, const json& config,
                                    const std::filesystem::path& out, double wall_seconds);

}  // namespace stokes

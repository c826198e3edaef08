#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "stokes/errors.hpp"
#include "stokes/experiments.hpp"
#include "stokes/parallel.hpp"

using namespace stokes;

int main(int argc, char** argv) {
    CLI::App app{"Half-space Stokes kernel experiments"};
    std::string experiment, config_path, out_dir = "results";
    int threads = 0;
    long long seed = -1;
    bool emit = false;
    std::string names;
    for (const auto& n : experiment_names()) names += (names.empty() ? "" : ", ") + n;
    app.add_option("experiment", experiment, "one of: " + names)->required();
    app.add_option("--config", config_path, "JSON configuration");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (default 1)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "seed overriding the configuration")->check(CLI::NonNegativeNumber);
    app.add_flag("--emit-default-config", emit, "print the complete default configuration and exit");
    CLI11_PARSE(app, argc, argv);

    try {
        if (emit) {
            std::cout << default_config(experiment).dump(2) << '\n';
            return 0;
        }
        if (config_path.empty()) throw ConfigError("--config is required (see --emit-default-config)");
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config " + config_path);
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("invalid JSON: ") + e.what());
        }
        if (seed >= 0 && cfg.is_object()) cfg["seed"] = seed;
        validate_config(experiment, cfg);
        if (threads > 0) set_num_threads(threads);
        auto t0 = std::chrono::steady_clock::now();
        auto result = run_experiment(experiment, cfg);
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        auto dir = write_outputs(result, cfg, out_dir, wall);
        for (const auto& v : result.verdicts)
            std::printf("%s  %s: %.6g %s %.6g\n", v.pass ? "PASS" : "FAIL", v.name.c_str(), v.value, v.relation.c_str(),
                        v.threshold);
        std::printf("wrote %s (%.1f s)\n", dir.string().c_str(), wall);
        return result.passed() ? 0 : 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

// Copyright (c) the stablecmp authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch experiment driver. Subcommands:
//   oep        -- OEP sweep over (problem, noise, K, method); JSON report
//   experiment -- CMA-ES campaigns; per-run CSVs, aggregates, manifest.json
//   validate   -- self-check suite; nonzero exit on any failing check
//
// Exit codes: 0 success, 1 check failure, 2 configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "stablecmp/experiments.hpp"
#include "stablecmp/validation.hpp"

namespace {

using stablecmp::ConfigError;
using stablecmp::ExperimentConfig;

ExperimentConfig load(const std::optional<std::string>& config_path,
                      const std::optional<std::uint64_t>& seed_override,
                      nlohmann::json& echo) {
    echo = nlohmann::json::object();
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw ConfigError("cannot open config file: " + *config_path);
        try {
            in >> echo;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
    }
    if (seed_override) echo["seed"] = *seed_override;
    try {
        return stablecmp::parse_config(echo);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field has wrong type: ") + e.what());
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path.string());
    out << doc.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Comparison-based optimization under alpha-stable noise"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_dir = ".";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON configuration file");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed_override, "master seed override");
    };

    CLI::App* oep = app.add_subcommand("oep", "order-estimation probability sweep");
    add_common(oep);
    CLI::App* experiment =
        app.add_subcommand("experiment", "CMA-ES noise-handling campaigns");
    add_common(experiment);
    CLI::App* validate = app.add_subcommand("validate", "run the self-check suite");
    add_common(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (oep->parsed()) {
            nlohmann::json echo;
            const ExperimentConfig cfg = load(config_path, seed_override, echo);
            nlohmann::json report = stablecmp::cmd_oep(cfg);
            report["config"] = echo;
            std::filesystem::create_directories(out_dir);
            const auto path = std::filesystem::path(out_dir) / "oep_report.json";
            write_json(path, report);
            std::cout << path.string() << '\n';
            return 0;
        }
        if (experiment->parsed()) {
            nlohmann::json echo;
            const ExperimentConfig cfg = load(config_path, seed_override, echo);
            stablecmp::cmd_experiment(cfg, out_dir, echo);
            std::cout << (std::filesystem::path(out_dir) / "manifest.json").string()
                      << '\n';
            return 0;
        }
        // validate
        const auto checks = stablecmp::run_validation();
        const nlohmann::json report = stablecmp::validation_report(checks);
        std::filesystem::create_directories(out_dir);
        const auto path = std::filesystem::path(out_dir) / "validation_report.json";
        write_json(path, report);
        bool all = true;
        for (const auto& c : checks) {
            std::printf("%-28s %s  (measured=%.3g, threshold=%.3g)\n", c.name.c_str(),
                        c.pass ? "PASS" : "FAIL", c.measured, c.threshold);
            all = all && c.pass;
        }
        std::cout << path.string() << '\n';
        return all ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

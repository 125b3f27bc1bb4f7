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

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stablecmp/experiments.hpp"
#include "stablecmp/validation.hpp"

using namespace stablecmp;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("stablecmp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

nlohmann::json tiny_experiment_json() {
    return nlohmann::json::parse(R"({
        "problems": [{"kind": "additive", "D": 3}],
        "noises": [{"alpha": 1.0, "beta": 0.0}],
        "handlers": ["AVE", "SA"],
        "ks": [1, 3],
        "iterations": 25,
        "seeds": [11, 12, 13],
        "m0": 5.0
    })");
}

} // namespace

TEST_CASE("config defaults", "[experiments]") {
    const ExperimentConfig cfg = parse_config(nlohmann::json::object());
    REQUIRE(cfg.problems.size() == 1);
    REQUIRE(cfg.problems[0].kind == ProblemKind::Additive);
    REQUIRE(cfg.noises.size() == 5);
    REQUIRE(cfg.noises[4].beta == 1.0);
    REQUIRE(cfg.ks == std::vector<std::size_t>{1, 10, 50});
    REQUIRE(cfg.seeds.size() == 10);
    REQUIRE(cfg.sigma0 == 1.0);
}

TEST_CASE("config validation failures", "[experiments]") {
    auto expect_bad = [](const char* text) {
        REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(text)), ConfigError);
    };
    expect_bad(R"({"problem": {"kind": "banana"}})");
    expect_bad(R"({"problem": {"kind": "additive", "D": 1}})");
    expect_bad(R"({"problem": {"kind": "additive", "gamma": 0}})");
    expect_bad(R"({"noises": [{"alpha": 2.5}]})");
    expect_bad(R"({"noises": [{"alpha": 1.0, "beta": 2.0}]})");
    expect_bad(R"({"noises": []})");
    expect_bad(R"({"handlers": ["AVERAGE"]})");
    expect_bad(R"({"ks": [0]})");
    expect_bad(R"({"trials": 0})");
    expect_bad(R"({"trials": -5})");
    expect_bad(R"({"iterations": 0})");
    expect_bad(R"({"iterations": -1})");
    expect_bad(R"({"problem": {"kind": "additive", "D": -3}})");
    expect_bad(R"({"seeds": [1, 1]})");
    expect_bad(R"({"sigma0": -1})");
    expect_bad(R"({"pair": {"x1": [1], "x2": [1, 2]}})");
}

TEST_CASE("a problem block may pin its own noise law", "[experiments]") {
    const ExperimentConfig cfg = parse_config(nlohmann::json::parse(
        R"({"problem": {"kind": "additive", "D": 4, "alpha": 1.5, "beta": -0.5,
            "gamma": 2.0, "delta": 0.25}})"));
    REQUIRE(cfg.noises.size() == 1);
    REQUIRE(cfg.noises[0].alpha == 1.5);
    REQUIRE(cfg.noises[0].beta == -0.5);
    const NoisyProblem p = cfg.problems[0].instantiate(cfg.noises[0].alpha,
                                                       cfg.noises[0].beta);
    REQUIRE(p.channels().size() == 1);
    REQUIRE(p.channels()[0].params.gamma == 2.0);
    REQUIRE(p.channels()[0].params.delta == 0.25);

    REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(
                          R"({"problem": {"kind": "additive", "alpha": 1.0},
                              "noises": [{"alpha": 2.0}]})")),
                      ConfigError);
    REQUIRE_THROWS_AS(parse_config(nlohmann::json::parse(
                          R"({"problem": {"kind": "additive", "alpha": 3.0}})")),
                      ConfigError);
}

TEST_CASE("multiplicative default delta keeps the index meaningful", "[experiments]") {
    ProblemSpec spec;
    spec.kind = ProblemKind::Multiplicative;
    spec.dimension = 2;
    REQUIRE(spec.effective_delta() == 1.0);
    const NoisyProblem p = spec.instantiate(1.0, 0.0);
    const std::vector<double> x{1.0, 1.0};
    REQUIRE(p.ground_truth(x) == Approx(101.0)); // x'Hx with delta = 1
    spec.delta = 0.0;
    REQUIRE(spec.instantiate(1.0, 0.0).ground_truth(x) == 0.0);
}

TEST_CASE("format_double round-trips doubles exactly", "[experiments]") {
    RngStream rng(6021023);
    for (int i = 0; i < 2000; ++i) {
        const double v = (rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform(-12, 12));
        REQUIRE(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    REQUIRE(format_double(1.0) == "1");
}

TEST_CASE("oep report covers the grid and is reproducible", "[experiments][slow]") {
    nlohmann::json j = nlohmann::json::parse(R"({
        "problem": {"kind": "additive", "D": 2},
        "noises": [{"alpha": 2.0}, {"alpha": 1.0}],
        "handlers": ["AVE", "SA"],
        "ks": [1, 5],
        "trials": 5000,
        "pair": {"x1": [0.0, 0.0], "x2": [1.0, 0.0]},
        "seed": 99
    })");
    const ExperimentConfig cfg = parse_config(j);
    const nlohmann::json a = cmd_oep(cfg);
    const nlohmann::json b = cmd_oep(cfg);
    REQUIRE(a == b); // same master seed, same report
    REQUIRE(a.at("rows").size() == 2 * 2 * 2);
    for (const auto& row : a.at("rows")) {
        REQUIRE(row.at("oep").get<double>() >= 0.0);
        REQUIRE(row.at("oep").get<double>() <= 1.0);
        if (row.at("method") == "AVE") {
            REQUIRE(row.at("analytic").is_number());
            REQUIRE(std::abs(row.at("analytic").get<double>() -
                             row.at("oep").get<double>()) < 0.05);
        } else {
            REQUIRE(row.at("analytic").is_null());
        }
        REQUIRE(row.at("hoeffding_bound").is_number());
    }
    // A different master seed must change the sampled trials.
    nlohmann::json j2 = j;
    j2["seed"] = 100;
    const nlohmann::json c = cmd_oep(parse_config(j2));
    bool any_difference = false;
    for (std::size_t i = 0; i < a.at("rows").size(); ++i)
        any_difference |= a.at("rows")[i].at("oep") != c.at("rows")[i].at("oep");
    REQUIRE(any_difference);
}

TEST_CASE("oep report reproduces the K-effect by stability index",
          "[experiments][slow]") {
    nlohmann::json j = nlohmann::json::parse(R"({
        "problem": {"kind": "additive", "D": 2},
        "noises": [{"alpha": 1.0}, {"alpha": 0.5}],
        "handlers": ["AVE", "SA"],
        "ks": [1, 10, 50],
        "trials": 20000,
        "pair": {"x1": [0.0, 0.0], "x2": [1.0, 0.0]},
        "seed": 41
    })");
    const nlohmann::json report = cmd_oep(parse_config(j));
    auto rows_for = [&](double alpha, const std::string& method) {
        std::vector<nlohmann::json> out;
        for (const auto& row : report.at("rows"))
            if (row.at("alpha") == alpha && row.at("method") == method)
                out.push_back(row);
        return out;
    };
    // Cauchy noise: the analytic averaging column is constant in K, and the
    // empirical estimates agree within joint tolerance.
    const auto cauchy = rows_for(1.0, "AVE");
    REQUIRE(cauchy.size() == 3);
    for (const auto& row : cauchy)
        REQUIRE(row.at("analytic").get<double>() ==
                Approx(cauchy[0].at("analytic").get<double>()));
    for (std::size_t i = 1; i < 3; ++i) {
        const double joint = 3.0 * std::hypot(cauchy[0].at("stderr").get<double>(),
                                              cauchy[i].at("stderr").get<double>());
        REQUIRE(std::abs(cauchy[i].at("oep").get<double>() -
                         cauchy[0].at("oep").get<double>()) < joint);
    }
    // alpha = 0.5: the averaging OEP column falls as K grows.
    const auto heavy = rows_for(0.5, "AVE");
    REQUIRE(heavy.front().at("oep").get<double>() >
            heavy.back().at("oep").get<double>());
    // Sign averaging respects its bound column everywhere.
    for (double alpha : {1.0, 0.5})
        for (const auto& row : rows_for(alpha, "SA"))
            REQUIRE(row.at("oep").get<double>() >=
                    row.at("hoeffding_bound").get<double>() -
                        3.0 * row.at("stderr").get<double>());
}

TEST_CASE("experiment outputs are byte-identical across reruns", "[experiments][slow]") {
    const nlohmann::json j = tiny_experiment_json();
    const ExperimentConfig cfg = parse_config(j);
    const fs::path d1 = fresh_dir("rerun_a"), d2 = fresh_dir("rerun_b");
    cmd_experiment(cfg, d1, j);
    cmd_experiment(cfg, d2, j);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
        ++files;
        const auto name = entry.path().filename();
        INFO(name);
        REQUIRE(slurp(entry.path()) == slurp(d2 / name));
    }
    // 2 handlers x 2 ks x (3 seeds + 1 aggregate) + manifest
    REQUIRE(files == 2 * 2 * 4 + 1);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("experiment CSV schema and aggregate quantiles", "[experiments][slow]") {
    const nlohmann::json j = tiny_experiment_json();
    const ExperimentConfig cfg = parse_config(j);
    const fs::path dir = fresh_dir("schema");
    const nlohmann::json manifest = cmd_experiment(cfg, dir, j);

    REQUIRE(manifest.at("config") == j);
    REQUIRE(manifest.at("seeds") == nlohmann::json(cfg.seeds));
    REQUIRE(manifest.at("version").get<std::string>() == kVersionString);

    // Per-run CSV: header plus one row per iteration, strictly increasing evals.
    const std::string run_csv = slurp(dir / "additive_a1_b0_SA_K3_seed12.csv");
    std::istringstream lines(run_csv);
    std::string line;
    std::getline(lines, line);
    REQUIRE(line == "t,evals,tau_b,f_delta,sigma");
    std::size_t rows = 0;
    long long prev_evals = 0;
    const std::size_t lambda = default_lambda(3);
    while (std::getline(lines, line)) {
        ++rows;
        std::istringstream cells(line);
        std::string t_s, evals_s;
        std::getline(cells, t_s, ',');
        std::getline(cells, evals_s, ',');
        const long long evals = std::stoll(evals_s);
        REQUIRE(evals == static_cast<long long>(rows * lambda * 3));
        REQUIRE(evals > prev_evals);
        prev_evals = evals;
    }
    REQUIRE(rows == 25);

    // Aggregate medians: recompute from the three per-seed files.
    auto table = [&](const std::string& name) {
        std::vector<std::vector<double>> out;
        std::istringstream all(slurp(dir / name));
        std::string l;
        std::getline(all, l); // header
        while (std::getline(all, l)) {
            std::istringstream cs(l);
            std::vector<double> vals;
            std::string cell;
            while (std::getline(cs, cell, ','))
                vals.push_back(std::strtod(cell.c_str(), nullptr));
            out.push_back(vals);
        }
        return out;
    };
    const auto s1 = table("additive_a1_b0_SA_K3_seed11.csv");
    const auto s2 = table("additive_a1_b0_SA_K3_seed12.csv");
    const auto s3 = table("additive_a1_b0_SA_K3_seed13.csv");
    const auto agg = table("additive_a1_b0_SA_K3_agg.csv");
    for (std::size_t t = 0; t < 25; ++t) {
        std::vector<double> fd{s1[t][3], s2[t][3], s3[t][3]};
        std::sort(fd.begin(), fd.end());
        REQUIRE(agg[t][8] == fd[1]);          // f_delta_median over 3 seeds
        REQUIRE(agg[t][9] == Approx(0.5 * (fd[0] + fd[1])).epsilon(1e-15)); // p25, type-7
        REQUIRE(agg[t][10] == Approx(0.5 * (fd[1] + fd[2])).epsilon(1e-15)); // p75
    }
    fs::remove_all(dir);
}

TEST_CASE("aggregate carries the span-10 smoothed tau column", "[experiments][slow]") {
    const nlohmann::json j = tiny_experiment_json();
    const ExperimentConfig cfg = parse_config(j);
    const fs::path dir = fresh_dir("smooth");
    cmd_experiment(cfg, dir, j);
    // With a single seed the smoothed median equals the moving average of the
    // raw column; with 3 seeds it is the median of the three smoothed series.
    // Check the header names and that the smoothed series differs from raw.
    const std::string agg = slurp(dir / "additive_a1_b0_AVE_K1_agg.csv");
    REQUIRE(agg.find("tau_b_ma_median") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("unwritable output directory is a config error", "[experiments]") {
    const nlohmann::json j = tiny_experiment_json();
    const ExperimentConfig cfg = parse_config(j);
    REQUIRE_THROWS_AS(cmd_experiment(cfg, "/proc/definitely_not_writable", j),
                      ConfigError);
}

TEST_CASE("validation suite passes on the real implementation", "[experiments][slow]") {
    const auto checks = run_validation();
    REQUIRE(checks.size() == 12);
    for (const auto& c : checks) {
        INFO(c.name << " measured=" << c.measured << " threshold=" << c.threshold);
        REQUIRE(c.pass);
    }
    const nlohmann::json report = validation_report(checks);
    REQUIRE(report.at("all_pass").get<bool>());
}

TEST_CASE("a biased CDF is caught by the agreement checks", "[experiments][slow]") {
    ValidationHooks hooks;
    hooks.symmetric_cdf = [](double alpha, double x) {
        return std::min(1.0, cdf_symmetric_standard(alpha, x) + 0.02);
    };
    bool agreement_failed = false;
    for (const auto& c : run_validation(hooks))
        if (c.name == "averaging_oep_agreement") agreement_failed = !c.pass;
    REQUIRE(agreement_failed);
}

TEST_CASE("a broken weight formula is caught by the weighting suite",
          "[experiments][slow]") {
    ValidationHooks hooks;
    hooks.tie_weights = [](std::span<const double> keys, const WeightScheme& scheme) {
        auto w = tie_aware_weights(keys, scheme);
        for (auto& x : w) x *= 1.001; // breaks weight-sum preservation
        return w;
    };
    bool weighting_failed = false;
    for (const auto& c : run_validation(hooks))
        if (c.name == "weighting_suite") weighting_failed = !c.pass;
    REQUIRE(weighting_failed);
}

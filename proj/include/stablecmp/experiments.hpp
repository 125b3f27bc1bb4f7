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

#pragma once

/// \file experiments.hpp
/// Batch experiment driver: a JSON experiment configuration, the OEP sweep
/// report, and the CMA-ES campaign writer (per-run CSVs, seed-aggregated
/// CSVs, manifest). Everything is a pure function of (config, seeds): the
/// stream for grid cell c and seed s is RngStream(derive_stream_seed(s, c)),
/// so reruns are byte-identical and cells can execute in any order.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stablecmp/cmaes.hpp"
#include "stablecmp/comparators.hpp"
#include "stablecmp/metrics.hpp"
#include "stablecmp/problems.hpp"
#include "stablecmp/theory.hpp"

namespace stablecmp {

inline constexpr const char* kVersionString = "stablecmp 0.1.0";

/// Invalid configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ProblemKind { Additive, Multiplicative, Linear };

inline std::string to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::Additive: return "additive";
        case ProblemKind::Multiplicative: return "multiplicative";
        case ProblemKind::Linear: return "linear";
    }
    return "?";
}

inline std::string to_string(Method m) {
    switch (m) {
        case Method::Average: return "AVE";
        case Method::SignAverage: return "SA";
        case Method::Median: return "MED";
    }
    return "?";
}

/// One test-function specification. gamma/delta configure the additive and
/// multiplicative kinds; (a, b) configure the linear-noise scale ladder.
struct ProblemSpec {
    ProblemKind kind = ProblemKind::Additive;
    std::size_t dimension = 10;
    double gamma = 1.0;
    // Default location: 0 for additive/linear; 1 for multiplicative, which
    // makes the index x'Hx rather than identically zero.
    std::optional<double> delta;
    double a = -1.0;
    double b = 1.0;
    // A problem block may pin its own noise law; absent a config-level noise
    // grid, a single problem's (alpha, beta) becomes the grid.
    std::optional<double> alpha;
    double beta = 0.0;

    double effective_delta() const {
        if (delta) return *delta;
        return kind == ProblemKind::Multiplicative ? 1.0 : 0.0;
    }

    NoisyProblem instantiate(double noise_alpha, double noise_beta) const {
        switch (kind) {
            case ProblemKind::Additive:
                return make_additive_ellipsoid(
                    dimension,
                    StableParams(noise_alpha, noise_beta, gamma, effective_delta()));
            case ProblemKind::Multiplicative:
                return make_multiplicative_ellipsoid(
                    dimension,
                    StableParams(noise_alpha, noise_beta, gamma, effective_delta()));
            case ProblemKind::Linear:
                return make_linear_noise_ellipsoid(dimension, noise_alpha,
                                                   noise_beta, a, b);
        }
        throw std::logic_error("ProblemSpec: unknown kind");
    }
};

struct NoiseSpec {
    double alpha;
    double beta;
};

struct ExperimentConfig {
    std::vector<ProblemSpec> problems;
    std::vector<NoiseSpec> noises;
    std::vector<Method> handlers;
    std::vector<std::size_t> ks;
    std::size_t trials = 100'000;
    std::size_t iterations = 1500;
    std::vector<std::uint64_t> seeds;
    std::uint64_t master_seed = 12345; // oep command and CLI --seed override
    double sigma0 = 1.0;
    std::vector<double> m0;            // empty: [10, ..., 10]
    std::vector<double> pair_x1, pair_x2; // empty: canonical pair
};

namespace detail_config {

inline void fail(const std::string& message) { throw ConfigError(message); }

inline ProblemSpec parse_problem(const nlohmann::json& j) {
    ProblemSpec spec;
    if (!j.contains("kind")) fail("problem.kind is required");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "additive") spec.kind = ProblemKind::Additive;
    else if (kind == "multiplicative") spec.kind = ProblemKind::Multiplicative;
    else if (kind == "linear") spec.kind = ProblemKind::Linear;
    else fail("problem.kind must be additive | multiplicative | linear");
    const auto dim = j.value("D", std::int64_t{10});
    if (dim < 2) fail("problem.D must be >= 2");
    spec.dimension = static_cast<std::size_t>(dim);
    spec.gamma = j.value("gamma", 1.0);
    if (!(spec.gamma > 0.0)) fail("problem.gamma must be positive");
    if (j.contains("delta")) spec.delta = j.at("delta").get<double>();
    spec.a = j.value("a", -1.0);
    spec.b = j.value("b", 1.0);
    if (j.contains("alpha")) {
        const double alpha = j.at("alpha").get<double>();
        if (!(alpha > 0.0) || !(alpha <= 2.0)) fail("problem.alpha must be in (0, 2]");
        spec.alpha = alpha;
    }
    spec.beta = j.value("beta", 0.0);
    if (!(spec.beta >= -1.0) || !(spec.beta <= 1.0))
        fail("problem.beta must be in [-1, 1]");
    return spec;
}

inline Method parse_method(const std::string& name) {
    if (name == "AVE") return Method::Average;
    if (name == "SA") return Method::SignAverage;
    if (name == "MED") return Method::Median;
    fail("handler must be AVE | SA | MED (got '" + name + "')");
    return Method::Average;
}

} // namespace detail_config

/// Parses and validates a config document. Absent keys take the documented
/// defaults (five noise settings, handlers AVE and SA, K in {1, 10, 50},
/// seeds 1..10, m0 = [10, ..., 10], sigma0 = 1).
inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using detail_config::fail;
    ExperimentConfig cfg;

    if (j.contains("problems")) {
        for (const auto& p : j.at("problems"))
            cfg.problems.push_back(detail_config::parse_problem(p));
    } else if (j.contains("problem")) {
        cfg.problems.push_back(detail_config::parse_problem(j.at("problem")));
    } else {
        cfg.problems.push_back(ProblemSpec{});
    }
    if (cfg.problems.empty()) fail("problems must not be empty");

    if (j.contains("noises")) {
        for (const auto& n : j.at("noises")) {
            const double alpha = n.at("alpha").get<double>();
            const double beta = n.value("beta", 0.0);
            if (!(alpha > 0.0) || !(alpha <= 2.0)) fail("noise.alpha must be in (0, 2]");
            if (!(beta >= -1.0) || !(beta <= 1.0)) fail("noise.beta must be in [-1, 1]");
            cfg.noises.push_back({alpha, beta});
        }
        if (cfg.noises.empty()) fail("noises must not be empty");
        for (const ProblemSpec& p : cfg.problems)
            if (p.alpha)
                fail("give the noise law either per problem or as a noises grid, "
                     "not both");
    } else if (cfg.problems.size() == 1 && cfg.problems.front().alpha) {
        cfg.noises = {{*cfg.problems.front().alpha, cfg.problems.front().beta}};
    } else {
        for (const ProblemSpec& p : cfg.problems)
            if (p.alpha)
                fail("per-problem alpha needs a single problem; use a noises grid "
                     "for multi-problem configs");
        cfg.noises = {{2.0, 0.0}, {1.5, 0.0}, {1.0, 0.0}, {0.5, 0.0}, {0.5, 1.0}};
    }

    if (j.contains("handlers")) {
        for (const auto& h : j.at("handlers"))
            cfg.handlers.push_back(detail_config::parse_method(h.get<std::string>()));
        if (cfg.handlers.empty()) fail("handlers must not be empty");
    } else {
        cfg.handlers = {Method::Average, Method::SignAverage};
    }

    if (j.contains("ks")) {
        for (const auto& k : j.at("ks")) {
            const auto v = k.get<std::int64_t>();
            if (v < 1) fail("ks entries must be >= 1");
            cfg.ks.push_back(static_cast<std::size_t>(v));
        }
        if (cfg.ks.empty()) fail("ks must not be empty");
    } else {
        cfg.ks = {1, 10, 50};
    }

    const auto trials = j.value("trials", std::int64_t{100'000});
    if (trials < 1) fail("trials must be >= 1");
    cfg.trials = static_cast<std::size_t>(trials);
    const auto iterations = j.value("iterations", std::int64_t{1500});
    if (iterations < 1) fail("iterations must be >= 1");
    cfg.iterations = static_cast<std::size_t>(iterations);

    if (j.contains("seeds")) {
        std::set<std::uint64_t> seen;
        for (const auto& s : j.at("seeds")) {
            const auto v = s.get<std::uint64_t>();
            if (!seen.insert(v).second) fail("seeds must be distinct");
            cfg.seeds.push_back(v);
        }
        if (cfg.seeds.empty()) fail("seeds must not be empty");
    } else {
        for (std::uint64_t s = 1; s <= 10; ++s) cfg.seeds.push_back(s);
    }

    cfg.master_seed = j.value("seed", std::uint64_t{12345});
    cfg.sigma0 = j.value("sigma0", 1.0);
    if (!(cfg.sigma0 > 0.0)) fail("sigma0 must be positive");

    if (j.contains("m0")) {
        if (j.at("m0").is_number()) {
            cfg.m0.assign(cfg.problems.front().dimension,
                          j.at("m0").get<double>());
        } else {
            cfg.m0 = j.at("m0").get<std::vector<double>>();
        }
    }

    if (j.contains("pair")) {
        cfg.pair_x1 = j.at("pair").at("x1").get<std::vector<double>>();
        cfg.pair_x2 = j.at("pair").at("x2").get<std::vector<double>>();
        if (cfg.pair_x1.size() != cfg.pair_x2.size())
            fail("pair.x1 and pair.x2 must have equal length");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return parse_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field has wrong type: ") + e.what());
    }
}

/// Round-trip-exact decimal form of a double (17 significant digits).
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Compact form for file names and JSON labels.
inline std::string format_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

namespace detail_agg {

// Type-7 quantile over the finite entries of v; NaN when none are finite.
inline double quantile_finite(std::vector<double> v, double p) {
    std::erase_if(v, [](double x) { return std::isnan(x); });
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

} // namespace detail_agg

// ---------------------------------------------------------------------------
// oep command
// ---------------------------------------------------------------------------

/// The default query pair when the config names none: x1 = 0.5 * ones,
/// x2 = ones. Both have nonzero noise coefficients on every test function.
inline void canonical_pair(std::size_t dimension, std::vector<double>& x1,
                           std::vector<double>& x2) {
    x1.assign(dimension, 0.5);
    x2.assign(dimension, 1.0);
}

/// OEP sweep over (problem, noise, K, method): empirical OEP with standard
/// error, the exact averaging OEP where the stable law gives it, the Hoeffding
/// bound at the pair's expected sign, and the sufficient K for 0.9 / 0.99.
inline nlohmann::json cmd_oep(const ExperimentConfig& cfg) {
    nlohmann::json report;
    report["version"] = kVersionString;
    report["seed"] = cfg.master_seed;
    report["rows"] = nlohmann::json::array();

    std::uint64_t cell = 0;
    for (const ProblemSpec& spec : cfg.problems) {
        std::vector<double> x1 = cfg.pair_x1, x2 = cfg.pair_x2;
        if (x1.empty()) canonical_pair(spec.dimension, x1, x2);
        if (x1.size() != spec.dimension)
            throw ConfigError("pair dimension does not match problem.D");
        for (const NoiseSpec& noise : cfg.noises) {
            const NoisyProblem problem = spec.instantiate(noise.alpha, noise.beta);
            const int eta =
                sign_of(problem.ground_truth(x1) - problem.ground_truth(x2));

            RngStream sign_rng(derive_stream_seed(cfg.master_seed, cell++));
            const ProbabilityEstimate e =
                expected_sign(problem, x1, x2, 1'000'000, sign_rng);
            const bool e_resolved = std::abs(e.value) > 3.0 * e.std_error;

            for (std::size_t k : cfg.ks) {
                for (Method method : cfg.handlers) {
                    RngStream rng(derive_stream_seed(cfg.master_seed, cell++));
                    const ProbabilityEstimate oep =
                        estimate_oep(ComparatorKind(method, k), problem, x1, x2,
                                     cfg.trials, SignEstimate(eta), rng);
                    nlohmann::json row;
                    row["problem"] = to_string(spec.kind);
                    row["alpha"] = noise.alpha;
                    row["beta"] = noise.beta;
                    row["k"] = k;
                    row["method"] = to_string(method);
                    row["eta_delta"] = eta;
                    row["oep"] = oep.value;
                    row["stderr"] = oep.std_error;
                    if (method == Method::Average)
                        row["analytic"] = oep_average_analytic(problem, x1, x2, k);
                    else
                        row["analytic"] = nullptr;
                    row["expected_sign"] = e.value;
                    row["hoeffding_bound"] = hoeffding_lower_bound(e.value, k);
                    if (e_resolved) {
                        row["sufficient_k_p90"] = sufficient_k(e.value, 0.90);
                        row["sufficient_k_p99"] = sufficient_k(e.value, 0.99);
                    } else {
                        row["sufficient_k_p90"] = nullptr;
                        row["sufficient_k_p99"] = nullptr;
                    }
                    report["rows"].push_back(std::move(row));
                }
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// experiment command
// ---------------------------------------------------------------------------

struct RunOutcome {
    std::vector<TrialRecord> records;
    std::string termination;
};

/// One (problem, noise, handler, K, seed) CMA-ES campaign on the stream
/// derived from (seed, cell index).
inline RunOutcome run_cell(const ProblemSpec& spec, const NoiseSpec& noise,
                           Method method, std::size_t k,
                           const ExperimentConfig& cfg, std::uint64_t seed,
                           std::uint64_t cell_index) {
    const NoisyProblem problem = spec.instantiate(noise.alpha, noise.beta);
    std::vector<double> m0 = cfg.m0;
    if (m0.empty()) m0.assign(spec.dimension, 10.0);
    if (m0.size() != spec.dimension)
        throw ConfigError("m0 dimension does not match problem.D");
    const WeightScheme scheme = cma_default_weights(default_lambda(spec.dimension));
    RngStream rng(derive_stream_seed(seed, cell_index));
    RunResult r = run(problem, NoiseHandler(method, k), scheme, cfg.iterations, m0,
                      cfg.sigma0, rng);
    return {std::move(r.records), std::move(r.termination)};
}

namespace detail_csv {

inline void write_run_csv(const std::filesystem::path& path,
                          const std::vector<TrialRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "t,evals,tau_b,f_delta,sigma\n";
    for (const TrialRecord& r : records)
        out << r.t << ',' << r.evals << ',' << format_double(r.tau_b) << ','
            << format_double(r.f_delta) << ',' << format_double(r.sigma) << '\n';
}

inline void write_aggregate_csv(const std::filesystem::path& path,
                                const std::vector<std::vector<TrialRecord>>& per_seed,
                                std::size_t smoothing_span) {
    std::size_t horizon = 0;
    for (const auto& records : per_seed)
        horizon = std::max(horizon, records.size());

    // Smoothed tau-b series per seed, then quantiles across seeds.
    std::vector<std::vector<double>> tau_ma(per_seed.size());
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
        std::vector<double> tau;
        tau.reserve(per_seed[s].size());
        for (const TrialRecord& r : per_seed[s]) tau.push_back(r.tau_b);
        tau_ma[s] = moving_average(tau, smoothing_span);
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "t,evals,tau_b_median,tau_b_p25,tau_b_p75,"
           "tau_b_ma_median,tau_b_ma_p25,tau_b_ma_p75,"
           "f_delta_median,f_delta_p25,f_delta_p75,"
           "sigma_median,sigma_p25,sigma_p75\n";
    for (std::size_t t = 0; t < horizon; ++t) {
        std::vector<double> tau, tau_s, fd, sig;
        std::size_t evals = 0;
        for (std::size_t s = 0; s < per_seed.size(); ++s) {
            if (t >= per_seed[s].size()) continue; // run ended early
            tau.push_back(per_seed[s][t].tau_b);
            tau_s.push_back(tau_ma[s][t]);
            fd.push_back(per_seed[s][t].f_delta);
            sig.push_back(per_seed[s][t].sigma);
            evals = per_seed[s][t].evals;
        }
        using detail_agg::quantile_finite;
        out << (t + 1) << ',' << evals;
        for (const std::vector<double>* col : {&tau, &tau_s, &fd, &sig})
            out << ',' << format_double(quantile_finite(*col, 0.5)) << ','
                << format_double(quantile_finite(*col, 0.25)) << ','
                << format_double(quantile_finite(*col, 0.75));
        out << '\n';
    }
}

} // namespace detail_csv

/// Runs the full campaign grid and writes one CSV per (problem, noise,
/// handler, K, seed), one aggregate CSV per cell, and manifest.json.
/// Returns the manifest.
inline nlohmann::json cmd_experiment(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir,
                                     const nlohmann::json& config_echo) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    {
        std::ofstream probe(out_dir / ".write_probe", std::ios::binary);
        if (!probe) throw ConfigError("output directory is not writable: " +
                                      out_dir.string());
    }
    std::filesystem::remove(out_dir / ".write_probe", ec);

    nlohmann::json manifest;
    manifest["version"] = kVersionString;
    manifest["config"] = config_echo;
    manifest["seeds"] = cfg.seeds;
    manifest["files"] = nlohmann::json::array();
    manifest["terminations"] = nlohmann::json::array();

    std::uint64_t cell_index = 0;
    for (const ProblemSpec& spec : cfg.problems) {
        for (const NoiseSpec& noise : cfg.noises) {
            for (Method method : cfg.handlers) {
                for (std::size_t k : cfg.ks) {
                    const std::string stem = to_string(spec.kind) + "_a" +
                                             format_short(noise.alpha) + "_b" +
                                             format_short(noise.beta) + "_" +
                                             to_string(method) + "_K" +
                                             std::to_string(k);
                    std::vector<std::vector<TrialRecord>> per_seed;
                    for (std::uint64_t seed : cfg.seeds) {
                        RunOutcome outcome =
                            run_cell(spec, noise, method, k, cfg, seed, cell_index);
                        const std::string name =
                            stem + "_seed" + std::to_string(seed) + ".csv";
                        detail_csv::write_run_csv(out_dir / name, outcome.records);
                        manifest["files"].push_back(name);
                        if (!outcome.termination.empty()) {
                            nlohmann::json t;
                            t["file"] = name;
                            t["reason"] = outcome.termination;
                            manifest["terminations"].push_back(std::move(t));
                        }
                        per_seed.push_back(std::move(outcome.records));
                    }
                    const std::string agg_name = stem + "_agg.csv";
                    detail_csv::write_aggregate_csv(out_dir / agg_name, per_seed, 10);
                    manifest["files"].push_back(agg_name);
                    ++cell_index;
                }
            }
        }
    }

    std::ofstream mout(out_dir / "manifest.json", std::ios::binary);
    mout << manifest.dump(2) << '\n';
    return manifest;
}

} // namespace stablecmp

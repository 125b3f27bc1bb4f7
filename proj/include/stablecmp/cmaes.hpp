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

/// \file cmaes.hpp
/// (mu/mu_w, lambda)-CMA-ES with pluggable noise handling: per-point sample
/// means (explicit averaging), pairwise sign averaging through R scores, or
/// per-point sample medians. Rank-one plus rank-mu covariance update and
/// cumulative step-size adaptation with the standard default constants; no
/// restarts, no active covariance update.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stablecmp/comparators.hpp"
#include "stablecmp/metrics.hpp"
#include "stablecmp/ranking.hpp"
#include "stablecmp/rng.hpp"

namespace stablecmp {

/// Default population size 4 + floor(3 ln D).
inline std::size_t default_lambda(std::size_t dimension) {
    return 4 + static_cast<std::size_t>(
                   3.0 * std::log(static_cast<double>(dimension)));
}

/// Log-linear recombination weights: the better half carries
/// ln((lambda+1)/2) - ln(rank), normalized to sum 1; the rest get zero.
inline WeightScheme cma_default_weights(std::size_t lambda) {
    if (lambda < 2)
        throw std::invalid_argument("cma_default_weights: lambda must be >= 2");
    const std::size_t mu = lambda / 2;
    std::vector<double> w(lambda, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < mu; ++i) {
        w[i] = std::log((static_cast<double>(lambda) + 1.0) / 2.0) -
               std::log(static_cast<double>(i) + 1.0);
        total += w[i];
    }
    for (std::size_t i = 0; i < mu; ++i) w[i] /= total;
    return WeightScheme(std::move(w));
}

/// Strategy constants for one (dimension, weight scheme) pair.
struct CmaParameters {
    std::size_t dimension;
    std::size_t lambda;
    WeightScheme scheme;
    double mu_eff;
    double c_sigma, d_sigma, c_c, c1, c_mu, chi_n;

    CmaParameters(std::size_t dimension_, WeightScheme scheme_)
        : dimension(dimension_), lambda(scheme_.size()), scheme(std::move(scheme_)),
          mu_eff(0), c_sigma(0), d_sigma(0), c_c(0), c1(0), c_mu(0), chi_n(0) {
        if (dimension == 0)
            throw std::invalid_argument("CmaParameters: dimension must be positive");
        if (lambda < 2)
            throw std::invalid_argument("CmaParameters: lambda must be >= 2");
        const double d = static_cast<double>(dimension);
        double sum = 0.0, sum_sq = 0.0;
        for (double w : scheme.weights) {
            sum += w;
            sum_sq += w * w;
        }
        if (sum_sq == 0.0)
            throw std::invalid_argument("CmaParameters: weights are all zero");
        mu_eff = sum * sum / sum_sq;
        c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0);
        d_sigma = 1.0 +
                  2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) +
                  c_sigma;
        c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d);
        c1 = 2.0 / ((d + 1.3) * (d + 1.3) + mu_eff);
        c_mu = std::min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) /
                                      ((d + 2.0) * (d + 2.0) + mu_eff));
        chi_n = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));
    }

    static CmaParameters defaults(std::size_t dimension) {
        return CmaParameters(dimension, cma_default_weights(default_lambda(dimension)));
    }
};

/// Full sampler state. The eigenfactorization of C is refreshed on every
/// update and reused by ask(); eigenvalues must stay strictly positive.
struct CmaState {
    CmaParameters params;
    Eigen::VectorXd mean;
    double sigma;
    Eigen::MatrixXd cov;
    Eigen::VectorXd path_sigma;
    Eigen::VectorXd path_c;
    std::size_t generation;
    Eigen::MatrixXd sqrt_cov;     // C^{1/2}, symmetric
    Eigen::MatrixXd inv_sqrt_cov; // C^{-1/2}, symmetric
    double min_eigenvalue;
};

namespace detail {

inline void refresh_factorization(CmaState& s) {
    s.cov = 0.5 * (s.cov + s.cov.transpose()).eval(); // keep symmetric
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.cov);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("cmaes: covariance eigendecomposition failed");
    const Eigen::VectorXd& values = eig.eigenvalues();
    s.min_eigenvalue = values.minCoeff();
    if (!(s.min_eigenvalue > 0.0) || !std::isfinite(values.maxCoeff()))
        throw std::runtime_error(
            "cmaes: covariance lost positive definiteness (numerical degeneracy)");
    const Eigen::MatrixXd& basis = eig.eigenvectors();
    s.sqrt_cov = basis * values.cwiseSqrt().asDiagonal() * basis.transpose();
    s.inv_sqrt_cov = basis * values.cwiseSqrt().cwiseInverse().asDiagonal() *
                     basis.transpose();
}

} // namespace detail

inline CmaState make_cma_state(CmaParameters params, std::span<const double> m0,
                               double sigma0) {
    if (m0.size() != params.dimension)
        throw std::invalid_argument("make_cma_state: m0 has wrong dimension");
    if (!(sigma0 > 0.0))
        throw std::invalid_argument("make_cma_state: sigma0 must be positive");
    const auto d = static_cast<Eigen::Index>(params.dimension);
    CmaState s{std::move(params),
               Eigen::Map<const Eigen::VectorXd>(m0.data(), d),
               sigma0,
               Eigen::MatrixXd::Identity(d, d),
               Eigen::VectorXd::Zero(d),
               Eigen::VectorXd::Zero(d),
               0,
               Eigen::MatrixXd(),
               Eigen::MatrixXd(),
               0.0};
    detail::refresh_factorization(s);
    return s;
}

/// lambda samples m + sigma * C^{1/2} z with z ~ N(0, I).
inline std::vector<std::vector<double>> ask(const CmaState& state, RngStream& rng) {
    const auto d = static_cast<Eigen::Index>(state.params.dimension);
    std::vector<std::vector<double>> population;
    population.reserve(state.params.lambda);
    Eigen::VectorXd z(d);
    for (std::size_t i = 0; i < state.params.lambda; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
        const Eigen::VectorXd x = state.mean + state.sigma * (state.sqrt_cov * z);
        population.emplace_back(x.data(), x.data() + d);
    }
    return population;
}

/// One CMA-ES update from a weighted population. Weights may be tie-averaged;
/// only their total mass (normally 1) matters to the mean shift.
inline CmaState tell(CmaState state, const std::vector<std::vector<double>>& population,
                     std::span<const double> weights) {
    const CmaParameters& p = state.params;
    if (population.size() != p.lambda || weights.size() != p.lambda)
        throw std::invalid_argument("tell: population/weights must have lambda entries");
    const auto d = static_cast<Eigen::Index>(p.dimension);

    std::vector<Eigen::VectorXd> y(p.lambda);
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < p.lambda; ++i) {
        if (population[i].size() != p.dimension)
            throw std::invalid_argument("tell: population member has wrong dimension");
        const Eigen::Map<const Eigen::VectorXd> x(population[i].data(), d);
        y[i] = (x - state.mean) / state.sigma;
        y_w += weights[i] * y[i];
    }

    state.mean += state.sigma * y_w;

    state.path_sigma = (1.0 - p.c_sigma) * state.path_sigma +
                       std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff) *
                           (state.inv_sqrt_cov * y_w);
    const double ps_norm = state.path_sigma.norm();
    state.sigma *= std::exp((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0));
    if (!(state.sigma > 0.0) || !std::isfinite(state.sigma))
        throw std::runtime_error("cmaes: step size degenerated");

    const double gen1 = static_cast<double>(state.generation) + 1.0;
    const bool h_sigma =
        ps_norm / std::sqrt(1.0 - std::pow(1.0 - p.c_sigma, 2.0 * gen1)) <
        (1.4 + 2.0 / (static_cast<double>(p.dimension) + 1.0)) * p.chi_n;

    state.path_c = (1.0 - p.c_c) * state.path_c +
                   (h_sigma ? std::sqrt(p.c_c * (2.0 - p.c_c) * p.mu_eff) : 0.0) * y_w;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i = 0; i < p.lambda; ++i)
        if (weights[i] != 0.0) rank_mu += weights[i] * (y[i] * y[i].transpose());

    const double c1_correction = h_sigma ? 0.0 : p.c_c * (2.0 - p.c_c);
    state.cov = (1.0 - p.c1 - p.c_mu) * state.cov +
                p.c1 * (state.path_c * state.path_c.transpose() +
                        c1_correction * state.cov) +
                p.c_mu * rank_mu;

    ++state.generation;
    detail::refresh_factorization(state);
    return state;
}

/// Which noise-handling rule turns K samples per point into rank keys.
struct NoiseHandler {
    Method method;
    std::size_t k;

    NoiseHandler(Method m, std::size_t k_) : method(m), k(k_) {
        if (k == 0) throw std::invalid_argument("NoiseHandler: K must be >= 1");
    }
};

/// Keys and tie-aware weights for one population; lambda * K evaluations.
struct WeightedEvaluation {
    std::vector<double> keys; // ranking key per point: mean, R score, or median
    std::vector<double> weights;
    std::size_t f_calls;
};

template <typename Problem>
WeightedEvaluation evaluate_and_weight(const Problem& problem,
                                       const std::vector<std::vector<double>>& population,
                                       const NoiseHandler& handler,
                                       const WeightScheme& scheme, RngStream& rng) {
    const std::size_t lambda = population.size();
    if (scheme.size() != lambda)
        throw std::invalid_argument("evaluate_and_weight: scheme size != lambda");
    std::vector<std::vector<double>> samples(lambda, std::vector<double>(handler.k));
    for (std::size_t i = 0; i < lambda; ++i)
        for (std::size_t k = 0; k < handler.k; ++k)
            samples[i][k] = problem.evaluate(population[i], rng);

    WeightedEvaluation out;
    out.f_calls = lambda * handler.k;
    out.keys.resize(lambda);
    switch (handler.method) {
        case Method::Average:
            for (std::size_t i = 0; i < lambda; ++i) {
                double s = 0.0;
                for (double v : samples[i]) s += v;
                out.keys[i] = s / static_cast<double>(handler.k);
            }
            break;
        case Method::SignAverage: {
            const auto r = scores(sign_matrix_from_samples(samples));
            for (std::size_t i = 0; i < lambda; ++i)
                out.keys[i] = static_cast<double>(r[i]);
            break;
        }
        case Method::Median:
            for (std::size_t i = 0; i < lambda; ++i)
                out.keys[i] = sample_median(samples[i]);
            break;
    }
    out.weights = tie_aware_weights(out.keys, scheme);
    return out;
}

/// One iteration's log row.
struct TrialRecord {
    std::size_t t;      // 1-based iteration index
    std::size_t evals;  // cumulative f calls, t * lambda * K
    double tau_b;       // rank agreement of keys vs ground truth (NaN if undefined)
    double f_delta;     // ground truth at the updated mean
    double sigma;       // step size after the update
};

struct RunResult {
    std::vector<TrialRecord> records;
    std::string termination; // empty when all iterations completed
};

/// Full campaign: iterate ask / evaluate_and_weight / tell, recording per
/// iteration the Tau-b between rank keys and ground-truth values, the ground
/// truth at the mean, and the step size. Numerical degeneracy ends the run
/// early and is recorded in `termination`.
template <typename Problem>
RunResult run(const Problem& problem, const NoiseHandler& handler,
              const WeightScheme& scheme, std::size_t iterations,
              std::span<const double> m0, double sigma0, RngStream& rng) {
    if (iterations == 0)
        throw std::invalid_argument("run: iterations must be >= 1");
    RunResult result;
    CmaState state =
        make_cma_state(CmaParameters(m0.size(), scheme), m0, sigma0);
    std::size_t evals = 0;
    for (std::size_t t = 1; t <= iterations; ++t) {
        try {
            const auto population = ask(state, rng);
            const auto ev = evaluate_and_weight(problem, population, handler, scheme, rng);
            evals += ev.f_calls;

            std::vector<double> gt(population.size());
            for (std::size_t i = 0; i < population.size(); ++i)
                gt[i] = problem.ground_truth(population[i]);
            double tau = std::numeric_limits<double>::quiet_NaN();
            try {
                tau = kendall_tau_b(ev.keys, gt);
            } catch (const std::domain_error&) {
                // all keys or all ground truths tied; leave NaN
            }

            state = tell(std::move(state), population, ev.weights);
            const std::vector<double> mean_now(state.mean.data(),
                                               state.mean.data() + state.mean.size());
            result.records.push_back(
                {t, evals, tau, problem.ground_truth(mean_now), state.sigma});
        } catch (const std::runtime_error& degeneracy) {
            result.termination = degeneracy.what();
            break;
        }
    }
    return result;
}

} // namespace stablecmp

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

/// \file theory.hpp
/// Analytic predictions for the comparators: the stable law of a difference
/// of two K-sample averages, the exact OEP it implies for explicit
/// averaging, the expected sign of a single paired difference, the
/// exponential OEP lower bound for sign averaging with its sufficient sample
/// size, and the large-K normal approximations.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>

#include "stablecmp/comparators.hpp"
#include "stablecmp/problems.hpp"
#include "stablecmp/stable.hpp"

namespace stablecmp {

/// Per-point and pair-combined stable parameters for the difference of two
/// K-sample averages:
///   gamma'(x) = ( sum_m |gamma_m g_m(x)|^a )^(1/a)
///   beta'(x)  = sum_m beta_m sign(g_m(x)) |g_m(x) gamma_m|^a / gamma'(x)^a
///   delta'(x) = -(2/pi) sum_m beta_m gamma_m g_m(x) log|g_m(x)|,  0 log 0 := 0
/// and beta'' / gamma'' / delta'' combining the two points.
struct PairDerivedParams {
    double beta1, beta2;
    double gamma1, gamma2;
    double delta1, delta2;
    double beta_pp;
    double gamma_pp;
    double delta_pp;
};

namespace detail {

struct PointDerived {
    double beta_p, gamma_p, gamma_p_alpha, delta_p;
};

inline PointDerived derive_point(const NoisyProblem& problem,
                                 std::span<const double> x) {
    const double alpha = problem.common_alpha();
    double gamma_pow = 0.0, beta_num = 0.0, delta_p = 0.0;
    for (const NoiseChannel& c : problem.channels()) {
        const double g = c.g(x);
        if (g == 0.0) continue; // vanishing coefficient contributes nothing
        const double w = std::pow(std::abs(g) * c.params.gamma, alpha);
        gamma_pow += w;
        beta_num += c.params.beta * (g > 0.0 ? 1.0 : -1.0) * w;
        delta_p += c.params.beta * c.params.gamma * g * std::log(std::abs(g));
    }
    if (gamma_pow == 0.0)
        throw std::domain_error("derive_pair_params: all noise coefficients vanish "
                                "at a query point (degenerate noise)");
    return {beta_num / gamma_pow, std::pow(gamma_pow, 1.0 / alpha), gamma_pow,
            -(2.0 / std::numbers::pi) * delta_p};
}

} // namespace detail

inline PairDerivedParams derive_pair_params(const NoisyProblem& problem,
                                            std::span<const double> x1,
                                            std::span<const double> x2) {
    const double alpha = problem.common_alpha();
    const detail::PointDerived a = detail::derive_point(problem, x1);
    const detail::PointDerived b = detail::derive_point(problem, x2);
    PairDerivedParams out{};
    out.beta1 = a.beta_p;
    out.beta2 = b.beta_p;
    out.gamma1 = a.gamma_p;
    out.gamma2 = b.gamma_p;
    out.delta1 = a.delta_p;
    out.delta2 = b.delta_p;
    out.beta_pp = (a.beta_p * a.gamma_p_alpha - b.beta_p * b.gamma_p_alpha) /
                  (a.gamma_p_alpha + b.gamma_p_alpha);
    out.gamma_pp = std::pow(a.gamma_p_alpha + b.gamma_p_alpha, 1.0 / alpha);
    out.delta_pp = a.delta_p - b.delta_p;
    return out;
}

/// Exact OEP of the explicit-averaging comparator with sample size K.
///
/// Returns 0 when the ground-truth order is a tie. With all channel skews
/// zero the closed form phi_a(K^(1-1/a) |df| / gamma'') applies; otherwise
/// the probability is evaluated by Monte Carlo (10^6 draws on a fixed
/// internal stream, so the result is still deterministic).
inline double oep_average_analytic(const NoisyProblem& problem,
                                   std::span<const double> x1,
                                   std::span<const double> x2, std::size_t k) {
    if (k == 0) throw std::invalid_argument("oep_average_analytic: K must be >= 1");
    const double diff = problem.ground_truth(x1) - problem.ground_truth(x2);
    const int eta = sign_of(diff);
    if (eta == 0) return 0.0;
    const double alpha = problem.common_alpha();
    const PairDerivedParams d = derive_pair_params(problem, x1, x2);
    const double bound = std::pow(static_cast<double>(k), 1.0 - 1.0 / alpha) *
                         std::abs(diff) / d.gamma_pp;
    if (problem.symmetric_noise())
        return cdf_symmetric_standard(alpha, bound);
    double loc = 0.0;
    if (alpha == 1.0)
        loc = d.delta_pp / d.gamma_pp +
              (2.0 / std::numbers::pi) * d.beta_pp * std::log(d.gamma_pp);
    const StableParams eps_ave(alpha, d.beta_pp, 1.0, loc);
    const StableParams flipped =
        linear_transform(eps_ave, -static_cast<double>(eta), 0.0);
    RngStream mc(0x713b6f3350a1ed51ULL); // fixed seed: documented MC route
    return mc_probability_below(flipped, bound, 1'000'000, mc);
}

/// Monte-Carlo estimate of E[sign(f(x1; e1) - f(x2; e2))] with its standard
/// error; equals Pr[f(x1) > f(x2)] - Pr[f(x1) < f(x2)].
template <typename Problem>
ProbabilityEstimate expected_sign(const Problem& problem, std::span<const double> x1,
                                  std::span<const double> x2, std::size_t n,
                                  RngStream& rng) {
    if (n == 0) throw std::invalid_argument("expected_sign: n must be >= 1");
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f1 = problem.evaluate(x1, rng);
        const double f2 = problem.evaluate(x2, rng);
        const double s = static_cast<double>(sign_of(f1 - f2));
        sum += s;
        sum_sq += s * s;
    }
    const double nd = static_cast<double>(n);
    const double m = sum / nd;
    const double var = n > 1 ? std::max(0.0, (sum_sq - nd * m * m) / (nd - 1.0)) : 0.0;
    return {m, std::sqrt(var / nd)};
}

/// 1 - exp(-K e^2 / 2): the sign-averaging OEP lower bound.
inline double hoeffding_lower_bound(double expected_sign_value, std::size_t k) {
    if (std::abs(expected_sign_value) > 1.0)
        throw std::invalid_argument("hoeffding_lower_bound: |e| must be <= 1");
    if (k == 0) throw std::invalid_argument("hoeffding_lower_bound: K must be >= 1");
    const double e2 = expected_sign_value * expected_sign_value;
    return 1.0 - std::exp(-static_cast<double>(k) * e2 / 2.0);
}

/// Smallest K with (2/e^2) log(1/(1-p)) <= K, guaranteeing
/// hoeffding_lower_bound(e, K) >= p.
inline std::size_t sufficient_k(double expected_sign_value, double p) {
    if (expected_sign_value == 0.0)
        throw std::domain_error("sufficient_k: no finite K for a zero expected sign");
    if (std::abs(expected_sign_value) > 1.0)
        throw std::invalid_argument("sufficient_k: |e| must be <= 1");
    if (!(p > 0.0) || !(p < 1.0))
        throw std::invalid_argument("sufficient_k: p must be in (0, 1)");
    const double e2 = expected_sign_value * expected_sign_value;
    const double k_real = (2.0 / e2) * std::log(1.0 / (1.0 - p));
    const double k_ceil = std::ceil(k_real);
    return static_cast<std::size_t>(std::max(1.0, k_ceil));
}

/// Large-K normal approximation Phi( sqrt(K) |mu| / sigma ) shared by all
/// three comparators; the caller supplies the (mu, sigma) pair of the method
/// (mean difference / sign expectation / median difference).
inline double asymptotic_oep(double mu, double sigma, std::size_t k) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("asymptotic_oep: sigma must be positive");
    if (k == 0) throw std::invalid_argument("asymptotic_oep: K must be >= 1");
    return standard_normal_cdf(std::sqrt(static_cast<double>(k)) * std::abs(mu) /
                               sigma);
}

} // namespace stablecmp

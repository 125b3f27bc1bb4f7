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

/// \file validation.hpp
/// The self-check suite behind `validate`: stable-algebra closure, CDF
/// agreement, the averaging OEP law, the sign-averaging bound, the weighting
/// identities, and the Tau-b oracle. All seeds are fixed, so a fresh checkout
/// either passes deterministically or a regression is real.
///
/// The two hooks exist so the suite can be pointed at a deliberately broken
/// implementation and be seen to fail (and, by default, at the real one).

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stablecmp/comparators.hpp"
#include "stablecmp/metrics.hpp"
#include "stablecmp/problems.hpp"
#include "stablecmp/ranking.hpp"
#include "stablecmp/stable.hpp"
#include "stablecmp/theory.hpp"

namespace stablecmp {

struct ValidationHooks {
    std::function<double(double, double)> symmetric_cdf =
        [](double alpha, double x) { return cdf_symmetric_standard(alpha, x); };
    std::function<std::vector<double>(std::span<const double>, const WeightScheme&)>
        tie_weights = [](std::span<const double> keys, const WeightScheme& scheme) {
            return tie_aware_weights(keys, scheme);
        };
};

/// One named check: pass iff measured <= threshold.
struct CheckResult {
    std::string name;
    bool pass;
    double measured;
    double threshold;
    std::string detail;
};

namespace detail_validate {

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]);
}

inline double ecdf_sorted(const std::vector<double>& sorted, double x) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) /
           static_cast<double>(sorted.size());
}

// Max probability gap |F2(Q1(p)) - p| over p = 0.01 .. 0.99.
inline double sample_gap(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double worst = 0.0;
    for (int i = 1; i <= 99; ++i) {
        const double p = i / 100.0;
        worst = std::max(worst, std::abs(ecdf_sorted(b, quantile_sorted(a, p)) - p));
    }
    return worst;
}

template <typename Cdf>
inline double theoretical_gap(std::vector<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    double worst = 0.0;
    for (int i = 1; i <= 99; ++i) {
        const double p = i / 100.0;
        worst = std::max(worst, std::abs(cdf(quantile_sorted(sample, p)) - p));
    }
    return worst;
}

inline std::vector<double> draw(const StableParams& p, std::size_t n, RngStream& rng) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample(p, rng);
    return xs;
}

// Literal pair-counting Tau-b, independent of metrics.hpp's formula route.
inline double tau_b_pair_counting(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    long long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            ++total;
            const bool tx = xs[i] == xs[j];
            const bool ty = ys[i] == ys[j];
            if (tx) ++tied_x;
            if (ty) ++tied_y;
            if (tx || ty) continue;
            if ((xs[i] < xs[j]) == (ys[i] < ys[j])) ++concordant;
            else ++discordant;
        }
    if (total == tied_x || total == tied_y)
        throw std::domain_error("tau_b oracle: degenerate");
    return static_cast<double>(concordant - discordant) /
           std::sqrt(static_cast<double>(total - tied_x) *
                     static_cast<double>(total - tied_y));
}

} // namespace detail_validate

/// Runs every named check and reports the worst statistic of each.
inline std::vector<CheckResult> run_validation(const ValidationHooks& hooks = {}) {
    namespace dv = detail_validate;
    std::vector<CheckResult> results;
    const std::size_t n_sample = 200'000;

    { // Closed-form reductions of the sampler.
        RngStream rng(0xA11CE001);
        auto xs = dv::draw(StableParams(2.0, 0.0, 1.3, 0.5), n_sample, rng);
        const double gap = dv::theoretical_gap(xs, [](double x) {
            return 0.5 * std::erfc(-(x - 0.5) / (1.3 * 2.0));
        });
        results.push_back({"sampler_normal_reduction", gap <= 0.01, gap, 0.01,
                           "alpha=2 sample vs Normal(delta, 2 gamma^2) CDF"});
    }
    {
        RngStream rng(0xA11CE002);
        auto xs = dv::draw(StableParams(1.0, 0.0, 2.0, -1.0), n_sample, rng);
        const double gap = dv::theoretical_gap(xs, [](double x) {
            return 0.5 + std::atan((x + 1.0) / 2.0) / std::numbers::pi;
        });
        results.push_back({"sampler_cauchy_reduction", gap <= 0.01, gap, 0.01,
                           "alpha=1 sample vs Cauchy CDF"});
    }
    {
        RngStream rng(0xA11CE003);
        auto xs = dv::draw(StableParams(0.5, 1.0, 1.0, 0.0), n_sample, rng);
        const double gap = dv::theoretical_gap(xs, [](double x) {
            return x <= 0.0 ? 0.0 : std::erfc(std::sqrt(0.5 / x));
        });
        results.push_back({"sampler_levy_reduction", gap <= 0.01, gap, 0.01,
                           "alpha=1/2, beta=1 sample vs Levy CDF"});
    }

    { // Parameter algebra closure.
        RngStream master(0xA11CE004);
        double worst = 0.0;
        struct Case { double alpha, beta, gamma, delta, a, b; };
        const Case cases[] = {{2.0, 0.0, 1.0, 0.0, -2.0, 1.0},
                              {1.5, 0.7, 2.0, 1.0, 0.5, -1.0},
                              {1.0, 0.5, 1.0, 0.0, 2.0, 0.0},
                              {0.5, 1.0, 1.0, 2.0, 3.0, -1.0},
                              {0.8, -0.6, 1.5, 0.0, -0.4, 0.3}};
        std::uint64_t ctr = 0;
        for (const Case& c : cases) {
            const StableParams p(c.alpha, c.beta, c.gamma, c.delta);
            const StableParams q = linear_transform(p, c.a, c.b);
            RngStream r1 = master.substream(ctr++), r2 = master.substream(ctr++);
            std::vector<double> lhs(100'000), rhs(100'000);
            for (std::size_t i = 0; i < lhs.size(); ++i) {
                lhs[i] = c.a * sample(p, r1) + c.b;
                rhs[i] = sample(q, r2);
            }
            worst = std::max(worst, dv::sample_gap(lhs, rhs));
        }
        results.push_back({"linear_transform_closure", worst <= 0.02, worst, 0.02,
                           "a*X+b vs sampling the transformed parameters"});
    }
    {
        RngStream master(0xA11CE005);
        double worst = 0.0;
        const std::pair<StableParams, StableParams> cases[] = {
            {StableParams(2.0, 0.0, 1.0, 0.0), StableParams(2.0, 0.0, 2.0, 1.0)},
            {StableParams(1.5, 1.0, 1.0, 0.0), StableParams(1.5, -0.5, 0.5, -1.0)},
            {StableParams(1.0, 0.6, 1.0, 0.5), StableParams(1.0, -0.2, 2.0, 0.0)},
            {StableParams(0.5, 1.0, 1.0, 2.0), StableParams(0.5, 1.0, 3.0, 5.0)}};
        std::uint64_t ctr = 0;
        for (const auto& [p1, p2] : cases) {
            const StableParams s = sum_params(p1, p2);
            RngStream r1 = master.substream(ctr++), r2 = master.substream(ctr++);
            std::vector<double> lhs(100'000), rhs(100'000);
            for (std::size_t i = 0; i < lhs.size(); ++i) {
                lhs[i] = sample(p1, r1) + sample(p2, r1);
                rhs[i] = sample(s, r2);
            }
            worst = std::max(worst, dv::sample_gap(lhs, rhs));
        }
        results.push_back({"sum_closure", worst <= 0.02, worst, 0.02,
                           "X1+X2 vs sampling the summed parameters"});
    }

    { // CDF evaluation vs Monte Carlo, through the hook.
        RngStream master(0xA11CE006);
        double worst = 0.0;
        std::uint64_t ctr = 0;
        for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
            const StableParams p(alpha, 0.0, 1.0, 0.0);
            for (double x : {-1.5, 0.4, 2.5}) {
                RngStream r = master.substream(ctr++);
                const double mc = mc_probability_below(p, x, n_sample, r);
                worst = std::max(worst, std::abs(hooks.symmetric_cdf(alpha, x) - mc));
            }
        }
        results.push_back({"cdf_vs_monte_carlo", worst <= 0.006, worst, 0.006,
                           "phi_alpha vs sampled probability below"});
    }

    { // Averaging OEP: empirical comparator vs the closed-form law.
        RngStream master(0xA11CE007);
        double worst = 0.0;
        std::uint64_t ctr = 0;
        const std::vector<double> x1{0.5, 0.5}, x2{1.0, 1.0};
        for (int which = 0; which < 2; ++which) {
            for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
                const NoisyProblem problem =
                    which == 0 ? make_additive_ellipsoid(
                                     2, StableParams(alpha, 0.0, 1.0, 0.0))
                               : make_linear_noise_ellipsoid(2, alpha, 0.0, -1.0, 1.0);
                const double diff =
                    problem.ground_truth(x1) - problem.ground_truth(x2);
                const PairDerivedParams d = derive_pair_params(problem, x1, x2);
                for (std::size_t k : {1u, 10u}) {
                    const double bound =
                        std::pow(static_cast<double>(k), 1.0 - 1.0 / alpha) *
                        std::abs(diff) / d.gamma_pp;
                    const double analytic = hooks.symmetric_cdf(alpha, bound);
                    RngStream r = master.substream(ctr++);
                    const ProbabilityEstimate emp = estimate_oep(
                        ComparatorKind(Method::Average, k), problem, x1, x2, 20'000,
                        SignEstimate(sign_of(diff)), r);
                    worst = std::max(worst, std::abs(emp.value - analytic));
                }
            }
        }
        results.push_back({"averaging_oep_agreement", worst <= 0.015, worst, 0.015,
                           "empirical averaging OEP vs phi_alpha closed form"});
    }

    { // Averaging K-trends on the empirical side.
        RngStream master(0xA11CE008);
        const NoisyProblem mk_cases[] = {
            make_additive_ellipsoid(2, StableParams(2.0, 0.0, 1.0, 0.0)),
            make_additive_ellipsoid(2, StableParams(1.0, 0.0, 1.0, 0.0)),
            make_additive_ellipsoid(2, StableParams(0.5, 0.0, 1.0, 0.0))};
        const std::vector<double> x1{0.0, 0.0}, x2{1.0, 0.0};
        double margin = 1.0; // min satisfied slack; pass iff > 0
        std::uint64_t ctr = 0;
        for (int i = 0; i < 3; ++i) {
            RngStream ra = master.substream(ctr++), rb = master.substream(ctr++);
            const auto lo = estimate_oep(ComparatorKind(Method::Average, 1),
                                         mk_cases[i], x1, x2, 20'000,
                                         SignEstimate(-1), ra);
            const auto hi = estimate_oep(ComparatorKind(Method::Average, 10),
                                         mk_cases[i], x1, x2, 20'000,
                                         SignEstimate(-1), rb);
            const double joint = 3.0 * std::hypot(lo.std_error, hi.std_error);
            if (i == 0) margin = std::min(margin, hi.value - lo.value - joint);
            if (i == 1) margin = std::min(margin, joint - std::abs(hi.value - lo.value));
            if (i == 2) margin = std::min(margin, lo.value - hi.value - joint);
        }
        results.push_back({"averaging_k_trends", margin > 0.0, -margin, 0.0,
                           "OEP rises (alpha=2), is flat (alpha=1), falls (alpha=0.5) in K"});
    }

    { // Exponential lower bound for sign averaging.
        RngStream master(0xA11CE009);
        double worst = -1.0; // max bound violation
        std::uint64_t ctr = 0;
        for (double alpha : {1.0, 0.5}) {
            const NoisyProblem problem =
                make_additive_ellipsoid(2, StableParams(alpha, 0.0, 1.0, 0.0));
            const std::vector<double> x1{0.0, 0.0}, x2{1.0, 0.0};
            RngStream er = master.substream(ctr++);
            const ProbabilityEstimate e = expected_sign(problem, x1, x2, 200'000, er);
            for (std::size_t k : {1u, 5u, 20u, 60u}) {
                RngStream r = master.substream(ctr++);
                const auto est =
                    estimate_oep(ComparatorKind(Method::SignAverage, k), problem, x1,
                                 x2, 10'000, SignEstimate(-1), r);
                const double bound = hoeffding_lower_bound(e.value, k);
                worst = std::max(worst, bound - 3.0 * est.std_error - est.value);
            }
        }
        results.push_back({"sign_averaging_bound", worst <= 0.0, worst, 0.0,
                           "sign-averaging OEP >= 1 - exp(-K e^2 / 2) - 3 se"});
    }

    { // The sufficient sample size really suffices.
        double worst = 0.0;
        for (double e : {0.1, 0.5, 1.0})
            for (double p : {0.5, 0.9, 0.99})
                worst = std::max(worst,
                                 p - hoeffding_lower_bound(e, sufficient_k(e, p)));
        results.push_back({"sufficient_k_guarantee", worst <= 0.0, worst, 0.0,
                           "bound at the sufficient K reaches the target p"});
    }

    { // Weighting identities, through the hook.
        RngStream rng(0xA11CE00A);
        double worst = 0.0;
        for (int rep = 0; rep < 2000; ++rep) {
            const std::size_t lambda = 2 + static_cast<std::size_t>(rng.uniform(0, 19));
            std::vector<double> w(lambda);
            for (auto& x : w) x = rng.uniform(0, 1);
            std::sort(w.rbegin(), w.rend());
            const WeightScheme scheme(w);
            std::vector<double> keys(lambda);
            for (auto& x : keys) x = std::floor(rng.uniform(0, 6));
            const auto bars = hooks.tie_weights(keys, scheme);
            const double total = std::accumulate(bars.begin(), bars.end(), 0.0);
            worst = std::max(worst, std::abs(total - scheme.sum()) /
                                        std::max(1.0, scheme.sum()));
            for (std::size_t i = 0; i < lambda; ++i)
                for (std::size_t j = i + 1; j < lambda; ++j)
                    if (keys[i] == keys[j])
                        worst = std::max(worst, std::abs(bars[i] - bars[j]));
            // distinct keys must reproduce conventional rank weights
            std::vector<double> distinct(lambda);
            for (std::size_t i = 0; i < lambda; ++i)
                distinct[i] = static_cast<double>((i * 7919) % lambda) +
                              0.001 * static_cast<double>(i);
            const auto conv = hooks.tie_weights(distinct, scheme);
            std::vector<std::size_t> order(lambda);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return distinct[a] < distinct[b];
            });
            for (std::size_t rank = 0; rank < lambda; ++rank)
                worst = std::max(worst,
                                 std::abs(conv[order[rank]] - scheme.weights[rank]));
        }
        results.push_back({"weighting_suite", worst <= 1e-12, worst, 1e-12,
                           "weight-sum preservation, tie equality, rank agreement"});
    }

    { // Tau-b vs literal pair counting.
        RngStream rng(0xA11CE00B);
        double worst = 0.0;
        for (int rep = 0; rep < 1000; ++rep) {
            std::vector<double> xs(20), ys(20);
            for (auto& x : xs) x = std::floor(rng.uniform(0, 8));
            for (auto& y : ys) y = std::floor(rng.uniform(0, 8));
            try {
                const double oracle = detail_validate::tau_b_pair_counting(xs, ys);
                worst = std::max(worst, std::abs(kendall_tau_b(xs, ys) - oracle));
            } catch (const std::domain_error&) {
                // degenerate draw; both routes reject it
            }
        }
        results.push_back({"tau_b_oracle", worst <= 1e-12, worst, 1e-12,
                           "tau-b formula vs exhaustive pair counting"});
    }

    return results;
}

inline nlohmann::json validation_report(const std::vector<CheckResult>& checks) {
    nlohmann::json out;
    out["checks"] = nlohmann::json::array();
    bool all = true;
    for (const CheckResult& c : checks) {
        nlohmann::json j;
        j["name"] = c.name;
        j["pass"] = c.pass;
        j["measured"] = c.measured;
        j["threshold"] = c.threshold;
        j["detail"] = c.detail;
        out["checks"].push_back(std::move(j));
        all = all && c.pass;
    }
    out["all_pass"] = all;
    return out;
}

} // namespace stablecmp

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

/// \file comparators.hpp
/// Pairwise order estimators over noisy objectives: explicit averaging, sign
/// averaging, and the sample-median comparator, plus a Monte-Carlo estimator
/// of the order-estimation probability (OEP).
///
/// Every comparison draws 2K fresh evaluations, interleaved per index k:
/// f(x1; e_{1,k}) then f(x2; e_{2,k}). With K = 1 and a shared stream the
/// three comparators are therefore bitwise identical.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "stablecmp/rng.hpp"

namespace stablecmp {

/// sign(v) with sign(0) = 0; ties are legal comparator outputs.
inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

/// Output of any pairwise order estimator: -1, 0, or +1.
struct SignEstimate {
    int value;

    explicit SignEstimate(int v) : value(v) {
        if (v < -1 || v > 1)
            throw std::invalid_argument("SignEstimate: value must be -1, 0, or 1");
    }
    friend bool operator==(SignEstimate, SignEstimate) = default;
};

enum class Method { Average, SignAverage, Median };

/// Which comparator to run and with how many paired samples.
struct ComparatorKind {
    Method method;
    std::size_t k;

    ComparatorKind(Method m, std::size_t k_) : method(m), k(k_) {
        if (k == 0) throw std::invalid_argument("ComparatorKind: K must be >= 1");
    }
};

namespace detail {

template <typename Problem>
std::vector<double> paired_differences(const Problem& problem,
                                       std::span<const double> x1,
                                       std::span<const double> x2, std::size_t k,
                                       RngStream& rng) {
    std::vector<double> diffs(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double f1 = problem.evaluate(x1, rng);
        const double f2 = problem.evaluate(x2, rng);
        diffs[i] = f1 - f2;
    }
    return diffs;
}

} // namespace detail

/// sign( mean_k f(x1) - mean_k f(x2) ).
template <typename Problem>
SignEstimate compare_average(const Problem& problem, std::span<const double> x1,
                             std::span<const double> x2, std::size_t k,
                             RngStream& rng) {
    if (k == 0) throw std::invalid_argument("compare_average: K must be >= 1");
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        s1 += problem.evaluate(x1, rng);
        s2 += problem.evaluate(x2, rng);
    }
    const double kd = static_cast<double>(k);
    return SignEstimate(sign_of(s1 / kd - s2 / kd));
}

/// sign( mean_k sign(f(x1; e_{1,k}) - f(x2; e_{2,k})) ), pairing per index k.
template <typename Problem>
SignEstimate compare_sign_average(const Problem& problem, std::span<const double> x1,
                                  std::span<const double> x2, std::size_t k,
                                  RngStream& rng) {
    if (k == 0) throw std::invalid_argument("compare_sign_average: K must be >= 1");
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double f1 = problem.evaluate(x1, rng);
        const double f2 = problem.evaluate(x2, rng);
        sum += static_cast<double>(sign_of(f1 - f2));
    }
    return SignEstimate(sign_of(sum / static_cast<double>(k)));
}

/// Midpoint-convention sample median of K values.
inline double sample_median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("sample_median: empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2]
                      : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// sign( median_k (f(x1; e_{1,k}) - f(x2; e_{2,k})) ).
template <typename Problem>
SignEstimate compare_median(const Problem& problem, std::span<const double> x1,
                            std::span<const double> x2, std::size_t k,
                            RngStream& rng) {
    if (k == 0) throw std::invalid_argument("compare_median: K must be >= 1");
    return SignEstimate(
        sign_of(sample_median(detail::paired_differences(problem, x1, x2, k, rng))));
}

template <typename Problem>
SignEstimate run_comparator(ComparatorKind kind, const Problem& problem,
                            std::span<const double> x1, std::span<const double> x2,
                            RngStream& rng) {
    switch (kind.method) {
        case Method::Average: return compare_average(problem, x1, x2, kind.k, rng);
        case Method::SignAverage:
            return compare_sign_average(problem, x1, x2, kind.k, rng);
        case Method::Median: return compare_median(problem, x1, x2, kind.k, rng);
    }
    throw std::logic_error("run_comparator: unknown method");
}

/// A Monte-Carlo probability with its binomial standard error.
struct ProbabilityEstimate {
    double value;
    double std_error;
};

/// Fraction of independent comparator runs whose output equals the reference
/// sign. A comparator output of 0 against a nonzero reference is a miss; a
/// reference of 0 measures Pr[estimate = 0].
///
/// Trials run on substreams derived from one fresh nonce, so results do not
/// depend on whether trials execute serially or in parallel.
template <typename Problem>
ProbabilityEstimate estimate_oep(ComparatorKind kind, const Problem& problem,
                                 std::span<const double> x1,
                                 std::span<const double> x2, std::size_t trials,
                                 SignEstimate reference, RngStream& rng) {
    if (trials == 0) throw std::invalid_argument("estimate_oep: trials must be >= 1");
    const std::uint64_t nonce = rng.next_u64();
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        RngStream trial(derive_stream_seed(nonce, t));
        if (run_comparator(kind, problem, x1, x2, trial) == reference) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

} // namespace stablecmp

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stablecmp/problems.hpp"
#include "stablecmp/ranking.hpp"

using namespace stablecmp;
using Catch::Approx;

namespace {

// Counts evaluation calls; forwards to an inner problem.
struct CountingProblem {
    const NoisyProblem& inner;
    mutable std::size_t calls = 0;

    std::size_t dimension() const { return inner.dimension(); }
    double evaluate(std::span<const double> x, RngStream& rng) const {
        ++calls;
        return inner.evaluate(x, rng);
    }
    double ground_truth(std::span<const double> x) const {
        return inner.ground_truth(x);
    }
};

NoisyProblem quadratic_noiseless() {
    std::vector<NoiseChannel> ch;
    ch.push_back({[](std::span<const double>) { return 0.0; },
                  StableParams(1.0, 0.0, 1.0, 0.0)});
    return NoisyProblem(1, [](std::span<const double> x) { return x[0] * x[0]; },
                        std::move(ch));
}

std::vector<std::vector<double>> points(std::initializer_list<double> xs) {
    std::vector<std::vector<double>> p;
    for (double x : xs) p.push_back({x});
    return p;
}

} // namespace

TEST_CASE("noiseless population reproduces the exact comparison matrix", "[ranking]") {
    const NoisyProblem p = quadratic_noiseless();
    const auto pop = points({1.0, -2.0, 3.0, 0.5}); // f = 1, 4, 9, 0.25
    RngStream rng(1);
    const SignMatrix m = pairwise_sign_matrix(p, pop, 5, rng);
    const std::vector<double> f{1.0, 4.0, 9.0, 0.25};
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(m.at(i, i) == 0);
        for (std::size_t j = 0; j < 4; ++j) {
            if (i == j) continue;
            REQUIRE(m.at(i, j) == (f[i] < f[j] ? -1 : 1));
            REQUIRE(m.at(i, j) == -m.at(j, i));
        }
    }
}

TEST_CASE("lambda = 2 with K = 1 is the sign of one difference", "[ranking]") {
    const NoisyProblem p = make_additive_ellipsoid(2, StableParams(1, 0, 1, 0));
    const std::vector<std::vector<double>> pop{{0.0, 0.0}, {1.0, 0.0}};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        RngStream r1(seed), r2(seed);
        const SignMatrix m = pairwise_sign_matrix(p, pop, 1, r1);
        const double f0 = p.evaluate(pop[0], r2);
        const double f1 = p.evaluate(pop[1], r2);
        REQUIRE(m.at(0, 1) == sign_of(f0 - f1));
    }
}

TEST_CASE("sign-average scores are not necessarily transitive", "[ranking]") {
    // Look for a seed whose matrix contains a strict 3-cycle; the matrix is
    // reported as-is, the reduction to R handles it.
    const NoisyProblem p = make_additive_ellipsoid(2, StableParams(1, 0, 2, 0));
    const std::vector<std::vector<double>> pop{{0.30, 0}, {0.31, 0}, {0.32, 0}};
    bool found = false;
    for (std::uint64_t seed = 0; seed < 3000 && !found; ++seed) {
        RngStream rng(seed);
        const SignMatrix m = pairwise_sign_matrix(p, pop, 3, rng);
        const auto cyclic = [&](std::size_t a, std::size_t b, std::size_t c) {
            return m.at(a, b) < 0 && m.at(b, c) < 0 && m.at(c, a) < 0;
        };
        found = cyclic(0, 1, 2) || cyclic(2, 1, 0);
    }
    REQUIRE(found);
}

TEST_CASE("evaluation budget per pairing mode", "[ranking]") {
    const NoisyProblem inner = make_additive_ellipsoid(2, StableParams(1.5, 0, 1, 0));
    const std::vector<std::vector<double>> pop{
        {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {2.0, 0.0}};
    const std::size_t lambda = pop.size(), k = 7;
    {
        CountingProblem counted{inner};
        RngStream rng(4);
        pairwise_sign_matrix(counted, pop, k, rng, PairingMode::ReuseSamples);
        REQUIRE(counted.calls == lambda * k);
    }
    {
        CountingProblem counted{inner};
        RngStream rng(4);
        pairwise_sign_matrix(counted, pop, k, rng, PairingMode::IndependentPairs);
        REQUIRE(counted.calls == lambda * (lambda - 1) * k);
    }
}

TEST_CASE("scores count weakly-better points including self", "[ranking]") {
    SECTION("noiseless strict order gives ranks 1..lambda") {
        const NoisyProblem p = quadratic_noiseless();
        // f = 1, 0.25, 9, 4: ascending order is idx 1, 0, 3, 2.
        const auto pop = points({1.0, 0.5, 3.0, -2.0});
        RngStream rng(9);
        const auto r = scores(pairwise_sign_matrix(p, pop, 3, rng));
        REQUIRE(r[0] == 2);
        REQUIRE(r[1] == 1);
        REQUIRE(r[2] == 4);
        REQUIRE(r[3] == 3);
    }
    SECTION("all-zero matrix gives R_i = lambda") {
        const SignMatrix m(5);
        for (std::size_t r : scores(m)) REQUIRE(r == 5);
    }
    SECTION("singleton population") {
        const SignMatrix m(1);
        REQUIRE(scores(m) == std::vector<std::size_t>{1});
    }
}

TEST_CASE("tie-aware weights", "[ranking]") {
    SECTION("distinct keys reduce to conventional rank weights") {
        const WeightScheme scheme(std::vector<double>{0.5, 0.3, 0.2, 0.0});
        const std::vector<double> keys{3.0, 1.0, 7.0, 2.0}; // ranks 3, 1, 4, 2
        const auto w = tie_aware_weights(keys, scheme);
        REQUIRE(w[0] == Approx(0.2));
        REQUIRE(w[1] == Approx(0.5));
        REQUIRE(w[2] == Approx(0.0));
        REQUIRE(w[3] == Approx(0.3));
    }
    SECTION("all keys equal share the mean weight") {
        const WeightScheme scheme(std::vector<double>{0.6, 0.3, 0.1});
        const auto w = tie_aware_weights(std::vector<double>{5, 5, 5}, scheme);
        for (double wi : w) REQUIRE(wi == Approx(1.0 / 3.0));
    }
    SECTION("worked tie example") {
        const WeightScheme scheme(std::vector<double>{4, 3, 2, 1});
        const auto w = tie_aware_weights(std::vector<double>{0, 0, 5, 5}, scheme);
        REQUIRE(w[0] == Approx(3.5));
        REQUIRE(w[1] == Approx(3.5));
        REQUIRE(w[2] == Approx(1.5));
        REQUIRE(w[3] == Approx(1.5));
    }
    SECTION("length mismatch is rejected") {
        const WeightScheme scheme(std::vector<double>{1, 0});
        REQUIRE_THROWS_AS(tie_aware_weights(std::vector<double>{1, 2, 3}, scheme),
                          std::invalid_argument);
    }
    SECTION("weights must be non-increasing") {
        REQUIRE_THROWS_AS(WeightScheme(std::vector<double>{0.1, 0.5}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(WeightScheme(std::vector<double>{}), std::invalid_argument);
    }
}

TEST_CASE("weight-sum preservation and tie equality on random instances", "[ranking]") {
    RngStream rng(2025);
    for (int rep = 0; rep < 2000; ++rep) {
        const std::size_t lambda = 1 + static_cast<std::size_t>(rng.uniform(0, 20));
        std::vector<double> w(lambda);
        for (auto& x : w) x = rng.uniform(0, 1);
        std::sort(w.rbegin(), w.rend());
        const WeightScheme scheme(w);
        std::vector<double> keys(lambda);
        for (auto& x : keys) x = std::floor(rng.uniform(0, 6)); // frequent ties
        const auto bars = tie_aware_weights(keys, scheme);
        const double total = std::accumulate(bars.begin(), bars.end(), 0.0);
        REQUIRE(total == Approx(scheme.sum()).epsilon(1e-12).margin(1e-12));
        for (std::size_t i = 0; i < lambda; ++i)
            for (std::size_t j = i + 1; j < lambda; ++j)
                if (keys[i] == keys[j]) REQUIRE(bars[i] == bars[j]);
    }
}

TEST_CASE("permutation equivariance of scores and weights", "[ranking]") {
    const NoisyProblem p = quadratic_noiseless();
    const auto pop = points({0.5, 1.0, -2.0, 3.0, 0.1});
    const WeightScheme scheme(std::vector<double>{5, 4, 3, 2, 1});
    RngStream r1(3), r2(3);
    const auto base_scores = scores(pairwise_sign_matrix(p, pop, 2, r1));
    const auto base_w = tie_aware_weights(base_scores, scheme);

    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<std::vector<double>> permuted;
    for (std::size_t idx : perm) permuted.push_back(pop[idx]);
    const auto perm_scores = scores(pairwise_sign_matrix(p, permuted, 2, r2));
    const auto perm_w = tie_aware_weights(perm_scores, scheme);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        REQUIRE(perm_scores[i] == base_scores[perm[i]]);
        REQUIRE(perm_w[i] == base_w[perm[i]]);
    }
}

TEST_CASE("monotone transform leaves matrix, scores, weights unchanged", "[ranking]") {
    const NoisyProblem base = make_additive_ellipsoid(2, StableParams(1, 0, 1, 0));
    const auto warped =
        transformed_observations(base, [](double y) { return std::exp(y / 10.0); });
    const std::vector<std::vector<double>> pop{
        {0.1, 0.0}, {0.2, 0.0}, {0.0, 0.1}, {0.15, 0.05}};
    const WeightScheme scheme(std::vector<double>{1.0, 0.5, 0.0, 0.0});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RngStream r1(seed), r2(seed);
        const SignMatrix m1 = pairwise_sign_matrix(base, pop, 4, r1);
        const SignMatrix m2 = pairwise_sign_matrix(warped, pop, 4, r2);
        for (std::size_t i = 0; i < pop.size(); ++i)
            for (std::size_t j = 0; j < pop.size(); ++j)
                REQUIRE(m1.at(i, j) == m2.at(i, j));
        const auto s1 = scores(m1), s2 = scores(m2);
        REQUIRE(s1 == s2);
        REQUIRE(tie_aware_weights(s1, scheme) == tie_aware_weights(s2, scheme));
    }
}

TEST_CASE("transitive matrices agree with conventional weighting", "[ranking]") {
    // When the matrix is transitive with no ties, weighting through R equals
    // ranking the points by the induced total order.
    const NoisyProblem p = quadratic_noiseless();
    const auto pop = points({2.0, -1.0, 0.2, 1.4, -3.0});
    const WeightScheme scheme(std::vector<double>{0.4, 0.3, 0.2, 0.1, 0.0});
    RngStream rng(17);
    const auto r = scores(pairwise_sign_matrix(p, pop, 1, rng));
    const auto w = tie_aware_weights(r, scheme);
    // f-order: -0.2 (idx 2) < -1 (1)? f = x^2: 4, 1, 0.04, 1.96, 9
    // ascending: idx 2 (0.04), idx 1 (1), idx 3 (1.96), idx 0 (4), idx 4 (9)
    const std::vector<std::size_t> ascending{2, 1, 3, 0, 4};
    for (std::size_t rank = 0; rank < ascending.size(); ++rank)
        REQUIRE(w[ascending[rank]] == Approx(scheme.weights[rank]));
}

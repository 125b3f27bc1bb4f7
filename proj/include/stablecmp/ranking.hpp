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

/// \file ranking.hpp
/// Population-level sign averaging: the antisymmetric pairwise sign matrix,
/// the R scores it induces, and tie-aware rank weights.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "stablecmp/comparators.hpp"
#include "stablecmp/rng.hpp"

namespace stablecmp {

/// Antisymmetric n x n matrix of pairwise sign-average estimates; the
/// diagonal is zero by construction.
class SignMatrix {
  public:
    explicit SignMatrix(std::size_t n) : n_(n), entries_(n * n, 0) {}

    std::size_t size() const { return n_; }
    int at(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }

    /// Sets (i, j) and its mirror (j, i) = -value.
    void set_pair(std::size_t i, std::size_t j, int value) {
        if (i == j) throw std::invalid_argument("SignMatrix: diagonal is fixed at 0");
        entries_[i * n_ + j] = value;
        entries_[j * n_ + i] = -value;
    }

  private:
    std::size_t n_;
    std::vector<int> entries_;
};

/// Non-increasing rank weights w_1 >= ... >= w_lambda.
struct WeightScheme {
    std::vector<double> weights;

    explicit WeightScheme(std::vector<double> w) : weights(std::move(w)) {
        if (weights.empty())
            throw std::invalid_argument("WeightScheme: need at least one weight");
        for (std::size_t i = 1; i < weights.size(); ++i)
            if (weights[i] > weights[i - 1])
                throw std::invalid_argument("WeightScheme: weights must be non-increasing");
    }

    std::size_t size() const { return weights.size(); }

    double sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Sign matrix over a lambda x K table of cached evaluations (k-aligned
/// pairing): entry (i, j) = sign( mean_k sign(f_ik - f_jk) ).
inline SignMatrix sign_matrix_from_samples(
    const std::vector<std::vector<double>>& samples) {
    const std::size_t n = samples.size();
    SignMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (samples[i].size() != samples[j].size())
                throw std::invalid_argument(
                    "sign_matrix_from_samples: ragged sample table");
            double s = 0.0;
            for (std::size_t k = 0; k < samples[i].size(); ++k)
                s += sign_of(samples[i][k] - samples[j][k]);
            m.set_pair(i, j, sign_of(s / static_cast<double>(samples[i].size())));
        }
    }
    return m;
}

enum class PairingMode {
    ReuseSamples,     // K evaluations per point, shared by all pairs (lambda K calls)
    IndependentPairs, // fresh 2K evaluations per ordered pair (lambda(lambda-1)K calls)
};

/// Evaluates the population and fills the pairwise sign matrix.
///
/// ReuseSamples is the budget-preserving default; IndependentPairs restores
/// the i.i.d.-per-pair setting under which the pairwise guarantees are exact,
/// at a lambda-fold higher cost.
template <typename Problem>
SignMatrix pairwise_sign_matrix(const Problem& problem,
                                const std::vector<std::vector<double>>& population,
                                std::size_t k, RngStream& rng,
                                PairingMode mode = PairingMode::ReuseSamples) {
    if (k == 0) throw std::invalid_argument("pairwise_sign_matrix: K must be >= 1");
    const std::size_t n = population.size();
    if (mode == PairingMode::ReuseSamples) {
        std::vector<std::vector<double>> samples(n, std::vector<double>(k));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t kk = 0; kk < k; ++kk)
                samples[i][kk] = problem.evaluate(population[i], rng);
        return sign_matrix_from_samples(samples);
    }
    SignMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            m.set_pair(i, j,
                       compare_sign_average(problem, population[i], population[j],
                                            k, rng)
                           .value);
    return m;
}

/// R_i = #{ j : entry(j, i) <= 0 }, the count of points estimated at least
/// as good as x_i, including j = i (the zero diagonal shifts every score by
/// one, which cannot change induced ranks).
inline std::vector<std::size_t> scores(const SignMatrix& m) {
    std::vector<std::size_t> r(m.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (m.at(j, i) <= 0) ++r[i];
    return r;
}

/// Tie-aware weights: with r<_i strictly-better counts and r<=_i weakly-better
/// counts, point i receives the mean of w_{r<+1} .. w_{r<=}. Tied keys share
/// one weight and the total weight mass is preserved.
inline std::vector<double> tie_aware_weights(std::span<const double> keys,
                                             const WeightScheme& scheme) {
    const std::size_t n = keys.size();
    if (n != scheme.size())
        throw std::invalid_argument("tie_aware_weights: keys/weights length mismatch");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t strictly_better = 0, weakly_better = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (keys[j] < keys[i]) ++strictly_better;
            if (keys[j] <= keys[i]) ++weakly_better;
        }
        double s = 0.0;
        for (std::size_t j = strictly_better; j < weakly_better; ++j)
            s += scheme.weights[j];
        out[i] = s / static_cast<double>(weakly_better - strictly_better);
    }
    return out;
}

inline std::vector<double> tie_aware_weights(std::span<const std::size_t> keys,
                                             const WeightScheme& scheme) {
    std::vector<double> as_double(keys.begin(), keys.end());
    return tie_aware_weights(std::span<const double>(as_double), scheme);
}

} // namespace stablecmp

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

/// \file problems.hpp
/// Noisy objectives of the form f(x; eps) = h(x) + sum_m g_m(x) * eps_m with
/// stable noise channels sharing one stability index, plus the three
/// ellipsoid test functions (additive, multiplicative, linear noise).

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stablecmp/rng.hpp"
#include "stablecmp/stable.hpp"

namespace stablecmp {

using DesignFn = std::function<double(std::span<const double>)>;

/// One noise channel: deterministic coefficient g_m and the law of eps_m.
struct NoiseChannel {
    DesignFn g;
    StableParams params;
};

/// Immutable noisy problem. evaluate() draws one fresh noise vector per call
/// (exactly M stable draws, also when a coefficient vanishes, so the random
/// stream advances identically for every query point).
class NoisyProblem {
  public:
    NoisyProblem(std::size_t dimension, DesignFn h, std::vector<NoiseChannel> channels)
        : dimension_(dimension), h_(std::move(h)), channels_(std::move(channels)) {
        if (dimension_ == 0)
            throw std::invalid_argument("NoisyProblem: dimension must be positive");
        if (channels_.empty())
            throw std::invalid_argument("NoisyProblem: at least one noise channel");
        const double alpha = channels_.front().params.alpha;
        for (const NoiseChannel& c : channels_)
            if (c.params.alpha != alpha)
                throw std::invalid_argument(
                    "NoisyProblem: channels must share one stability index");
    }

    std::size_t dimension() const { return dimension_; }
    const std::vector<NoiseChannel>& channels() const { return channels_; }
    double common_alpha() const { return channels_.front().params.alpha; }

    bool symmetric_noise() const {
        for (const NoiseChannel& c : channels_)
            if (c.params.beta != 0.0) return false;
        return true;
    }

    double evaluate(std::span<const double> x, RngStream& rng) const {
        check_dimension(x);
        double value = h_(x);
        for (const NoiseChannel& c : channels_)
            value += c.g(x) * sample(c.params, rng);
        return value;
    }

    /// Deterministic index f(x; Delta) = h(x) + sum_m g_m(x) * delta_m.
    double ground_truth(std::span<const double> x) const {
        check_dimension(x);
        double value = h_(x);
        for (const NoiseChannel& c : channels_)
            value += c.g(x) * c.params.delta;
        return value;
    }

  private:
    void check_dimension(std::span<const double> x) const {
        if (x.size() != dimension_)
            throw std::invalid_argument("NoisyProblem: design vector has wrong dimension");
    }

    std::size_t dimension_;
    DesignFn h_;
    std::vector<NoiseChannel> channels_;
};

/// Ellipsoid spectrum: i-th eigenvalue 10^(2(i-1)/(D-1)), i = 1..D.
inline std::vector<double> ellipsoid_eigenvalues(std::size_t dimension) {
    if (dimension < 2)
        throw std::invalid_argument("ellipsoid_eigenvalues: dimension must be >= 2");
    std::vector<double> eig(dimension);
    for (std::size_t i = 0; i < dimension; ++i)
        eig[i] = std::pow(10.0, 2.0 * static_cast<double>(i) /
                                    (static_cast<double>(dimension) - 1.0));
    return eig;
}

namespace detail {

inline DesignFn ellipsoid_quadratic(std::size_t dimension) {
    return [eig = ellipsoid_eigenvalues(dimension)](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += eig[i] * x[i] * x[i];
        return s;
    };
}

} // namespace detail

/// f(x; eps) = x'Hx + eps, one channel with g == 1.
inline NoisyProblem make_additive_ellipsoid(std::size_t dimension,
                                            const StableParams& noise) {
    std::vector<NoiseChannel> channels;
    channels.push_back({[](std::span<const double>) { return 1.0; }, noise});
    return NoisyProblem(dimension, detail::ellipsoid_quadratic(dimension),
                        std::move(channels));
}

/// f(x; eps) = x'Hx * eps, expressed with h == 0 and g_1(x) = x'Hx.
inline NoisyProblem make_multiplicative_ellipsoid(std::size_t dimension,
                                                  const StableParams& noise) {
    std::vector<NoiseChannel> channels;
    channels.push_back({detail::ellipsoid_quadratic(dimension), noise});
    return NoisyProblem(dimension, [](std::span<const double>) { return 0.0; },
                        std::move(channels));
}

/// f(x; eps) = x'Hx + eps'x with D channels g_m(x) = x_m and scales
/// gamma_m = 10^(a + (m-1)(b-a)/(D-1)), delta_m = 0.
inline NoisyProblem make_linear_noise_ellipsoid(std::size_t dimension, double alpha,
                                                double beta, double a, double b) {
    if (dimension < 2)
        throw std::invalid_argument("make_linear_noise_ellipsoid: dimension must be >= 2");
    std::vector<NoiseChannel> channels;
    channels.reserve(dimension);
    for (std::size_t m = 0; m < dimension; ++m) {
        const double gamma =
            std::pow(10.0, a + static_cast<double>(m) * (b - a) /
                                   (static_cast<double>(dimension) - 1.0));
        channels.push_back({[m](std::span<const double> x) { return x[m]; },
                            StableParams(alpha, beta, gamma, 0.0)});
    }
    return NoisyProblem(dimension, detail::ellipsoid_quadratic(dimension),
                        std::move(channels));
}

/// View of a problem with a strictly increasing transform applied to every
/// observed value. The ground-truth index is reported untransformed; the
/// transform models a distortion of the measurements, not of the target.
template <typename Problem, typename Transform>
class TransformedProblem {
  public:
    TransformedProblem(Problem problem, Transform transform)
        : problem_(std::move(problem)), transform_(std::move(transform)) {}

    std::size_t dimension() const { return problem_.dimension(); }
    double evaluate(std::span<const double> x, RngStream& rng) const {
        return transform_(problem_.evaluate(x, rng));
    }
    double ground_truth(std::span<const double> x) const {
        return problem_.ground_truth(x);
    }

  private:
    Problem problem_;
    Transform transform_;
};

template <typename Problem, typename Transform>
TransformedProblem<Problem, Transform> transformed_observations(Problem problem,
                                                                Transform transform) {
    return TransformedProblem<Problem, Transform>(std::move(problem),
                                                  std::move(transform));
}

} // namespace stablecmp

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

/// \file metrics.hpp
/// Tie-corrected Kendall rank correlation (Tau-b) and trailing moving average.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace stablecmp {

/// Tau-b = (C - D) / sqrt((n0 - n1)(n0 - n2)) with n0 = n(n-1)/2 and n1, n2
/// the tied-pair counts of each coordinate. O(n^2); populations here are tiny.
inline double kendall_tau_b(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size())
        throw std::invalid_argument("kendall_tau_b: series lengths differ");
    if (n < 2)
        throw std::invalid_argument("kendall_tau_b: need at least two pairs");

    long long numerator = 0; // sum over i<j of sign(dx) * sign(dy) = C - D
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = xs[i] - xs[j];
            const double dy = ys[i] - ys[j];
            const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
            const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
            numerator += sx * sy;
        }
    }

    const auto tied_pairs = [](std::span<const double> v) {
        std::vector<double> s(v.begin(), v.end());
        std::sort(s.begin(), s.end());
        long long tied = 0;
        std::size_t run = 1;
        for (std::size_t i = 1; i <= s.size(); ++i) {
            if (i < s.size() && s[i] == s[i - 1]) {
                ++run;
            } else {
                tied += static_cast<long long>(run) * (run - 1) / 2;
                run = 1;
            }
        }
        return tied;
    };

    const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
    const long long n1 = tied_pairs(xs);
    const long long n2 = tied_pairs(ys);
    if (n0 == n1 || n0 == n2)
        throw std::domain_error("kendall_tau_b: a coordinate is entirely tied");
    // One sqrt of the product keeps the no-tie case exact (+/-1 stays +/-1).
    return static_cast<double>(numerator) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

/// Trailing moving average; the first span-1 entries use shrinking windows,
/// so the output has the length of the input.
inline std::vector<double> moving_average(std::span<const double> series,
                                          std::size_t span) {
    if (span == 0) throw std::invalid_argument("moving_average: span must be >= 1");
    std::vector<double> out(series.size());
    double window_sum = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        window_sum += series[i];
        if (i >= span) window_sum -= series[i - span];
        out[i] = window_sum / static_cast<double>(std::min(span, i + 1));
    }
    return out;
}

} // namespace stablecmp

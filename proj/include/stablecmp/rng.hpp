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

/// \file rng.hpp
/// Seeded random streams with counter-based substream derivation.
///
/// Every sampling routine in this library takes an explicit RngStream, so all
/// results are pure functions of (inputs, seed). Substreams are derived from
/// (seed, counter) only -- never from consumed engine state -- so a grid of
/// trials produces identical results whether cells run serially or in
/// parallel.

#include <cstdint>
#include <cmath>
#include <random>

namespace stablecmp {

/// SplitMix64 finalizer. Used only for seed derivation, not as a generator.
constexpr std::uint64_t split_mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Substream seed for (master, counter). This is the documented split rule:
/// mix the counter, xor into the mixed master, mix again.
constexpr std::uint64_t derive_stream_seed(std::uint64_t master,
                                           std::uint64_t counter) noexcept {
    return split_mix64(split_mix64(master) ^ split_mix64(counter));
}

/// Deterministic random stream.
///
/// mt19937_64 supplies the raw bits; the uniform/normal conversions below are
/// implemented by hand (not via std::*_distribution, whose output is
/// implementation-defined) so that a seed pins the exact sequence of doubles.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1); never returns an endpoint.
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard exponential via inversion.
    double exponential() { return -std::log(uniform01()); }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u = uniform01();
        const double v = uniform01();
        return std::sqrt(-2.0 * std::log(u)) *
               std::cos(6.283185307179586476925286766559 * v);
    }

    /// Child stream for (seed, counter); independent of consumed state.
    RngStream substream(std::uint64_t counter) const {
        return RngStream(derive_stream_seed(seed_, counter));
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace stablecmp

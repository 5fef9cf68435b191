// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "falcon/types.hpp"

namespace falcon {

/**
 * Seedable generator shared by every stochastic component.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard. The transforms below are implemented here rather than taken from
 * <random> distributions, which are allowed to differ between standard
 * libraries. Together they make channel draws and codebooks bit-identical on
 * every conforming platform.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (both outputs used).
    double normal();
    /// Circularly-symmetric CN(0, 1).
    cdouble complex_normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace falcon

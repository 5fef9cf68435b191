// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "falcon/types.hpp"

namespace falcon {

/**
 * Downlink channels h_1..h_K of a K-user MISO system with n_tx antennas.
 *
 * Immutable after construction. seed is empty for deterministic channel sets
 * (phase ramps, hand-built test channels).
 */
class ChannelSet {
public:
    ChannelSet(int n_tx, std::vector<CVector> channels,
               std::optional<std::uint64_t> seed = std::nullopt);

    int n_tx() const { return n_tx_; }
    int k_users() const { return static_cast<int>(channels_.size()); }
    const std::vector<CVector>& channels() const { return channels_; }
    const CVector& operator[](int k) const { return channels_.at(k); }
    const std::optional<std::uint64_t>& seed() const { return seed_; }

    /// Same channels with h_k replaced by scale_k * h_k.
    ChannelSet rotated(const std::vector<cdouble>& scale) const;

    bool operator==(const ChannelSet& other) const;

private:
    int n_tx_;
    std::vector<CVector> channels_;
    std::optional<std::uint64_t> seed_;
};

/// Half-wavelength ULA steering vector, unit norm: a_n = e^{j pi n sin(theta)} / sqrt(n).
CVector ula_steering(int n_tx, double theta);

/**
 * Geometric Saleh-Valenzuela channels:
 *   h_k = sqrt(n_tx / n_paths) * sum_l alpha_{k,l} a(theta_{k,l})
 * with alpha ~ CN(0,1) and theta ~ U[0, 2 pi). E||h_k||^2 = n_tx.
 */
ChannelSet gen_saleh_valenzuela(std::uint64_t seed, int n_tx, int k_users,
                                int n_paths = 8);

/// Two users, four antennas: h_1 = 1, h_2 = [1, e^{j theta}, e^{j2 theta}, e^{j3 theta}]^H.
ChannelSet gen_two_user_phase_ramp(double theta);

}  // namespace falcon

// SPDX-License-Identifier: Apache-2.0
#include "falcon/channel.hpp"

#include <cmath>
#include <numbers>

#include "falcon/rng.hpp"

namespace falcon {

ChannelSet::ChannelSet(int n_tx, std::vector<CVector> channels,
                       std::optional<std::uint64_t> seed)
    : n_tx_(n_tx), channels_(std::move(channels)), seed_(seed) {
    if (n_tx_ < 1) throw ParameterError("ChannelSet: n_tx must be >= 1");
    if (channels_.empty()) throw ParameterError("ChannelSet: at least one user required");
    for (const auto& h : channels_) {
        if (h.size() != n_tx_)
            throw ParameterError("ChannelSet: channel length differs from n_tx");
        if (!h.allFinite()) throw ParameterError("ChannelSet: non-finite channel entry");
    }
}

ChannelSet ChannelSet::rotated(const std::vector<cdouble>& scale) const {
    if (static_cast<int>(scale.size()) != k_users())
        throw ParameterError("ChannelSet::rotated: one factor per user required");
    std::vector<CVector> out = channels_;
    for (int k = 0; k < k_users(); ++k) out[k] *= scale[k];
    return ChannelSet(n_tx_, std::move(out), seed_);
}

bool ChannelSet::operator==(const ChannelSet& other) const {
    if (n_tx_ != other.n_tx_ || seed_ != other.seed_ || k_users() != other.k_users())
        return false;
    for (int k = 0; k < k_users(); ++k)
        if (channels_[k] != other.channels_[k]) return false;
    return true;
}

CVector ula_steering(int n_tx, double theta) {
    CVector a(n_tx);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
    for (int n = 0; n < n_tx; ++n)
        a[n] = std::polar(scale, std::numbers::pi * n * std::sin(theta));
    return a;
}

ChannelSet gen_saleh_valenzuela(std::uint64_t seed, int n_tx, int k_users, int n_paths) {
    if (n_tx < 1 || k_users < 1 || n_paths < 1)
        throw ParameterError("gen_saleh_valenzuela: dimensions must be >= 1");
    Rng rng(seed);
    const double gain = std::sqrt(static_cast<double>(n_tx) / n_paths);
    std::vector<CVector> channels;
    channels.reserve(k_users);
    for (int k = 0; k < k_users; ++k) {
        CVector h = CVector::Zero(n_tx);
        for (int l = 0; l < n_paths; ++l) {
            const cdouble alpha = rng.complex_normal();
            const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
            h += alpha * ula_steering(n_tx, theta);
        }
        channels.push_back(gain * h);
    }
    return ChannelSet(n_tx, std::move(channels), seed);
}

ChannelSet gen_two_user_phase_ramp(double theta) {
    constexpr int n_tx = 4;
    CVector h1 = CVector::Ones(n_tx);
    CVector h2(n_tx);
    // The conjugate transpose in the definition puts e^{-j n theta} on the column vector.
    for (int n = 0; n < n_tx; ++n) h2[n] = std::polar(1.0, -theta * n);
    return ChannelSet(n_tx, {h1, h2});
}

}  // namespace falcon

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/falcon.hpp"

namespace falcon {

enum class InitMethod { MRT, ZF, SLNR };

std::string to_string(InitMethod method);
/// Parses "MRT", "ZF" or "SLNR" (case-insensitive).
InitMethod parse_init_method(const std::string& name);

/// Raised when an initialization recipe cannot produce a point (rank-deficient ZF).
class InitializationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WmmseInit {
    InitMethod method = InitMethod::MRT;
    double p_m0_fraction = 0.8;
    CVector m0;
    std::vector<CVector> b0;
};

/**
 * Initial point: multicast along the principal left singular vector of
 * [g_1 ... g_K], unicast along MRT / ZF / SLNR directions, scaled so that
 * ||F m0||^2 = frac * P and ||F b0_k||^2 = (1 - frac) P / K.
 */
WmmseInit init_point(const ChannelSet& channels, const AnalogPrecoder& analog, InitMethod method,
                     double p_m0_fraction, double p_tx, double sigma2);

/**
 * Rate-WMMSE alternating optimization. Each iteration computes the MMSE
 * equalizers and MSE weights of the common and private streams, then solves
 * the convex precoder/rate-split QCQP with the interior-point core. trace
 * holds the weighted sum-rate after every accepted update.
 */
RsSolution run_wmmse(const ChannelSet& channels, const AnalogPrecoder& analog,
                     const WmmseInit& init, const std::vector<double>& weights, double c0_min,
                     double p_tx, double sigma2, const FalconConfig& config = {});

}  // namespace falcon

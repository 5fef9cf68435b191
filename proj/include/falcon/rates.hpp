// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/types.hpp"

namespace falcon {

/// Scenario constants of the WSR problem. Powers in mW, rates in bps/Hz.
struct ProblemParams {
    std::vector<double> weights;
    double c0_min = 0.0;
    double p_tx = 1.0;
    double sigma2 = 1.0;
};

struct RateReport {
    std::vector<double> sinr_common;
    std::vector<double> sinr_private;
    std::vector<double> rate_common_per_user;
    std::vector<double> rate_private;
    double common_rate_cap = 0.0;  // min_k rate_common_per_user
    double wsr = 0.0;
    std::vector<Slack> slacks;
};

/// |h_k^H F m|^2 / (sum_j |h_k^H F b_j|^2 + sigma2); the sum includes j = k.
std::vector<double> sinr_common(const ChannelSet& channels, const AnalogPrecoder& analog,
                                const std::vector<CVector>& b_vecs, const CVector& m_vec,
                                double sigma2);

/// |h_k^H F b_k|^2 / (sum_{j != k} |h_k^H F b_j|^2 + sigma2).
std::vector<double> sinr_private(const ChannelSet& channels, const AnalogPrecoder& analog,
                                 const std::vector<CVector>& b_vecs, double sigma2);

/// sum_k mu_k (C_k + rate_private_k).
double wsr(const RateReport& report, const std::vector<double>& c,
           const std::vector<double>& weights);

/**
 * Signed slacks of the original problem for a concrete precoder tuple:
 * common_rate_split (per user), multicast_qos, common_part_nonneg (per user),
 * power and, for hybrid F, alphabet (negative distance of the worst entry).
 */
std::vector<Slack> feasibility_report(const ChannelSet& channels, const AnalogPrecoder& analog,
                                      const std::vector<CVector>& b_vecs, const CVector& m_vec,
                                      double c0, const std::vector<double>& c,
                                      const ProblemParams& params);

/// Full evaluation: SINRs, rates, WSR and slacks.
RateReport evaluate_rates(const ChannelSet& channels, const AnalogPrecoder& analog,
                          const std::vector<CVector>& b_vecs, const CVector& m_vec, double c0,
                          const std::vector<double>& c, const ProblemParams& params);

}  // namespace falcon

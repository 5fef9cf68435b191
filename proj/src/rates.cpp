// SPDX-License-Identifier: Apache-2.0
#include "falcon/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace falcon {
namespace {

void check_dims(const ChannelSet& channels, const AnalogPrecoder& analog,
                const std::vector<CVector>& b_vecs) {
    if (analog.n_tx() != channels.n_tx())
        throw ParameterError("rates: F rows differ from n_tx");
    if (static_cast<int>(b_vecs.size()) != channels.k_users())
        throw ParameterError("rates: one unicast precoder per user required");
    for (const auto& b : b_vecs)
        if (b.size() != analog.n_rf()) throw ParameterError("rates: precoder length differs from n_rf");
}

// |g_k^H b_j|^2 for all (k, j)
RMatrix received_powers(const ChannelSet& channels, const AnalogPrecoder& analog,
                        const std::vector<CVector>& b_vecs) {
    const int k_users = channels.k_users();
    RMatrix p(k_users, k_users);
    for (int k = 0; k < k_users; ++k) {
        const CVector g = analog.matrix().adjoint() * channels[k];
        for (int j = 0; j < k_users; ++j) p(k, j) = std::norm(g.dot(b_vecs[j]));
    }
    return p;
}

}  // namespace

std::vector<double> sinr_common(const ChannelSet& channels, const AnalogPrecoder& analog,
                                const std::vector<CVector>& b_vecs, const CVector& m_vec,
                                double sigma2) {
    check_dims(channels, analog, b_vecs);
    if (m_vec.size() != analog.n_rf()) throw ParameterError("rates: m length differs from n_rf");
    const RMatrix p = received_powers(channels, analog, b_vecs);
    std::vector<double> out(channels.k_users());
    for (int k = 0; k < channels.k_users(); ++k) {
        const CVector g = analog.matrix().adjoint() * channels[k];
        out[k] = std::norm(g.dot(m_vec)) / (p.row(k).sum() + sigma2);
    }
    return out;
}

std::vector<double> sinr_private(const ChannelSet& channels, const AnalogPrecoder& analog,
                                 const std::vector<CVector>& b_vecs, double sigma2) {
    check_dims(channels, analog, b_vecs);
    const RMatrix p = received_powers(channels, analog, b_vecs);
    std::vector<double> out(channels.k_users());
    for (int k = 0; k < channels.k_users(); ++k)
        out[k] = p(k, k) / (p.row(k).sum() - p(k, k) + sigma2);
    return out;
}

double wsr(const RateReport& report, const std::vector<double>& c,
           const std::vector<double>& weights) {
    if (c.size() != report.rate_private.size() || weights.size() != c.size())
        throw ParameterError("wsr: length mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k)
        total += weights[k] * (c[k] + report.rate_private[k]);
    return total;
}

std::vector<Slack> feasibility_report(const ChannelSet& channels, const AnalogPrecoder& analog,
                                      const std::vector<CVector>& b_vecs, const CVector& m_vec,
                                      double c0, const std::vector<double>& c,
                                      const ProblemParams& params) {
    const auto sc = sinr_common(channels, analog, b_vecs, m_vec, params.sigma2);
    if (static_cast<int>(c.size()) != channels.k_users())
        throw ParameterError("feasibility_report: one C_k per user required");
    const double split = c0 + std::accumulate(c.begin(), c.end(), 0.0);

    std::vector<Slack> slacks;
    for (int k = 0; k < channels.k_users(); ++k)
        slacks.push_back({"common_rate_split", k, std::log2(1.0 + sc[k]) - split});
    slacks.push_back({"multicast_qos", -1, c0 - params.c0_min});
    for (int k = 0; k < channels.k_users(); ++k) slacks.push_back({"common_part_nonneg", k, c[k]});

    const CMatrix& f = analog.matrix();
    double power = (f * m_vec).squaredNorm();
    for (const auto& b : b_vecs) power += (f * b).squaredNorm();
    slacks.push_back({"power", -1, params.p_tx - power});

    if (analog.alphabet()) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            for (Eigen::Index j = 0; j < f.cols(); ++j)
                worst = std::max(worst, analog.alphabet()->distance(f(i, j)));
        slacks.push_back({"alphabet", -1, -worst});
    }
    return slacks;
}

RateReport evaluate_rates(const ChannelSet& channels, const AnalogPrecoder& analog,
                          const std::vector<CVector>& b_vecs, const CVector& m_vec, double c0,
                          const std::vector<double>& c, const ProblemParams& params) {
    RateReport report;
    report.sinr_common = sinr_common(channels, analog, b_vecs, m_vec, params.sigma2);
    report.sinr_private = sinr_private(channels, analog, b_vecs, params.sigma2);
    for (double s : report.sinr_common) report.rate_common_per_user.push_back(std::log2(1.0 + s));
    for (double s : report.sinr_private) report.rate_private.push_back(std::log2(1.0 + s));
    report.common_rate_cap =
        *std::min_element(report.rate_common_per_user.begin(), report.rate_common_per_user.end());
    report.wsr = wsr(report, c, params.weights);
    report.slacks = feasibility_report(channels, analog, b_vecs, m_vec, c0, c, params);
    return report;
}

}  // namespace falcon

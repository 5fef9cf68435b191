// SPDX-License-Identifier: Apache-2.0
#include "falcon/serialize.hpp"

#include <iomanip>

namespace falcon {

Json to_json(const CVector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
    return out;
}

Json to_json(const CMatrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        out.push_back(std::move(row));
    }
    return out;
}

CVector cvector_from_json(const Json& j) {
    if (!j.is_array()) throw ParameterError("json: complex vector must be an array");
    CVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != 2)
            throw ParameterError("json: complex entries are [re, im] pairs");
        v(static_cast<Eigen::Index>(i)) = cdouble(j[i][0].get<double>(), j[i][1].get<double>());
    }
    return v;
}

CMatrix cmatrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw ParameterError("json: complex matrix must be a non-empty array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const CVector row = cvector_from_json(j[r]);
        if (row.size() != cols) throw ParameterError("json: ragged complex matrix");
        m.row(r) = row.transpose();
    }
    return m;
}

Json to_json(const ChannelSet& channels) {
    Json out;
    out["n_tx"] = channels.n_tx();
    out["k_users"] = channels.k_users();
    out["seed"] = channels.seed() ? Json(*channels.seed()) : Json("deterministic");
    out["channels"] = Json::array();
    for (const auto& h : channels.channels()) out["channels"].push_back(to_json(h));
    return out;
}

ChannelSet channel_set_from_json(const Json& j) {
    std::vector<CVector> hs;
    for (const auto& h : j.at("channels")) hs.push_back(cvector_from_json(h));
    std::optional<std::uint64_t> seed;
    if (j.contains("seed") && j["seed"].is_number_unsigned()) seed = j["seed"].get<std::uint64_t>();
    return ChannelSet(j.at("n_tx").get<int>(), std::move(hs), seed);
}

Json to_json(const AnalogPrecoder& analog) {
    Json out;
    out["mode"] = to_string(analog.mode());
    out["n_tx"] = analog.n_tx();
    out["n_rf"] = analog.n_rf();
    out["matrix"] = to_json(analog.matrix());
    if (analog.alphabet()) {
        out["l_tx"] = analog.alphabet()->l_tx();
        Json idx = Json::array();
        for (Eigen::Index r = 0; r < analog.matrix().rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < analog.matrix().cols(); ++c)
                row.push_back(analog.alphabet()->index_of(analog.matrix()(r, c)));
            idx.push_back(std::move(row));
        }
        out["phase_index"] = std::move(idx);
    }
    return out;
}

AnalogPrecoder analog_from_json(const Json& j) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "fully_digital") return identity_analog(j.at("n_tx").get<int>());
    const int n_rf = j.at("n_rf").get<int>();
    PhaseShiftSet alphabet(j.at("l_tx").get<int>(), n_rf);
    CMatrix f;
    if (j.contains("phase_index")) {
        const auto& idx = j["phase_index"];
        f.resize(static_cast<Eigen::Index>(idx.size()), n_rf);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (int c = 0; c < n_rf; ++c)
                f(static_cast<Eigen::Index>(r), c) = alphabet[idx[r][c].get<int>()];
    } else {
        f = cmatrix_from_json(j.at("matrix"));
    }
    if (mode == "pb") return AnalogPrecoder(f, AnalogMode::PB, alphabet);
    if (mode == "cb") return AnalogPrecoder(f, AnalogMode::CB, alphabet);
    throw ParameterError("json: unknown analog mode " + mode);
}

Json to_json(const std::vector<Slack>& slacks) {
    Json out = Json::array();
    for (const auto& s : slacks) {
        Json e{{"name", s.name}, {"value", s.value}};
        if (s.index >= 0) e["index"] = s.index;
        out.push_back(std::move(e));
    }
    return out;
}

Json to_json(const RateReport& report) {
    return Json{{"sinr_common", report.sinr_common},
                {"sinr_private", report.sinr_private},
                {"rate_common_per_user", report.rate_common_per_user},
                {"rate_private", report.rate_private},
                {"common_rate_cap", report.common_rate_cap},
                {"wsr", report.wsr},
                {"slacks", to_json(report.slacks)}};
}

Json to_json(const RsSolution& sol) {
    Json out;
    out["method"] = sol.method;
    if (!sol.init_method.empty()) {
        out["init_method"] = sol.init_method;
        out["p_m0_fraction"] = sol.p_m0_fraction;
    }
    out["status"] = to_string(sol.status);
    out["analog"] = to_json(sol.analog);
    out["b_vecs"] = Json::array();
    for (const auto& b : sol.b_vecs) out["b_vecs"].push_back(to_json(b));
    out["m_vec"] = to_json(sol.m_vec);
    out["c0"] = sol.c0;
    out["c"] = sol.c;
    out["weights"] = sol.weights;
    out["per_user_private_rate"] = sol.per_user_private_rate;
    out["per_user_common_rate"] = sol.per_user_common_rate;
    out["common_rate"] = sol.common_rate;
    out["unicast_rate"] = sol.unicast_rate;
    out["wsr"] = sol.wsr;
    out["trace"] = sol.trace;
    out["iterations_used"] = sol.iterations_used;
    out["rank_residuals"] = sol.rank_residuals;
    out["relaxation_gap"] = sol.relaxation_gap;
    out["rank_one_violation"] = sol.rank_one_violation;
    out["slacks"] = to_json(sol.slacks);
    return out;
}

void write_trace_csv(std::ostream& os, const std::vector<double>& trace) {
    os << "iteration,wsr\n" << std::setprecision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) os << (i + 1) << ',' << trace[i] << '\n';
}

}  // namespace falcon

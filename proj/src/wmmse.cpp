// SPDX-License-Identifier: Apache-2.0
#include "falcon/wmmse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "falcon/barrier.hpp"
#include "falcon/rates.hpp"

namespace falcon {
namespace {

const double kLn2 = std::log(2.0);

CVector fix_phase(CVector v) {
    Eigen::Index idx = 0;
    v.cwiseAbs().maxCoeff(&idx);
    if (std::abs(v(idx)) > 0.0) v *= std::conj(v(idx)) / std::abs(v(idx));
    return v;
}

CVector scale_to_power(const CVector& dir, const CMatrix& fgram, double power) {
    const double cur = std::real(dir.dot(fgram * dir));
    if (!(cur > 0.0)) throw InitializationError("init_point: zero-power direction");
    return dir * std::sqrt(power / cur);
}

/// Real form of a Hermitian A: x^H A x = xr' A_r xr with xr = [Re x; Im x].
RMatrix realify(const CMatrix& a) {
    const Eigen::Index n = a.rows();
    RMatrix r(2 * n, 2 * n);
    r.topLeftCorner(n, n) = a.real();
    r.topRightCorner(n, n) = -a.imag();
    r.bottomLeftCorner(n, n) = a.imag();
    r.bottomRightCorner(n, n) = a.real();
    return r;
}

/// Coefficients of Re(a^H x) on xr.
RVector realify_linear(const CVector& a) {
    RVector r(2 * a.size());
    r << a.real(), a.imag();
    return r;
}

struct Layout {
    int n = 1;      // n_rf
    int k = 1;      // users
    bool ldm = false;
    int beam(int j) const { return 2 * n * j; }  // j = K is the multicast beam
    int c0() const { return 2 * n * (k + 1); }
    int c(int j) const { return c0() + 1 + j; }
    int n_vars() const { return c0() + 1 + (ldm ? 0 : k); }
};

struct Point {
    std::vector<CVector> b;
    CVector m;
    double c0 = 0.0;
    std::vector<double> c;
};

struct StreamWeights {
    std::vector<cdouble> uc, up;
    std::vector<double> wc, wp;
};

StreamWeights mmse_weights(const std::vector<CVector>& g, const Point& pt, double sigma2) {
    const int K = static_cast<int>(g.size());
    StreamWeights sw;
    for (int k = 0; k < K; ++k) {
        double tp = sigma2;
        for (int j = 0; j < K; ++j) tp += std::norm(g[k].dot(pt.b[j]));
        const cdouble sm = g[k].dot(pt.m);
        const cdouble sb = g[k].dot(pt.b[k]);
        const double tc = tp + std::norm(sm);
        sw.uc.push_back(std::conj(sm) / tc);
        sw.up.push_back(std::conj(sb) / tp);
        sw.wc.push_back(1.0 / (1.0 - std::norm(sm) / tc));
        sw.wp.push_back(1.0 / (1.0 - std::norm(sb) / tp));
    }
    return sw;
}

/**
 * MSE of one stream of user k in scaled variables p = s * x:
 *   |u|^2 (s^2 sum_j x_j^H G x_j + sigma2) - 2 s Re(u g^H x_own) + 1
 * as 0.5 x'Qx + l'x + c with weight w applied.
 */
void add_mse(ipm::SmoothFunction& f, const Layout& lay, const RMatrix& gr, const CVector& g,
             cdouble u, double w, int own, int n_beams, double s, double sigma2) {
    const int d = 2 * lay.n;
    const double qa = 2.0 * w * std::norm(u) * s * s;
    for (int j = 0; j < n_beams; ++j)
        f.quadratic.block(lay.beam(j), lay.beam(j), d, d) += qa * gr;
    f.linear.segment(lay.beam(own), d) += -2.0 * w * s * realify_linear(std::conj(u) * g);
    f.constant += w * (std::norm(u) * sigma2 + 1.0);
}

Point unpack(const RVector& x, const Layout& lay, double s) {
    Point pt;
    auto beam = [&](int j) {
        CVector v(lay.n);
        for (int a = 0; a < lay.n; ++a)
            v(a) = s * cdouble(x(lay.beam(j) + a), x(lay.beam(j) + lay.n + a));
        return v;
    };
    for (int j = 0; j < lay.k; ++j) pt.b.push_back(beam(j));
    pt.m = beam(lay.k);
    pt.c0 = x(lay.c0());
    pt.c.assign(lay.k, 0.0);
    if (!lay.ldm)
        for (int j = 0; j < lay.k; ++j) pt.c[j] = x(lay.c(j));
    return pt;
}

RVector pack(const Point& pt, const Layout& lay, double s) {
    RVector x = RVector::Zero(lay.n_vars());
    auto put = [&](int j, const CVector& v) {
        for (int a = 0; a < lay.n; ++a) {
            x(lay.beam(j) + a) = v(a).real() / s;
            x(lay.beam(j) + lay.n + a) = v(a).imag() / s;
        }
    };
    for (int j = 0; j < lay.k; ++j) put(j, pt.b[j]);
    put(lay.k, pt.m);
    x(lay.c0()) = pt.c0;
    if (!lay.ldm)
        for (int j = 0; j < lay.k; ++j) x(lay.c(j)) = pt.c[j];
    return x;
}

}  // namespace

std::string to_string(InitMethod method) {
    switch (method) {
        case InitMethod::MRT: return "MRT";
        case InitMethod::ZF: return "ZF";
        case InitMethod::SLNR: return "SLNR";
    }
    return "Unknown";
}

InitMethod parse_init_method(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (up == "MRT") return InitMethod::MRT;
    if (up == "ZF") return InitMethod::ZF;
    if (up == "SLNR") return InitMethod::SLNR;
    throw ParameterError("unknown WMMSE init method: " + name);
}

WmmseInit init_point(const ChannelSet& channels, const AnalogPrecoder& analog, InitMethod method,
                     double p_m0_fraction, double p_tx, double sigma2) {
    if (!(p_m0_fraction > 0.0 && p_m0_fraction < 1.0))
        throw ParameterError("init_point: p_m0_fraction must lie in (0, 1)");
    if (!(p_tx > 0.0) || !(sigma2 > 0.0))
        throw ParameterError("init_point: p_tx and sigma2 must be > 0");

    const EffectiveChannels eff = effective_channels(analog, channels);
    const int K = channels.k_users();
    const int n = analog.n_rf();
    CMatrix g(n, K);
    for (int k = 0; k < K; ++k) g.col(k) = eff.g[k];

    WmmseInit init;
    init.method = method;
    init.p_m0_fraction = p_m0_fraction;

    Eigen::JacobiSVD<CMatrix> svd(g, Eigen::ComputeThinU);
    init.m0 = scale_to_power(fix_phase(svd.matrixU().col(0)), eff.fgram, p_m0_fraction * p_tx);

    const double p_u = (1.0 - p_m0_fraction) * p_tx / K;
    std::vector<CVector> dirs;
    switch (method) {
        case InitMethod::MRT:
            for (int k = 0; k < K; ++k) dirs.push_back(eff.g[k]);
            break;
        case InitMethod::ZF: {
            const auto& sv = svd.singularValues();
            if (n < K || !(sv(K - 1) > 1e-10 * sv(0)))
                throw InitializationError("init_point: ZF needs a full-column-rank channel matrix");
            const CMatrix w = g * (g.adjoint() * g).inverse();
            for (int k = 0; k < K; ++k) dirs.push_back(w.col(k));
            break;
        }
        case InitMethod::SLNR: {
            const CMatrix all = g * g.adjoint();
            for (int k = 0; k < K; ++k) {
                CMatrix a = all - eff.g[k] * eff.g[k].adjoint();
                a.diagonal().array() += sigma2 * K / p_tx;
                dirs.push_back(a.llt().solve(eff.g[k]));
            }
            break;
        }
    }
    for (auto& d : dirs) {
        const double nrm = d.norm();
        if (!(nrm > 0.0)) throw InitializationError("init_point: zero channel");
        init.b0.push_back(scale_to_power(fix_phase(d / nrm), eff.fgram, p_u));
    }
    return init;
}

RsSolution run_wmmse(const ChannelSet& channels, const AnalogPrecoder& analog,
                     const WmmseInit& init, const std::vector<double>& weights, double c0_min,
                     double p_tx, double sigma2, const FalconConfig& config) {
    config.validate();
    const int K = channels.k_users();
    if (static_cast<int>(weights.size()) != K)
        throw ParameterError("run_wmmse: one weight per user required");
    for (double w : weights)
        if (!(w > 0.0)) throw ParameterError("run_wmmse: weights must be > 0");
    if (static_cast<int>(init.b0.size()) != K || init.m0.size() != analog.n_rf())
        throw ParameterError("run_wmmse: init dimensions do not match");

    const ProblemParams problem{weights, c0_min, p_tx, sigma2};
    const EffectiveChannels eff = effective_channels(analog, channels);
    const Layout lay{analog.n_rf(), K, config.mode == SplitMode::LDM};
    const double s = std::sqrt(p_tx);

    std::vector<RMatrix> gram_r;
    for (const auto& g : eff.g) gram_r.push_back(realify(g * g.adjoint()));
    const RMatrix fgram_r = realify(eff.fgram);

    RsSolution out;
    out.method = "wmmse";
    out.init_method = to_string(init.method);
    out.p_m0_fraction = init.p_m0_fraction;
    out.analog = analog;

    Point cur{init.b0, init.m0, c0_min, std::vector<double>(K, 0.0)};
    auto fill = [&](const Point& pt) {
        out.b_vecs = pt.b;
        out.m_vec = pt.m;
        out.c0 = pt.c0;
        out.c = pt.c;
        finalize_rates(out, channels, problem);
    };

    const RateReport start = evaluate_rates(channels, analog, cur.b, cur.m, c0_min, cur.c, problem);
    if (start.common_rate_cap < c0_min) {
        fill(cur);
        out.status = RunStatus::Infeasible;
        return out;
    }

    ipm::Options opt;
    opt.tol = config.subproblem_tol;
    RunStatus status = RunStatus::IterationCap;
    double cur_wsr = -std::numeric_limits<double>::infinity();

    for (int it = 0; it < config.max_iters; ++it) {
        const StreamWeights sw = mmse_weights(eff.g, cur, sigma2);

        ipm::Problem prob;
        prob.n_vars = lay.n_vars();
        const int nv = prob.n_vars;
        prob.objective = ipm::SmoothFunction(nv);
        prob.objective.quadratic = RMatrix::Zero(nv, nv);
        for (int k = 0; k < K; ++k) {
            add_mse(prob.objective, lay, gram_r[k], eff.g[k], sw.up[k], weights[k] * sw.wp[k] / kLn2,
                    k, K, s, sigma2);
            if (!lay.ldm) prob.objective.linear(lay.c(k)) -= weights[k];
        }
        for (int k = 0; k < K; ++k) {
            // C0 + sum C + (w eps - ln w - 1) / ln2 <= 0
            ipm::SmoothFunction f(nv);
            f.quadratic = RMatrix::Zero(nv, nv);
            add_mse(f, lay, gram_r[k], eff.g[k], sw.uc[k], sw.wc[k] / kLn2, K, K + 1, s, sigma2);
            f.constant -= (std::log(sw.wc[k]) + 1.0) / kLn2;
            f.linear(lay.c0()) += 1.0;
            if (!lay.ldm)
                for (int j = 0; j < K; ++j) f.linear(lay.c(j)) += 1.0;
            prob.constraints.push_back(std::move(f));
        }
        {
            ipm::SmoothFunction f(nv);
            f.constant = c0_min;
            f.linear(lay.c0()) = -1.0;
            prob.constraints.push_back(std::move(f));
        }
        if (!lay.ldm)
            for (int k = 0; k < K; ++k) {
                ipm::SmoothFunction f(nv);
                f.linear(lay.c(k)) = -1.0;
                prob.constraints.push_back(std::move(f));
            }
        {
            ipm::SmoothFunction f(nv);
            f.quadratic = RMatrix::Zero(nv, nv);
            for (int j = 0; j <= K; ++j)
                f.quadratic.block(lay.beam(j), lay.beam(j), 2 * lay.n, 2 * lay.n) = 2.0 * fgram_r;
            f.constant = -1.0;
            prob.constraints.push_back(std::move(f));
        }

        const ipm::Result res = ipm::solve(prob, pack(cur, lay, s), opt);
        if (res.status != ipm::Status::Optimal) {
            status = RunStatus::NumericalFailure;
            break;
        }
        Point next = unpack(res.x, lay, s);
        next.c0 = std::max(next.c0, c0_min);
        for (double& c : next.c) c = std::max(c, 0.0);

        RsSolution probe = out;
        probe.b_vecs = next.b;
        probe.m_vec = next.m;
        probe.c0 = next.c0;
        probe.c = next.c;
        finalize_rates(probe, channels, problem);

        if (probe.wsr >= cur_wsr) {
            cur = {probe.b_vecs, probe.m_vec, probe.c0, probe.c};
            cur_wsr = probe.wsr;
        }
        // a rejected update repeats the previous value and ends the run below
        out.trace.push_back(cur_wsr);
        const auto& tr = out.trace;
        if (tr.size() >= 2 && tr.back() - tr[tr.size() - 2] < config.eps) {
            status = RunStatus::Converged;
            break;
        }
    }

    fill(cur);
    out.iterations_used = static_cast<int>(out.trace.size());
    out.status = status;
    return out;
}

}  // namespace falcon

// SPDX-License-Identifier: Apache-2.0
#include "falcon/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <thread>

#include "falcon/rates.hpp"

namespace falcon {
namespace {

using Beam = std::array<cdouble, 2>;

struct Evaluator {
    const GridSpec& grid;
    int k_users;
    int n_rf;
    std::vector<Beam> g;  // effective channels
    CMatrix fgram;
    std::vector<double> weights;
    int best_user = 0;
    double c0_min, p_tx, sigma2;

    double param(const ParamSource& src, const std::vector<double>& pt) const {
        return src.kind == ParamSource::Kind::Axis ? pt[src.axis] : src.value;
    }

    void decode(std::uint64_t idx, std::vector<double>& pt) const {
        for (int a = static_cast<int>(grid.axes.size()) - 1; a >= 0; --a) {
            const auto n = static_cast<std::uint64_t>(grid.axes[a].points);
            pt[a] = grid.axes[a].value(static_cast<int>(idx % n));
            idx /= n;
        }
    }

    /// Beams for a grid point; false when the residual power is negative.
    bool beams(const std::vector<double>& pt, std::vector<Beam>& out) const {
        const int nb = static_cast<int>(grid.beams.size());
        std::vector<double> power(nb, 0.0);
        double used = 0.0;
        int residual = -1;
        for (int j = 0; j < nb; ++j) {
            if (grid.beams[j].power.kind == ParamSource::Kind::Residual) {
                residual = j;
                continue;
            }
            power[j] = param(grid.beams[j].power, pt);
            used += power[j];
        }
        if (residual >= 0) {
            power[residual] = p_tx - used;
            if (power[residual] < -1e-12 * p_tx) return false;
            power[residual] = std::max(power[residual], 0.0);
        }
        for (int j = 0; j < nb; ++j) {
            Beam v{cdouble(1.0, 0.0), cdouble(0.0, 0.0)};
            if (n_rf == 2) {
                const double phi = param(grid.beams[j].phi, pt);
                const double chi = param(grid.beams[j].chi, pt);
                v = {cdouble(std::cos(phi), 0.0), std::sin(phi) * std::polar(1.0, chi)};
            }
            double fv = 0.0;
            for (int a = 0; a < n_rf; ++a)
                for (int b = 0; b < n_rf; ++b) fv += std::real(std::conj(v[a]) * fgram(a, b) * v[b]);
            const double scale = power[j] > 0.0 ? std::sqrt(power[j] / fv) : 0.0;
            for (int a = 0; a < n_rf; ++a) v[a] *= scale;
            out[j] = v;
        }
        return true;
    }

    double gain2(int k, const Beam& x) const {
        cdouble s = 0.0;
        for (int a = 0; a < n_rf; ++a) s += std::conj(g[k][a]) * x[a];
        return std::norm(s);
    }

    /// Best-split WSR, or -inf when the common rate cannot carry C0_th.
    double wsr(const std::vector<Beam>& x) const {
        double total = 0.0;
        double rc_min = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_users; ++k) {
            double interf = sigma2;
            for (int j = 0; j < k_users; ++j) interf += gain2(k, x[j]);
            const double own = gain2(k, x[k]);
            total += weights[k] * std::log2(1.0 + own / (interf - own));
            rc_min = std::min(rc_min, std::log2(1.0 + gain2(k, x[k_users]) / interf));
        }
        if (rc_min < c0_min) return -std::numeric_limits<double>::infinity();
        return total + weights[best_user] * (rc_min - c0_min);
    }

    double rc_min(const std::vector<Beam>& x) const {
        double out = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_users; ++k) {
            double interf = sigma2;
            for (int j = 0; j < k_users; ++j) interf += gain2(k, x[j]);
            out = std::min(out, std::log2(1.0 + gain2(k, x[k_users]) / interf));
        }
        return out;
    }
};

CVector to_vector(const Beam& b, int n) {
    CVector v(n);
    for (int a = 0; a < n; ++a) v(a) = b[a];
    return v;
}

struct Best {
    double wsr = -std::numeric_limits<double>::infinity();
    std::uint64_t index = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t evaluated = 0;
    std::uint64_t feasible = 0;
};

}  // namespace

double GridAxis::value(int i) const {
    if (points <= 1) return lo;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
}

std::uint64_t GridSpec::total_points() const {
    std::uint64_t total = 1;
    for (const auto& a : axes) {
        if (a.points < 1) return 0;
        const auto n = static_cast<std::uint64_t>(a.points);
        if (total > kMaxPoints * 10 / n) return kMaxPoints * 10;  // saturate
        total *= n;
    }
    return total;
}

void GridSpec::validate(int k_users, int n_rf) const {
    if (k_users < 1 || k_users > 2 || n_rf < 1 || n_rf > 2)
        throw ParameterError("brute_force_wsr: only K <= 2 and n_rf <= 2 are tractable");
    if (static_cast<int>(beams.size()) != k_users + 1)
        throw ParameterError("brute_force_wsr: grid needs K + 1 beams (b_1..b_K, m)");
    if (axes.empty()) throw ParameterError("brute_force_wsr: grid has no axes");
    for (const auto& a : axes)
        if (a.points < 1) throw ParameterError("brute_force_wsr: axis '" + a.name + "' has no points");
    if (total_points() > kMaxPoints)
        throw ParameterError("brute_force_wsr: grid exceeds 1e8 points");
    int residuals = 0;
    for (const auto& b : beams) {
        for (const ParamSource* src : {&b.power, &b.phi, &b.chi})
            if (src->kind == ParamSource::Kind::Axis &&
                (src->axis < 0 || src->axis >= static_cast<int>(axes.size())))
                throw ParameterError("brute_force_wsr: beam references a missing axis");
        if (b.phi.kind == ParamSource::Kind::Residual || b.chi.kind == ParamSource::Kind::Residual)
            throw ParameterError("brute_force_wsr: only powers can be residual");
        if (b.power.kind == ParamSource::Kind::Residual) ++residuals;
    }
    if (residuals > 1) throw ParameterError("brute_force_wsr: at most one residual power");
}

GridSpec GridSpec::scalar(double p_tx, int points) {
    GridSpec g;
    g.axes = {{"p_b1", 0.0, p_tx, points}};
    g.beams = {{ParamSource::on_axis(0)}, {ParamSource::residual()}};
    g.description = "K=1, n_rf=1: P_b on [0, P_tx], P_m = P_tx - P_b";
    return g;
}

GridSpec GridSpec::two_user_diagonal(double p_tx, int points) {
    GridSpec g;
    g.axes = {{"p_b1", 0.0, p_tx, points},
              {"p_b2", 0.0, p_tx, points},
              {"phi_m", 0.0, M_PI / 2.0, points}};
    g.beams = {{ParamSource::on_axis(0), ParamSource::fixed(0.0), ParamSource::fixed(0.0)},
               {ParamSource::on_axis(1), ParamSource::fixed(M_PI / 2.0), ParamSource::fixed(0.0)},
               {ParamSource::residual(), ParamSource::on_axis(2), ParamSource::fixed(0.0)}};
    g.description =
        "K=2, n_rf=2: b_k along e_k with powers on axes, m = [cos phi, sin phi] with residual power";
    return g;
}

OracleResult brute_force_wsr(const ChannelSet& channels, const AnalogPrecoder& analog,
                             const std::vector<double>& weights, double c0_min, double p_tx,
                             double sigma2, const GridSpec& grid, int threads,
                             std::ostream* grid_csv) {
    const int K = channels.k_users();
    const int n = analog.n_rf();
    grid.validate(K, n);
    if (static_cast<int>(weights.size()) != K)
        throw ParameterError("brute_force_wsr: one weight per user required");
    if (!(p_tx > 0.0) || !(sigma2 > 0.0))
        throw ParameterError("brute_force_wsr: p_tx and sigma2 must be > 0");

    const EffectiveChannels eff = effective_channels(analog, channels);
    Evaluator ev{grid, K, n, {}, eff.fgram, weights, 0, c0_min, p_tx, sigma2};
    for (const auto& gk : eff.g) {
        Beam b{cdouble(0.0), cdouble(0.0)};
        for (int a = 0; a < n; ++a) b[a] = gk(a);
        ev.g.push_back(b);
    }
    ev.best_user = static_cast<int>(std::max_element(weights.begin(), weights.end()) - weights.begin());

    const std::uint64_t total = grid.total_points();
    if (grid_csv) threads = 1;
    threads = std::max(1, threads);

    auto scan = [&](std::uint64_t begin, std::uint64_t end, Best& best) {
        std::vector<double> pt(grid.axes.size());
        std::vector<Beam> x(K + 1);
        for (std::uint64_t i = begin; i < end; ++i) {
            ev.decode(i, pt);
            ++best.evaluated;
            double value = -std::numeric_limits<double>::infinity();
            if (ev.beams(pt, x)) value = ev.wsr(x);
            if (grid_csv) {
                for (double v : pt) *grid_csv << v << ',';
                *grid_csv << (std::isfinite(value) ? value : std::nan("")) << '\n';
            }
            if (!std::isfinite(value)) continue;
            ++best.feasible;
            if (value > best.wsr) {
                best.wsr = value;
                best.index = i;
            }
        }
    };

    if (grid_csv) {
        for (const auto& a : grid.axes) *grid_csv << a.name << ',';
        *grid_csv << "wsr\n";
    }

    std::vector<Best> parts(threads);
    {
        std::vector<std::thread> pool;
        const std::uint64_t chunk = (total + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::uint64_t b = std::min(total, chunk * t);
            const std::uint64_t e = std::min(total, b + chunk);
            if (threads == 1)
                scan(b, e, parts[t]);
            else
                pool.emplace_back(scan, b, e, std::ref(parts[t]));
        }
        for (auto& th : pool) th.join();
    }

    Best best;
    for (const auto& p : parts) {
        best.evaluated += p.evaluated;
        best.feasible += p.feasible;
        if (p.wsr > best.wsr || (p.wsr == best.wsr && p.index < best.index)) {
            best.wsr = p.wsr;
            best.index = p.index;
        }
    }

    OracleResult out;
    out.evaluated = best.evaluated;
    out.feasible_points = best.feasible;
    if (best.index == std::numeric_limits<std::uint64_t>::max()) return out;

    std::vector<double> pt(grid.axes.size());
    std::vector<Beam> x(K + 1);
    ev.decode(best.index, pt);
    ev.beams(pt, x);
    out.point = pt;
    for (int k = 0; k < K; ++k) out.b_vecs.push_back(to_vector(x[k], n));
    out.m_vec = to_vector(x[K], n);
    out.c0 = c0_min;
    out.c.assign(K, 0.0);
    out.c[ev.best_user] = std::max(0.0, ev.rc_min(x) - c0_min);

    const ProblemParams params{weights, c0_min, p_tx, sigma2};
    const RateReport rep = evaluate_rates(channels, analog, out.b_vecs, out.m_vec, out.c0, out.c, params);
    bool ok = true;
    for (const auto& s : rep.slacks)
        if (s.value < (s.name == "power" ? -1e-9 * p_tx : -1e-9)) ok = false;
    out.feasible = ok;
    out.wsr = rep.wsr;
    return out;
}

double scalar_optimum(double p_tx, double sigma2, double gain2, double c0_min) {
    if (!(p_tx > 0.0) || !(sigma2 > 0.0) || gain2 < 0.0)
        throw ParameterError("scalar_optimum: invalid scalar instance");
    const double cap = std::log2(1.0 + p_tx * gain2 / sigma2);
    if (!(gain2 > 0.0) || c0_min > cap)
        throw ParameterError("scalar_optimum: multicast threshold exceeds the channel capacity");
    return cap - c0_min;
}

}  // namespace falcon

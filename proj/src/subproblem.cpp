// SPDX-License-Identifier: Apache-2.0
#include "falcon/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace falcon {
namespace {

constexpr int kMaxDim = 16;
const double kInvLn2 = 1.0 / std::numbers::ln2;

bool is_hermitian(const CMatrix& a, double tol) {
    return (a - a.adjoint()).norm() <= tol * std::max(1.0, a.norm());
}

// Variable layout of the reduced, noise-normalized program.
struct Layout {
    int k_users = 0;
    int dim = 0;  // reduced matrix dimension
    bool ldm = false;

    int block_size() const { return dim * dim; }
    ipm::HermitianBlock b_block(int k) const { return {k * block_size(), dim}; }
    ipm::HermitianBlock m_block() const { return {k_users * block_size(), dim}; }
    int c0() const { return (k_users + 1) * block_size(); }
    // C_k is eliminated in LDM mode
    int c(int k) const { return c0() + 1 + k; }
    int scalars_base() const { return c0() + 1 + (ldm ? 0 : k_users); }
    int r(int k) const { return scalars_base() + k; }
    int t(int k) const { return scalars_base() + k_users + k; }
    int z(int k) const { return scalars_base() + 2 * k_users + k; }
    int q(int k) const { return scalars_base() + 3 * k_users + k; }
    // epigraph variable y_k <= log2 r_k keeps the objective linear
    int y(int k) const { return scalars_base() + 4 * k_users + k; }
    int n_vars() const { return scalars_base() + 5 * k_users; }
};

// X = lift X' lift^H maps reduced variables back to n_rf x n_rf matrices.
struct Reduction {
    CMatrix lift;      // n_rf x d
    CMatrix unlift;    // d x n_rf, unlift * lift = I
    std::vector<CVector> gains;  // reduced g_k
};

Reduction reduce(const SubproblemParams& params) {
    const int n = params.n_rf();
    Eigen::SelfAdjointEigenSolver<CMatrix> fe(params.fgram);
    const RVector lam = fe.eigenvalues();
    const double lam_max = lam.maxCoeff();
    if (!(lam_max > 0.0)) throw ParameterError("solve_subproblem: F^H F is zero");
    // Rank-deficient F (repeated analog columns) is fine: the channels see only
    // range(F^H F), so the square roots are taken there and the null space dropped.
    RVector inv_half = RVector::Zero(n), half = RVector::Zero(n);
    for (int i = 0; i < n; ++i)
        if (lam[i] > 1e-10 * lam_max) {
            half[i] = std::sqrt(lam[i]);
            inv_half[i] = 1.0 / half[i];
        }
    const CMatrix& v = fe.eigenvectors();
    const CMatrix s_inv_half = v * inv_half.asDiagonal() * v.adjoint();
    const CMatrix s_half = v * half.asDiagonal() * v.adjoint();

    std::vector<CVector> whitened;
    CMatrix span = CMatrix::Zero(n, n);
    for (const auto& g : params.grams) {
        Eigen::SelfAdjointEigenSolver<CMatrix> ge(g);
        const double top = std::max(ge.eigenvalues()[n - 1], 0.0);
        const CVector gk = std::sqrt(top) * ge.eigenvectors().col(n - 1);
        whitened.push_back(s_inv_half * gk);
        span += whitened.back() * whitened.back().adjoint();
    }

    Eigen::SelfAdjointEigenSolver<CMatrix> se(span);
    const double top = se.eigenvalues()[n - 1];
    std::vector<int> keep;
    for (int i = n - 1; i >= 0; --i)
        if (se.eigenvalues()[i] > 1e-12 * top && top > 0.0) keep.push_back(i);
    if (keep.empty()) keep.push_back(n - 1);

    CMatrix u(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) u.col(i) = se.eigenvectors().col(keep[i]);

    Reduction red;
    red.lift = s_inv_half * u;
    red.unlift = u.adjoint() * s_half;
    for (const auto& w : whitened) red.gains.push_back(u.adjoint() * w);
    return red;
}

ipm::Problem build_problem(const SubproblemParams& params, const Layout& lay,
                           const Reduction& red) {
    const int K = lay.k_users;
    const int n = lay.n_vars();
    const double p_hat = params.p_tx / params.sigma2;

    std::vector<RVector> gram_fn;  // Tr(G_k X') as a functional on one block
    for (const auto& g : red.gains) gram_fn.push_back(ipm::trace_functional(g * g.adjoint()));
    const RVector power_fn = ipm::trace_functional(CMatrix::Identity(lay.dim, lay.dim));

    ipm::Problem prob;
    prob.n_vars = n;
    prob.objective = ipm::SmoothFunction(n);
    for (int k = 0; k < K; ++k) {
        if (!lay.ldm) prob.objective.linear[lay.c(k)] = -params.weights[k];
        prob.objective.linear[lay.y(k)] = -params.weights[k];
    }

    auto add_gain = [&](ipm::SmoothFunction& f, const ipm::HermitianBlock& blk, int k, double s) {
        f.linear.segment(blk.offset, blk.size()) += s * gram_fn[k];
    };

    for (int k = 0; k < K; ++k) {
        // private AM-GM bound
        ipm::SmoothFunction f(n);
        f.squares.push_back({lay.r(k), params.alpha[k] / 2.0});
        f.squares.push_back({lay.t(k), 1.0 / (2.0 * params.alpha[k])});
        f.linear[lay.t(k)] = -1.0;
        add_gain(f, lay.b_block(k), k, -1.0);
        prob.constraints.push_back(std::move(f));
    }
    for (int k = 0; k < K; ++k) {
        // common AM-GM bound
        ipm::SmoothFunction f(n);
        f.squares.push_back({lay.z(k), params.beta[k] / 2.0});
        f.squares.push_back({lay.q(k), 1.0 / (2.0 * params.beta[k])});
        f.linear[lay.q(k)] = -1.0;
        add_gain(f, lay.m_block(), k, -1.0);
        prob.constraints.push_back(std::move(f));
    }
    for (int k = 0; k < K; ++k) {
        // private interference-plus-noise bound
        ipm::SmoothFunction f(n);
        for (int j = 0; j < K; ++j)
            if (j != k) add_gain(f, lay.b_block(j), k, 1.0);
        f.constant = 1.0;
        f.linear[lay.t(k)] = -1.0;
        prob.constraints.push_back(std::move(f));
    }
    for (int k = 0; k < K; ++k) {
        // common rate split
        ipm::SmoothFunction f(n);
        f.linear[lay.c0()] = 1.0;
        if (!lay.ldm)
            for (int j = 0; j < K; ++j) f.linear[lay.c(j)] = 1.0;
        f.neg_logs.push_back({lay.z(k), kInvLn2});
        prob.constraints.push_back(std::move(f));
    }
    for (int k = 0; k < K; ++k) {
        // common-stream interference-plus-noise bound
        ipm::SmoothFunction f(n);
        for (int j = 0; j < K; ++j) add_gain(f, lay.b_block(j), k, 1.0);
        f.constant = 1.0;
        f.linear[lay.q(k)] = -1.0;
        prob.constraints.push_back(std::move(f));
    }
    {
        ipm::SmoothFunction f(n);
        for (int k = 0; k < K; ++k) f.linear.segment(lay.b_block(k).offset, lay.block_size()) = power_fn;
        f.linear.segment(lay.m_block().offset, lay.block_size()) = power_fn;
        f.constant = -p_hat;
        prob.constraints.push_back(std::move(f));
    }
    {
        ipm::SmoothFunction f(n);
        f.constant = params.c0_min;
        f.linear[lay.c0()] = -1.0;
        prob.constraints.push_back(std::move(f));
    }
    if (!lay.ldm) {
        for (int k = 0; k < K; ++k) {
            ipm::SmoothFunction f(n);
            f.linear[lay.c(k)] = -1.0;
            prob.constraints.push_back(std::move(f));
        }
    }
    for (int k = 0; k < K; ++k) {
        for (int var : {lay.r(k), lay.z(k)}) {
            ipm::SmoothFunction f(n);
            f.constant = 1.0;
            f.linear[var] = -1.0;
            prob.constraints.push_back(std::move(f));
        }
    }
    for (int k = 0; k < K; ++k) {
        // y_k <= log2 r_k, with y_k >= -1 so a zero weight leaves it bounded
        ipm::SmoothFunction f(n);
        f.linear[lay.y(k)] = 1.0;
        f.neg_logs.push_back({lay.r(k), kInvLn2});
        prob.constraints.push_back(std::move(f));
        ipm::SmoothFunction lower(n);
        lower.constant = -1.0;
        lower.linear[lay.y(k)] = -1.0;
        prob.constraints.push_back(std::move(lower));
    }
    // Redundant r_k > 0 and z_k > 0: -log(log r - y) - log r is the self-concordant
    // barrier of the log hypograph, the first term alone is not.
    for (int k = 0; k < K; ++k) {
        for (int var : {lay.r(k), lay.z(k)}) {
            ipm::SmoothFunction f(n);
            f.linear[var] = -1.0;
            prob.constraints.push_back(std::move(f));
        }
    }
    for (int k = 0; k < K; ++k) prob.blocks.push_back(lay.b_block(k));
    prob.blocks.push_back(lay.m_block());
    return prob;
}

RVector default_start(const SubproblemParams& params, const Layout& lay, const Reduction& red) {
    const int K = lay.k_users;
    const double p_hat = params.p_tx / params.sigma2;
    const double rho = p_hat / (2.0 * (K + 1) * lay.dim);
    RVector x = RVector::Zero(lay.n_vars());
    const CMatrix eye = rho * CMatrix::Identity(lay.dim, lay.dim);
    for (int k = 0; k < K; ++k) ipm::pack_hermitian(eye, lay.b_block(k), x);
    ipm::pack_hermitian(eye, lay.m_block(), x);
    x[lay.c0()] = params.c0_min;
    if (!lay.ldm)
        for (int k = 0; k < K; ++k) x[lay.c(k)] = 1e-3;
    for (int k = 0; k < K; ++k) {
        const double gk = rho * red.gains[k].squaredNorm();
        x[lay.r(k)] = 1.0 + 1e-3;
        x[lay.z(k)] = 1.0 + 1e-3;
        x[lay.t(k)] = 1.0 + (K - 1) * gk + 1e-3;
        x[lay.q(k)] = 1.0 + K * gk + 1e-3;
        x[lay.y(k)] = -0.5;
    }
    return x;
}

RVector warm_start(const SubproblemSolution& warm, const SubproblemParams& params,
                   const Layout& lay, const Reduction& red) {
    const int K = lay.k_users;
    const double s2 = params.sigma2;
    RVector x = RVector::Zero(lay.n_vars());
    for (int k = 0; k < K; ++k)
        ipm::pack_hermitian(red.unlift * warm.b_mats[k] * red.unlift.adjoint() / s2, lay.b_block(k), x);
    ipm::pack_hermitian(red.unlift * warm.m_mat * red.unlift.adjoint() / s2, lay.m_block(), x);
    x[lay.c0()] = warm.c0;
    if (!lay.ldm)
        for (int k = 0; k < K; ++k) x[lay.c(k)] = warm.c[k];
    for (int k = 0; k < K; ++k) {
        x[lay.r(k)] = warm.r[k];
        x[lay.t(k)] = warm.t[k] / s2;
        x[lay.z(k)] = warm.z[k];
        x[lay.q(k)] = warm.q[k] / s2;
        const double lr = std::log2(std::max(warm.r[k], 1.0));
        x[lay.y(k)] = lr - 1e-3 * (1.0 + lr);
    }
    return x;
}

bool warm_compatible(const SubproblemSolution& warm, const SubproblemParams& params) {
    const int K = params.k_users();
    return static_cast<int>(warm.b_mats.size()) == K && warm.m_mat.rows() == params.n_rf() &&
           static_cast<int>(warm.r.size()) == K && static_cast<int>(warm.t.size()) == K &&
           static_cast<int>(warm.z.size()) == K && static_cast<int>(warm.q.size()) == K &&
           static_cast<int>(warm.c.size()) == K;
}

}  // namespace

void SubproblemParams::validate() const {
    const int K = k_users();
    if (K < 1 || K > kMaxDim) throw ParameterError("subproblem: K must be in [1, 16]");
    if (n_rf() < 1 || n_rf() > kMaxDim || fgram.cols() != fgram.rows())
        throw ParameterError("subproblem: n_rf must be in [1, 16] with square F^H F");
    if (!(sigma2 > 0.0) || !(p_tx > 0.0)) throw ParameterError("subproblem: sigma2 and p_tx must be > 0");
    if (static_cast<int>(weights.size()) != K || static_cast<int>(alpha.size()) != K ||
        static_cast<int>(beta.size()) != K)
        throw ParameterError("subproblem: weights, alpha, beta need one entry per user");
    for (int k = 0; k < K; ++k) {
        if (!(weights[k] >= 0.0)) throw ParameterError("subproblem: weights must be non-negative");
        if (!(alpha[k] > 0.0) || !(beta[k] > 0.0))
            throw ParameterError("subproblem: alpha and beta must be > 0");
    }
    if (!std::isfinite(c0_min) || c0_min < 0.0) throw ParameterError("subproblem: c0_min must be >= 0");
    if (!is_hermitian(fgram, 1e-10)) throw ParameterError("subproblem: F^H F not Hermitian");
    for (const auto& g : grams) {
        if (g.rows() != n_rf() || g.cols() != n_rf()) throw ParameterError("subproblem: G_k has wrong shape");
        if (!is_hermitian(g, 1e-10)) throw ParameterError("subproblem: G_k not Hermitian");
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(g, Eigen::EigenvaluesOnly);
        const auto& ev = eig.eigenvalues();
        const double top = std::max(std::abs(ev[n_rf() - 1]), std::abs(ev[0]));
        if (n_rf() > 1 && std::abs(ev[n_rf() - 2]) > 1e-9 * std::max(top, 1e-300))
            throw ParameterError("subproblem: G_k must have rank at most one");
        if (ev[0] < -1e-9 * std::max(top, 1e-300)) throw ParameterError("subproblem: G_k not PSD");
    }
}

SubproblemSolution solve_subproblem(const SubproblemParams& params, double tol,
                                    const std::optional<SubproblemSolution>& warm) {
    params.validate();
    if (!(tol > 0.0) || tol > 1e-2) throw ParameterError("solve_subproblem: tol must be in (0, 1e-2]");

    const Reduction red = reduce(params);
    Layout lay;
    lay.k_users = params.k_users();
    lay.dim = static_cast<int>(red.lift.cols());
    lay.ldm = params.ldm;
    const ipm::Problem prob = build_problem(params, lay, red);

    RVector x0 = default_start(params, lay, red);
    if (warm && warm_compatible(*warm, params) && warm->status == SolveStatus::Optimal) {
        // The previous optimum is strictly feasible for contracted parameters; only
        // pull it inward when rounding in the lift left it on a boundary.
        RVector xw = warm_start(*warm, params, lay, red);
        for (double pull : {0.0, 1e-6, 1e-3}) {
            const RVector xp = (1.0 - pull) * xw + pull * default_start(params, lay, red);
            if (!xp.allFinite() || !(ipm::min_block_eigenvalue(prob, xp) > 0.0)) continue;
            x0 = xp;  // phase I starts from here if no pull makes it feasible
            if (ipm::max_violation(prob, xp) < 0.0) break;
        }
    }

    ipm::Options opts;
    opts.tol = tol;
    opts.infeasibility_threshold = tol * std::max(1.0, params.p_tx / params.sigma2);
    const ipm::Result res = ipm::solve(prob, x0, opts);

    SubproblemSolution sol;
    sol.status = res.status;
    sol.phase1_value = res.phase1_value;
    sol.newton_steps = res.newton_steps;
    const int K = lay.k_users;
    const double s2 = params.sigma2;
    const RVector& x = res.x;
    for (int k = 0; k < K; ++k)
        sol.b_mats.push_back(s2 * red.lift * ipm::unpack_hermitian(x, lay.b_block(k)) * red.lift.adjoint());
    sol.m_mat = s2 * red.lift * ipm::unpack_hermitian(x, lay.m_block()) * red.lift.adjoint();
    sol.c0 = x[lay.c0()];
    sol.c.assign(K, 0.0);
    if (!lay.ldm)
        for (int k = 0; k < K; ++k) sol.c[k] = x[lay.c(k)];
    for (int k = 0; k < K; ++k) {
        sol.r.push_back(x[lay.r(k)]);
        sol.t.push_back(s2 * x[lay.t(k)]);
        sol.z.push_back(x[lay.z(k)]);
        sol.q.push_back(s2 * x[lay.q(k)]);
    }
    sol.objective = subproblem_objective(sol, params.weights);
    sol.kkt_residual = res.gap / (1.0 + std::abs(sol.objective));
    return sol;
}

double subproblem_objective(const SubproblemSolution& sol, const std::vector<double>& weights) {
    double obj = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k)
        obj += weights[k] * (sol.c[k] + std::log2(sol.r[k]));
    return obj;
}

SlackReport check_feasible(const SubproblemSolution& sol, const SubproblemParams& params,
                           double tol) {
    const int K = params.k_users();
    if (static_cast<int>(sol.b_mats.size()) != K || sol.m_mat.rows() != params.n_rf())
        throw ParameterError("check_feasible: solution shape differs from params");
    const double s2 = params.sigma2;
    SlackReport rep;
    rep.feasible = true;
    auto push = [&](const char* name, int k, double value, double scale) {
        rep.slacks.push_back({name, k, value});
        if (value < -tol * scale) rep.feasible = false;
    };
    auto tr = [](const CMatrix& a, const CMatrix& b) { return (a * b).trace().real(); };
    double split = sol.c0;
    for (double c : sol.c) split += c;

    for (int k = 0; k < K; ++k) {
        const double a = params.alpha[k];
        const double v = s2 * a * sol.r[k] * sol.r[k] / 2.0 + sol.t[k] * sol.t[k] / (2.0 * a * s2) -
                         sol.t[k] - tr(params.grams[k], sol.b_mats[k]);
        push("private_amgm", k, -v, std::max(s2, sol.t[k]));
    }
    for (int k = 0; k < K; ++k) {
        const double b = params.beta[k];
        const double v = s2 * b * sol.z[k] * sol.z[k] / 2.0 + sol.q[k] * sol.q[k] / (2.0 * b * s2) -
                         sol.q[k] - tr(params.grams[k], sol.m_mat);
        push("common_amgm", k, -v, std::max(s2, sol.q[k]));
    }
    for (int k = 0; k < K; ++k) {
        double interference = s2;
        for (int j = 0; j < K; ++j)
            if (j != k) interference += tr(params.grams[k], sol.b_mats[j]);
        push("private_interference", k, sol.t[k] - interference, std::max(s2, sol.t[k]));
    }
    for (int k = 0; k < K; ++k) push("common_rate_split", k, std::log2(sol.z[k]) - split, 1.0);
    for (int k = 0; k < K; ++k) {
        double total = s2;
        for (int j = 0; j < K; ++j) total += tr(params.grams[k], sol.b_mats[j]);
        push("common_interference", k, sol.q[k] - total, std::max(s2, sol.q[k]));
    }
    double power = tr(params.fgram, sol.m_mat);
    for (const auto& b : sol.b_mats) power += tr(params.fgram, b);
    push("power", -1, params.p_tx - power, params.p_tx);
    push("multicast_qos", -1, sol.c0 - params.c0_min, 1.0);
    for (int k = 0; k < K; ++k) push("common_part_nonneg", k, sol.c[k], 1.0);
    for (int k = 0; k < K; ++k) push("r_lower", k, sol.r[k] - 1.0, 1.0);
    for (int k = 0; k < K; ++k) push("z_lower", k, sol.z[k] - 1.0, 1.0);
    for (int k = 0; k < K; ++k) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(sol.b_mats[k], Eigen::EigenvaluesOnly);
        push("psd_B", k, eig.eigenvalues().minCoeff(), std::max(1.0, sol.b_mats[k].norm()));
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(sol.m_mat, Eigen::EigenvaluesOnly);
    push("psd_M", -1, eig.eigenvalues().minCoeff(), std::max(1.0, sol.m_mat.norm()));
    return rep;
}

std::pair<CVector, double> extract_rank_one(const CMatrix& h) {
    if (h.rows() != h.cols() || h.rows() < 1) throw ParameterError("extract_rank_one: square input required");
    if (!is_hermitian(h, 1e-9)) throw ParameterError("extract_rank_one: input is not Hermitian");
    const int n = static_cast<int>(h.rows());
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (h + h.adjoint()));
    const double l1 = eig.eigenvalues()[n - 1];
    if (!(l1 > 0.0)) return {CVector::Zero(n), 0.0};
    const double l2 = n > 1 ? std::max(eig.eigenvalues()[n - 2], 0.0) : 0.0;
    CVector v = std::sqrt(l1) * eig.eigenvectors().col(n - 1);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    const double mag = std::abs(v[big]);
    if (mag > 0.0) v *= std::conj(v[big]) / mag;
    v[big] = std::abs(v[big]);
    return {v, l2 / l1};
}

CMatrix reduce_rank(const CMatrix& x, const std::vector<CMatrix>& constraints, double rel_tol) {
    if (x.rows() != x.cols()) throw ParameterError("reduce_rank: square input required");
    for (const auto& a : constraints)
        if (a.rows() != x.rows() || a.cols() != x.cols()) throw ParameterError("reduce_rank: constraint size mismatch");
    const int n = static_cast<int>(x.rows());
    CMatrix cur = 0.5 * (x + x.adjoint());
    for (int pass = 0; pass < n; ++pass) {
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(cur);
        const RVector& lam = eig.eigenvalues();
        const double lam_max = lam[n - 1];
        if (!(lam_max > 0.0)) break;
        int r = 0;
        while (r < n && lam[n - 1 - r] > rel_tol * lam_max) ++r;
        if (r <= 1) break;

        // X = L L^H on the large eigenspace, L = V D^{1/2}
        CMatrix l(n, r);
        for (int i = 0; i < r; ++i) l.col(i) = std::sqrt(lam[n - 1 - i]) * eig.eigenvectors().col(n - 1 - i);
        CMatrix rest = cur - l * l.adjoint();

        // r x r Hermitian basis: diagonal, real symmetric, imaginary antisymmetric
        std::vector<CMatrix> basis;
        for (int i = 0; i < r; ++i)
            for (int j = i; j < r; ++j) {
                CMatrix e = CMatrix::Zero(r, r);
                if (i == j) {
                    e(i, i) = 1.0;
                    basis.push_back(e);
                    continue;
                }
                e(i, j) = e(j, i) = 1.0;
                basis.push_back(e);
                e(i, j) = cdouble(0.0, 1.0);
                e(j, i) = cdouble(0.0, -1.0);
                basis.push_back(e);
            }
        const int dof = r * r;
        const int m = static_cast<int>(constraints.size());
        RMatrix k = RMatrix::Zero(std::max(m, 1), dof);
        for (int i = 0; i < m; ++i) {
            const CMatrix a = l.adjoint() * constraints[i] * l;
            for (int b = 0; b < dof; ++b) k(i, b) = (a * basis[b]).trace().real();
            const double nrm = k.row(i).norm();
            if (nrm > 0.0) k.row(i) /= nrm;
        }
        Eigen::JacobiSVD<RMatrix> svd(k, Eigen::ComputeFullV);
        const RVector w = svd.matrixV().col(dof - 1);
        if ((k * w).norm() > 1e-9) break;

        CMatrix dir = CMatrix::Zero(r, r);
        for (int b = 0; b < dof; ++b) dir += w[b] * basis[b];
        Eigen::SelfAdjointEigenSolver<CMatrix> de(dir, Eigen::EigenvaluesOnly);
        // the null direction and its negative both qualify; step toward the larger eigenvalue
        double top = de.eigenvalues()[r - 1];
        if (-de.eigenvalues()[0] > top) {
            dir = -dir;
            top = -de.eigenvalues()[0];
        }
        if (!(top > 0.0)) break;
        const CMatrix y = CMatrix::Identity(r, r) - dir / top;
        cur = l * y * l.adjoint() + rest;
        cur = 0.5 * (cur + cur.adjoint());
    }
    return cur;
}

}  // namespace falcon
